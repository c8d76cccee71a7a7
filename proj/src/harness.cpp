#include "dreptile/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dreptile/errors.hpp"
#include "dreptile/rng.hpp"

namespace dreptile {

std::string to_string(Method m) {
  switch (m) {
    case Method::DReptile: return "DREPTILE";
    case Method::Nft: return "NFT";
    case Method::None: return "NONE";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "DREPTILE") return Method::DReptile;
  if (s == "NFT") return Method::Nft;
  if (s == "NONE") return Method::None;
  throw ConfigError("unknown method: " + s);
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.family);
  validate(cfg.meta);
  if (cfg.seeds.empty()) throw ConfigError("ExperimentConfig: at least one seed required");
  if (cfg.methods.empty()) throw ConfigError("ExperimentConfig: at least one method required");
  if (!std::is_sorted(cfg.finetune_sizes.begin(), cfg.finetune_sizes.end())) {
    throw ConfigError("ExperimentConfig: finetune_sizes must be ascending");
  }
  if (cfg.finetune_repeats < 1) throw ConfigError("ExperimentConfig: finetune_repeats must be >= 1");
  if (!(cfg.finetune_lr > 0)) throw ConfigError("ExperimentConfig: finetune_lr must be > 0");
  if (!(cfg.nft.lr > 0)) throw ConfigError("ExperimentConfig: nft lr must be > 0");
  if (!(cfg.holdout_fraction >= 0 && cfg.holdout_fraction < 1)) {
    throw ConfigError("ExperimentConfig: holdout_fraction must lie in [0,1)");
  }
  if (cfg.init_scale < 0) throw ConfigError("ExperimentConfig: init_scale must be >= 0");
}

namespace {

OptimizerConfig optimizer_for(InnerOptimizer kind, double lr, const AdamConfig& moments) {
  if (kind == InnerOptimizer::Sgd) return SgdConfig{lr};
  AdamConfig a = moments;
  a.lr = lr;
  return a;
}

std::vector<Task> tasks_for(const TaskFamily& family, SlotKind kind,
                            const std::shared_ptr<const ModelContract>& model) {
  std::vector<Task> tasks;
  for (const auto& ds : family.train) {
    auto data = std::make_shared<const DomainDataset>(ds);
    auto source = std::make_shared<const DomainExamples>(data, kind, *family.registry);
    if (!source->has_examples()) continue;
    tasks.push_back({ds.name, model, source});
  }
  return tasks;
}

bool has_kind(const SlotRegistry& registry, const DomainDataset& ds, SlotKind kind) {
  return std::any_of(ds.slots.begin(), ds.slots.end(), [&](SlotId s) { return registry.at(s).kind == kind; });
}

ParamVector pretrain_model(const ExperimentConfig& cfg, const std::vector<Task>& tasks,
                           const ModelContract& model, Method method, std::uint64_t seed,
                           std::size_t& steps) {
  const ParamVector init = model.init_params(mix_seed(seed, "init"));
  steps = 0;
  if (method == Method::None || tasks.empty()) return init;
  if (method == Method::DReptile) {
    steps = d_reptile_gradient_steps(cfg.meta);
    return d_reptile_from(cfg.meta, tasks, init, mix_seed(seed, "dreptile"));
  }
  NftConfig nft;
  nft.batch_size = cfg.nft.batch_size;
  nft.optimizer = optimizer_for(cfg.nft.optimizer, cfg.nft.lr, cfg.meta.adam);
  if (cfg.nft.equalize_budget) {
    nft.max_steps = d_reptile_gradient_steps(cfg.meta);
    std::size_t pooled = 0;
    for (const auto& t : tasks) pooled += t.size();
    const std::size_t per_epoch =
        (nft.batch_size == 0 || nft.batch_size >= pooled) ? 1 : (pooled + nft.batch_size - 1) / nft.batch_size;
    nft.epochs = (nft.max_steps + per_epoch - 1) / per_epoch;
  } else {
    nft.epochs = cfg.nft.epochs;
  }
  steps = nft_gradient_steps(tasks, nft);
  return nft_pretrain_from(tasks, nft, init, mix_seed(seed, "nft"));
}

std::string turn_key(const Dialogue& d, std::size_t t) {
  return std::to_string(d.id) + "/" + std::to_string(t);
}

}  // namespace

SeedContext prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedContext ctx;
  ctx.seed = seed;
  FamilySpec spec = cfg.family;
  spec.seed = seed;
  ctx.family = generate_family(spec);
  const auto& registry = ctx.family.registry;
  ctx.cat_model = std::make_shared<const CategoricalSlotModel>(registry, spec.feature_dim, cfg.init_scale);
  ctx.ext_model = std::make_shared<const ExtractiveSlotModel>(registry, spec.feature_dim, cfg.init_scale);
  ctx.cat_tasks = tasks_for(ctx.family, SlotKind::Categorical, ctx.cat_model);
  ctx.ext_tasks = tasks_for(ctx.family, SlotKind::Extractive, ctx.ext_model);
  auto split = split_holdout(ctx.family.target, cfg.holdout_fraction, mix_seed(seed, "holdout"));
  ctx.finetune_pool = std::move(split.pool);
  ctx.eval = std::move(split.eval);
  if (ctx.eval.dialogues.empty()) throw ConfigError("holdout leaves no evaluation dialogues");
  for (auto id : ctx.family.target.slots) {
    const auto& s = registry->at(id);
    ctx.partition[s.name] = s.shared() ? SlotClass::Shared : SlotClass::Unique;
  }
  return ctx;
}

Initialization pretrain(const ExperimentConfig& cfg, const SeedContext& ctx, Method method) {
  Initialization out;
  std::size_t cat_steps = 0, ext_steps = 0;
  out.categorical = pretrain_model(cfg, ctx.cat_tasks, *ctx.cat_model, method, mix_seed(ctx.seed, "cat"), cat_steps);
  out.extractive = pretrain_model(cfg, ctx.ext_tasks, *ctx.ext_model, method, mix_seed(ctx.seed, "ext"), ext_steps);
  out.gradient_steps = std::max(cat_steps, ext_steps);
  return out;
}

Initialization finetune(const ExperimentConfig& cfg, const SeedContext& ctx, const Initialization& init,
                        std::size_t n_dialogues, std::size_t repeat) {
  Initialization out = init;
  if (n_dialogues == 0) return out;
  const auto chosen = select_finetune_dialogues(ctx.finetune_pool, n_dialogues);
  auto data = std::make_shared<const DomainDataset>(subset(ctx.finetune_pool, chosen));
  const auto opt = optimizer_for(cfg.finetune_optimizer, cfg.finetune_lr, cfg.meta.adam);
  const std::uint64_t seed = mix_seed(mix_seed(ctx.seed, n_dialogues), repeat);
  const auto& registry = *ctx.family.registry;
  if (has_kind(registry, *data, SlotKind::Categorical)) {
    DomainExamples source(data, SlotKind::Categorical, registry);
    out.categorical = fine_tune(init.categorical, &source, *ctx.cat_model, cfg.finetune_steps, opt,
                                cfg.finetune_batch_size, mix_seed(seed, "cat"));
  }
  if (has_kind(registry, *data, SlotKind::Extractive)) {
    DomainExamples source(data, SlotKind::Extractive, registry);
    out.extractive = fine_tune(init.extractive, &source, *ctx.ext_model, cfg.finetune_steps, opt,
                               cfg.finetune_batch_size, mix_seed(seed, "ext"));
  }
  return out;
}

TargetEvaluation evaluate_target(const SeedContext& ctx, const Initialization& params) {
  const auto& registry = *ctx.family.registry;
  TargetEvaluation out;
  for (const auto& dialogue : ctx.eval.dialogues) {
    for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
      const auto& turn = dialogue.turns[t];
      TurnEval cat{turn_key(dialogue, t), {}};
      TurnEval ext{turn_key(dialogue, t), {}};
      for (std::size_t k = 0; k < turn.payloads.size(); ++k) {
        const auto& p = turn.payloads[k];
        const auto& schema = registry.at(p.slot);
        if (schema.kind == SlotKind::Categorical) {
          const auto pred = ctx.cat_model->predict_slot(params.categorical, *p.data, p.slot);
          cat.slots.push_back({schema.name, pred.value, gold_string(turn.gold[k], schema.kind)});
        } else {
          const auto pred = ctx.ext_model->predict_slot(params.extractive, *p.data, p.length, p.slot);
          ext.slots.push_back({schema.name, pred.value, gold_string(turn.gold[k], schema.kind)});
        }
      }
      out.categorical.push_back(std::move(cat));
      out.extractive.push_back(std::move(ext));
    }
  }
  out.merged = merge_turns(out.categorical, out.extractive);
  return out;
}

namespace {

struct CellMetrics {
  std::optional<double> jga, combined, shared, unique;
};

CellMetrics measure(const SeedContext& ctx, const Initialization& params) {
  const auto ev = evaluate_target(ctx, params);
  const auto& registry = *ctx.family.registry;
  CellMetrics m;
  const bool has_cat = has_kind(registry, ctx.eval, SlotKind::Categorical);
  m.jga = joint_goal_accuracy(has_cat ? ev.categorical : ev.extractive);
  m.combined = combined_jga(ev.categorical, ev.extractive);
  const auto report = slotwise_report(ev.merged, ctx.partition);
  m.shared = report.shared_mean;
  m.unique = report.unique_mean;
  return m;
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : xs) {
    if (!x) continue;
    sum += *x;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<RunRecord> run_cell(const ExperimentConfig& cfg, const SeedContext& ctx, Method method) {
  const std::string name = to_string(method) + cfg.label_suffix;
  std::vector<RunRecord> rows;
  Initialization init;
  try {
    init = pretrain(cfg, ctx, method);
  } catch (const std::exception& e) {
    for (auto size : cfg.finetune_sizes) {
      RunRecord r;
      r.method = name;
      r.finetune_size = size;
      r.seed = ctx.seed;
      r.failed = true;
      r.error = e.what();
      rows.push_back(std::move(r));
    }
    return rows;
  }
  for (auto size : cfg.finetune_sizes) {
    RunRecord r;
    r.method = name;
    r.finetune_size = size;
    r.seed = ctx.seed;
    r.inner_steps_total = init.gradient_steps;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      // Zero-shot cells are deterministic, so one repeat suffices.
      const std::size_t repeats = size == 0 ? 1 : cfg.finetune_repeats;
      std::vector<std::optional<double>> jga, combined, shared, unique;
      for (std::size_t rep = 0; rep < repeats; ++rep) {
        const auto m = measure(ctx, finetune(cfg, ctx, init, size, rep));
        jga.push_back(m.jga);
        combined.push_back(m.combined);
        shared.push_back(m.shared);
        unique.push_back(m.unique);
      }
      r.jga = mean_defined(jga);
      r.combined_jga = mean_defined(combined);
      r.shared_active_acc = mean_defined(shared);
      r.unique_active_acc = mean_defined(unique);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
      r.jga = r.combined_jga = r.shared_active_acc = r.unique_active_acc = std::nullopt;
    }
    if (cfg.record_wall_time) {
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_methods = cfg.methods.size();

  std::vector<std::optional<SeedContext>> contexts(n_seeds);
  std::vector<std::string> context_errors(n_seeds);
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
  for (std::size_t s = 0; s < n_seeds; ++s) {
    try {
      contexts[s] = prepare_seed(cfg, cfg.seeds[s]);
    } catch (const std::exception& e) {
      context_errors[s] = e.what();
    }
  }

  // One slot per (method, seed) cell; assembled below in a fixed order.
  std::vector<std::vector<RunRecord>> cells(n_seeds * n_methods);
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::size_t mi = c / n_seeds;
    const std::size_t si = c % n_seeds;
    if (!contexts[si]) {
      for (auto size : cfg.finetune_sizes) {
        RunRecord r;
        r.method = to_string(cfg.methods[mi]) + cfg.label_suffix;
        r.finetune_size = size;
        r.seed = cfg.seeds[si];
        r.failed = true;
        r.error = context_errors[si];
        cells[c].push_back(std::move(r));
      }
      continue;
    }
    cells[c] = run_cell(cfg, *contexts[si], cfg.methods[mi]);
  }

  // Order: method (config order), size, seed (config order).
  std::vector<RunRecord> out;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (std::size_t z = 0; z < cfg.finetune_sizes.size(); ++z) {
      for (std::size_t si = 0; si < n_seeds; ++si) out.push_back(cells[mi * n_seeds + si][z]);
    }
  }
  for (const auto& r : out) {
    if (r.failed) {
      std::cerr << "cell failed: " << r.method << " size=" << r.finetune_size << " seed=" << r.seed
                << ": " << r.error << '\n';
    }
  }
  if (!cfg.output_path.empty()) emit_csv(out, cfg.output_path);
  return out;
}

std::vector<RunRecord> sweep_k(ExperimentConfig cfg, const std::vector<std::size_t>& ks) {
  const std::string out_path = cfg.output_path;
  cfg.output_path.clear();
  cfg.methods = {Method::DReptile};
  std::vector<RunRecord> all;
  for (auto k : ks) {
    cfg.meta.k = k;
    cfg.label_suffix = "-k" + std::to_string(k);
    auto rows = run_experiment(cfg);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  if (!out_path.empty()) emit_csv(all, out_path);
  return all;
}

std::vector<RunRecord> sweep_sampling(ExperimentConfig cfg) {
  const std::string out_path = cfg.output_path;
  cfg.output_path.clear();
  cfg.methods = {Method::DReptile};
  std::vector<RunRecord> all;

  cfg.meta.p_override.clear();
  cfg.meta.sampling = Sampling::Proportional;
  cfg.label_suffix = "-proportional";
  auto rows = run_experiment(cfg);
  all.insert(all.end(), rows.begin(), rows.end());

  cfg.label_suffix = "-uniform";
  cfg.meta.sampling = Sampling::Uniform;
  rows = run_experiment(cfg);
  all.insert(all.end(), rows.begin(), rows.end());

  if (!out_path.empty()) emit_csv(all, out_path);
  return all;
}

// ---------------------------------------------------------------- aggregation

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  std::vector<AggregateRow> rows;
  std::map<std::pair<std::string, std::size_t>, std::size_t> index;
  std::vector<std::vector<double>> jga, combined;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.method, r.finetune_size);
    auto [it, inserted] = index.emplace(key, rows.size());
    if (inserted) {
      rows.push_back({r.method, r.finetune_size, 0, 0, 0, 0, 0});
      jga.emplace_back();
      combined.emplace_back();
    }
    if (r.failed) continue;
    if (r.jga) jga[it->second].push_back(*r.jga);
    if (r.combined_jga) combined[it->second].push_back(*r.combined_jga);
  }
  auto moments = [](const std::vector<double>& xs, double& mean, double& sd) {
    mean = sd = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    for (double x : xs) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(xs.size()));
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    moments(jga[i], rows[i].mean_jga, rows[i].std_jga);
    moments(combined[i], rows[i].mean_combined_jga, rows[i].std_combined_jga);
    rows[i].n = jga[i].size();
  }
  return rows;
}

double mean_of(const std::vector<RunRecord>& records, const std::string& method, std::size_t size,
               std::optional<double> RunRecord::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.method != method || r.finetune_size != size || r.failed || !(r.*field)) continue;
    sum += *(r.*field);
    ++n;
  }
  if (n == 0) throw EvalError("mean_of: no defined values for " + method + " size " + std::to_string(size));
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------- CSV

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fixed6(const std::optional<double>& v) { return v ? fixed6(*v) : "NA"; }

std::optional<double> parse_optional(const std::string& s) {
  if (s == "NA") return std::nullopt;
  return std::stod(s);
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.method << ',' << r.finetune_size << ',' << r.seed << ',' << fixed6(r.jga) << ','
        << fixed6(r.combined_jga) << ',' << fixed6(r.shared_active_acc) << ',' << fixed6(r.unique_active_acc)
        << ',' << r.inner_steps_total << ',' << fixed6(r.wall_ms) << '\n';
  }
}

void emit_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  write_csv(f, records);
  f.flush();
  if (!f) throw DataError("write failed: " + path);
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "method,finetune_size,mean_jga,std_jga,mean_combined_jga,std_combined_jga,n\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.finetune_size << ',' << fixed6(r.mean_jga) << ',' << fixed6(r.std_jga) << ','
        << fixed6(r.mean_combined_jga) << ',' << fixed6(r.std_combined_jga) << ',' << r.n << '\n';
  }
}

void emit_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  write_aggregate_csv(f, rows);
  if (!f) throw DataError("write failed: " + path);
}

std::vector<RunRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw DataError("read_csv: missing or wrong header");
  std::vector<RunRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw DataError("read_csv: line " + std::to_string(line_no) + ": expected 9 fields");
    try {
      RunRecord r;
      r.method = f[0];
      r.finetune_size = std::stoull(f[1]);
      r.seed = std::stoull(f[2]);
      r.jga = parse_optional(f[3]);
      r.combined_jga = parse_optional(f[4]);
      r.shared_active_acc = parse_optional(f[5]);
      r.unique_active_acc = parse_optional(f[6]);
      r.inner_steps_total = std::stoull(f[7]);
      r.wall_ms = std::stod(f[8]);
      r.failed = !r.jga && !r.combined_jga;
      out.push_back(std::move(r));
    } catch (const std::invalid_argument&) {
      throw DataError("read_csv: line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

}  // namespace dreptile
