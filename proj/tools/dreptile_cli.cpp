// Command-line front end: pre-train, fine-tune and evaluate single seeds, or
// run whole experiments and sweeps to CSV.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dreptile/config.hpp"
#include "dreptile/errors.hpp"
#include "dreptile/harness.hpp"
#include "dreptile/param_io.hpp"

namespace {

using namespace dreptile;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string method = "DREPTILE";
  std::size_t size = 0;
  std::string params;
  std::vector<std::size_t> ks{1, 3, 5, 10};
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.out.empty()) cfg.output_path = o.out;
  validate(cfg);
  return cfg;
}

std::uint64_t single_seed(const Options& o, const ExperimentConfig& cfg) {
  return o.seed ? *o.seed : cfg.seeds.front();
}

void save_init(const std::string& prefix, const SeedContext& ctx, const Initialization& init) {
  const auto hash = ctx.family.registry->hash();
  save_params(prefix + ".categorical", {"categorical", hash, init.categorical});
  save_params(prefix + ".extractive", {"extractive", hash, init.extractive});
}

ParamVector load_one(const std::string& path, const std::string& model, const SeedContext& ctx,
                     std::size_t expected) {
  auto saved = load_params(path);
  if (saved.model != model) throw DataError(path + ": holds '" + saved.model + "', expected '" + model + "'");
  if (saved.registry_hash != ctx.family.registry->hash()) {
    throw DataError(path + ": slot layout differs from this config and seed");
  }
  if (saved.params.size() != expected) throw DataError(path + ": wrong parameter count");
  return std::move(saved.params);
}

Initialization load_init(const std::string& prefix, const SeedContext& ctx) {
  if (prefix.empty()) throw ConfigError("--params is required");
  Initialization init;
  init.categorical = load_one(prefix + ".categorical", "categorical", ctx, ctx.cat_model->param_count());
  init.extractive = load_one(prefix + ".extractive", "extractive", ctx, ctx.ext_model->param_count());
  return init;
}

std::string fmt(std::optional<double> v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

void print_summary(const std::vector<RunRecord>& rows) {
  std::printf("%-24s %6s %10s %10s %10s %10s %4s\n", "method", "size", "jga", "std", "combined", "std", "n");
  for (const auto& a : aggregate(rows)) {
    std::printf("%-24s %6zu %10.4f %10.4f %10.4f %10.4f %4zu\n", a.method.c_str(), a.finetune_size, a.mean_jga,
                a.std_jga, a.mean_combined_jga, a.std_combined_jga, a.n);
  }
}

int count_failures(const std::vector<RunRecord>& rows) {
  int n = 0;
  for (const auto& r : rows) n += r.failed;
  return n;
}

int cmd_pretrain(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out <prefix> is required");
  auto cfg = load(o);
  const auto ctx = prepare_seed(cfg, single_seed(o, cfg));
  const auto init = pretrain(cfg, ctx, parse_method(o.method));
  save_init(o.out, ctx, init);
  std::printf("pretrained %s seed=%llu steps=%zu -> %s.{categorical,extractive}\n", o.method.c_str(),
              static_cast<unsigned long long>(ctx.seed), init.gradient_steps, o.out.c_str());
  return 0;
}

int cmd_finetune(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out <prefix> is required");
  auto cfg = load(o);
  const auto ctx = prepare_seed(cfg, single_seed(o, cfg));
  const auto tuned = finetune(cfg, ctx, load_init(o.params, ctx), o.size, 0);
  save_init(o.out, ctx, tuned);
  std::printf("fine-tuned on %zu dialogues -> %s.{categorical,extractive}\n", o.size, o.out.c_str());
  return 0;
}

int cmd_evaluate(const Options& o) {
  auto cfg = load(o);
  const auto ctx = prepare_seed(cfg, single_seed(o, cfg));
  const auto ev = evaluate_target(ctx, load_init(o.params, ctx));
  const auto report = slotwise_report(ev.merged, ctx.partition);
  std::printf("turns %zu\n", ev.merged.size());
  std::printf("jga_categorical %s\n", fmt(joint_goal_accuracy(ev.categorical)).c_str());
  std::printf("combined_jga %s\n", fmt(combined_jga(ev.categorical, ev.extractive)).c_str());
  std::printf("shared_active_acc %s\n", fmt(report.shared_mean).c_str());
  std::printf("unique_active_acc %s\n", fmt(report.unique_mean).c_str());
  for (const auto& [slot, acc] : report.per_slot) {
    std::printf("slot %s %s %s\n", slot.c_str(),
                report.partition.at(slot) == SlotClass::Shared ? "shared" : "unique", fmt(acc).c_str());
  }
  return 0;
}

int finish(const std::vector<RunRecord>& rows, const ExperimentConfig& cfg) {
  if (cfg.output_path.empty()) write_csv(std::cout, rows);
  else print_summary(rows);
  const int failed = count_failures(rows);
  if (failed) {
    std::fprintf(stderr, "%d of %zu cells failed\n", failed, rows.size());
    return 2;
  }
  return 0;
}

int cmd_experiment(const Options& o) {
  const auto cfg = load(o);
  return finish(run_experiment(cfg), cfg);
}

int cmd_sweep_k(const Options& o) {
  const auto cfg = load(o);
  return finish(sweep_k(cfg, o.ks), cfg);
}

int cmd_sweep_sampling(const Options& o) {
  const auto cfg = load(o);
  return finish(sweep_sampling(cfg), cfg);
}

int cmd_dump(const Options& o) {
  auto cfg = load(o);
  std::cout << dump_config(cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"D-REPTILE meta-learning for slot filling on synthetic task families"};
  app.require_subcommand(1);
  Options o;
  int rc = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Family / run seed (overrides the config's seed list)");
  };

  auto* pre = app.add_subcommand("pretrain", "Pre-train both slot models for one seed");
  common(pre);
  pre->add_option("--method", o.method, "DREPTILE | NFT | NONE");
  pre->add_option("--out", o.out, "Output prefix for the parameter files")->required();
  pre->callback([&] { rc = cmd_pretrain(o); });

  auto* ft = app.add_subcommand("finetune", "Fine-tune saved parameters on target dialogues");
  common(ft);
  ft->add_option("--params", o.params, "Prefix of the parameters to start from")->required();
  ft->add_option("--size", o.size, "Number of target dialogues");
  ft->add_option("--out", o.out, "Output prefix")->required();
  ft->callback([&] { rc = cmd_finetune(o); });

  auto* ev = app.add_subcommand("evaluate", "Evaluate saved parameters on held-out target turns");
  common(ev);
  ev->add_option("--params", o.params, "Parameter prefix")->required();
  ev->callback([&] { rc = cmd_evaluate(o); });

  auto* ex = app.add_subcommand("experiment", "Full grid of methods x sizes x seeds to CSV");
  common(ex);
  ex->add_option("--out", o.out, "CSV path (stdout when absent)");
  ex->callback([&] { rc = cmd_experiment(o); });

  auto* sk = app.add_subcommand("sweep-k", "D-REPTILE over several inner step counts");
  common(sk);
  sk->add_option("--out", o.out, "CSV path (stdout when absent)");
  sk->add_option("--k", o.ks, "Inner step counts")->delimiter(',');
  sk->callback([&] { rc = cmd_sweep_k(o); });

  auto* ss = app.add_subcommand("sweep-sampling", "Size-proportional vs uniform domain sampling");
  common(ss);
  ss->add_option("--out", o.out, "CSV path (stdout when absent)");
  ss->callback([&] { rc = cmd_sweep_sampling(o); });

  auto* dump = app.add_subcommand("dump", "Print the effective config with every key");
  common(dump);
  dump->callback([&] { rc = cmd_dump(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
