// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Seed sets and tolerances are pinned here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dreptile/harness.hpp"
#include "support.hpp"

using namespace dreptile;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail, double seconds, double limit = 0) {
  const bool in_time = limit <= 0 || seconds < limit;
  if (!(ok && in_time)) ++failures;
  std::printf("%s  C%-2d %-34s %s [%.1fs%s]\n", ok && in_time ? "PASS" : "FAIL", id, title, detail.c_str(),
              seconds, limit > 0 ? (in_time ? "" : " over limit") : "");
  std::fflush(stdout);
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = first + i;
  return s;
}

const std::vector<std::size_t> kFewShot{1, 2, 4};

double mean_combined(const std::vector<RunRecord>& r, const std::string& method, std::size_t size) {
  return mean_of(r, method, size, &RunRecord::combined_jga);
}

double few_shot(const std::vector<RunRecord>& r, const std::string& method) {
  double s = 0;
  for (auto n : kFewShot) s += mean_combined(r, method, n);
  return s / double(kFewShot.size());
}

Task quadratic_task(const std::string& name, double c) {
  return {name, std::make_shared<QuadraticModel>(ParamVector{c}, 1.0), std::make_shared<UnitExamples>()};
}

Batch full_batch(const ExampleSource& src) {
  Batch b;
  for (std::size_t i = 0; i < src.size(); ++i) src.append_examples(i, b);
  return b;
}

// ---------------------------------------------------------------- C1

void gradient_correctness() {
  const auto t0 = Clock::now();
  const auto reg = testing::mixed_registry();
  const std::size_t dim = 8;
  CategoricalSlotModel cat(reg, dim);
  ExtractiveSlotModel ext(reg, dim);
  Rng rng(20240601);
  double worst_cat = 0, worst_ext = 0;
  for (int i = 0; i < 100; ++i) {
    const auto pc = uniform_params(cat.param_count(), 1000 + i, 1.0);
    const auto bc = testing::random_categorical_batch(rng, *reg, dim, 6);
    worst_cat = std::max(worst_cat, max_relative_error(cat.gradient(pc, bc), finite_diff_grad(cat, pc, bc)));
    const auto pe = uniform_params(ext.param_count(), 5000 + i, 1.0);
    const auto be = testing::random_span_batch(rng, *reg, dim, 8, 6);
    worst_ext = std::max(worst_ext, max_relative_error(ext.gradient(pe, be), finite_diff_grad(ext, pe, be)));
  }
  report(1, "gradient correctness", worst_cat <= 1e-5 && worst_ext <= 1e-5,
         fmt("max rel err categorical %.2e, extractive %.2e (tol 1e-5, 100 draws each)", worst_cat, worst_ext),
         since(t0), 30);
}

// ---------------------------------------------------------------- C2

void k1_reduction() {
  const auto t0 = Clock::now();
  ExperimentConfig exp;
  double worst = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ctx = prepare_seed(exp, seed);
    for (const auto* tasks : {&ctx.cat_tasks, &ctx.ext_tasks}) {
      const ModelContract& model = *tasks->front().model;
      const ParamVector theta = uniform_params(model.param_count(), seed + 40, 0.5);
      MetaConfig cfg;
      cfg.alpha = 0.03;
      cfg.beta = 0.8;
      cfg.k = 1;
      cfg.m = 4;
      cfg.iterations = 1;
      cfg.inner_batch_size = 0;
      const auto out = d_reptile_from(cfg, *tasks, theta, seed);
      auto sampler = domain_weights(*tasks, mix_seed(seed, "domain-sampler"));
      ParamVector pooled(theta.size());
      for (auto j : sample_domains(sampler, cfg.m)) {
        axpy(1.0 / double(cfg.m), model.gradient(theta, full_batch(*(*tasks)[j].source)), pooled);
      }
      ParamVector expected = theta;
      axpy(-cfg.beta * cfg.alpha, pooled, expected);
      worst = std::max(worst, max_abs_difference(out, expected));
    }
  }
  report(2, "k=1 reduction", worst <= 1e-12, fmt("max |update - beta*alpha*pooled grad| = %.2e (tol 1e-12)", worst),
         since(t0));
}

// ---------------------------------------------------------------- C3

void closed_form() {
  const auto t0 = Clock::now();
  double worst = 0;
  // D-REPTILE on quadratic domains against the iterated contraction map.
  const std::vector<double> optima{-2.0, 0.5, 1.0, 4.0};
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < optima.size(); ++i) tasks.push_back(quadratic_task("q" + std::to_string(i), optima[i]));
  for (double alpha : {0.05, 0.2}) {
    for (std::size_t k : {1u, 5u}) {
      MetaConfig cfg;
      cfg.alpha = alpha;
      cfg.beta = 0.5;
      cfg.k = k;
      cfg.m = 3;
      cfg.iterations = 200;
      cfg.sampling = Sampling::Uniform;
      const std::uint64_t seed = 7 + k;
      const auto theta = d_reptile(cfg, tasks, seed);
      const double r = std::pow(1 - alpha, double(k));
      std::vector<double> p(optima.size(), 1.0 / double(optima.size()));
      std::vector<std::string> names;
      for (const auto& t : tasks) names.push_back(t.name);
      DomainSampler sampler(names, p, mix_seed(seed, "domain-sampler"));
      double ref = tasks[0].model->init_params(seed)[0];
      for (std::size_t it = 0; it < cfg.iterations; ++it) {
        double mean = 0;
        for (auto j : sample_domains(sampler, cfg.m)) mean += optima[j] + r * (ref - optima[j]);
        mean /= double(cfg.m);
        ref = (1 - cfg.beta) * ref + cfg.beta * mean;
      }
      worst = std::max(worst, std::abs(theta[0] - ref));
    }
  }
  // Single domain converges to its optimum.
  {
    MetaConfig cfg;
    cfg.alpha = 0.1;
    cfg.m = 1;
    cfg.iterations = 400;
    const std::vector<Task> one{quadratic_task("only", 3.0)};
    worst = std::max(worst, std::abs(d_reptile(cfg, one, 2)[0] - 3.0));
  }
  // NFT full-batch SGD: the pooled minimiser is the mean of the optima.
  for (double lr : {0.1, 0.5}) {
    NftConfig nft;
    nft.epochs = 400;
    nft.batch_size = 0;
    nft.optimizer = SgdConfig{lr};
    const double mean = (optima[0] + optima[1] + optima[2] + optima[3]) / 4;
    const double got = nft_pretrain(tasks, nft, 3)[0];
    const double ref = mean + std::pow(1 - lr, 400.0) * (tasks[0].model->init_params(3)[0] - mean);
    worst = std::max({worst, std::abs(got - ref), std::abs(got - mean)});
  }
  report(3, "closed-form optimisation oracle", worst <= 1e-6, fmt("max deviation %.2e (tol 1e-6)", worst),
         since(t0), 10);
}

// ---------------------------------------------------------------- C4, C5, C8

ExperimentConfig default_experiment(std::size_t n_seeds) {
  ExperimentConfig cfg;
  cfg.seeds = seed_range(1, n_seeds);
  cfg.methods = {Method::DReptile, Method::Nft};
  cfg.finetune_sizes = {0, 1, 2, 4};
  return cfg;
}

void main_comparison() {
  const auto t0 = Clock::now();
  const auto cfg = default_experiment(40);
  const auto rows = run_experiment(cfg);
  const double elapsed = since(t0);

  bool ok4 = true;
  std::string d4;
  for (auto n : kFewShot) {
    const double dr = mean_combined(rows, "DREPTILE", n), nft = mean_combined(rows, "NFT", n);
    ok4 = ok4 && dr - nft >= 0.05;
    d4 += fmt("n=%zu %.3f vs %.3f (%+.1f pt)  ", n, dr, nft, 100 * (dr - nft));
  }
  report(4, "few-shot advantage", ok4, d4 + "need >= +5 pt at each size, 40 seeds", elapsed, 300);

  const double dr0 = mean_combined(rows, "DREPTILE", 0), nft0 = mean_combined(rows, "NFT", 0);
  report(5, "zero-shot non-degradation", dr0 >= nft0 - 0.01,
         fmt("size 0: D-REPTILE %.3f, NFT %.3f (need >= NFT - 1 pt), 40 seeds", dr0, nft0), 0);

  const auto t1 = Clock::now();
  double shared_gain = 0, unique_gain = 0;
  for (auto n : kFewShot) {
    shared_gain += mean_of(rows, "DREPTILE", n, &RunRecord::shared_active_acc) -
                   mean_of(rows, "NFT", n, &RunRecord::shared_active_acc);
    unique_gain += mean_of(rows, "DREPTILE", n, &RunRecord::unique_active_acc) -
                   mean_of(rows, "NFT", n, &RunRecord::unique_active_acc);
  }
  shared_gain /= double(kFewShot.size());
  unique_gain /= double(kFewShot.size());

  // Parameter locality: target-unique blocks untouched by either pre-training.
  bool untouched = true;
  std::size_t blocks = 0;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto c = cfg;
    c.init_scale = 0.05;
    const auto ctx = prepare_seed(c, seed);
    const auto none = pretrain(c, ctx, Method::None);
    for (Method m : {Method::DReptile, Method::Nft}) {
      const auto init = pretrain(c, ctx, m);
      for (auto slot : ctx.family.target.slots) {
        const auto& schema = ctx.family.registry->at(slot);
        if (schema.shared()) continue;
        const bool is_cat = schema.kind == SlotKind::Categorical;
        const auto [off, len] = is_cat ? ctx.cat_model->block(slot) : ctx.ext_model->block(slot);
        const auto& a = is_cat ? init.categorical : init.extractive;
        const auto& b = is_cat ? none.categorical : none.extractive;
        untouched = untouched && std::equal(a.begin() + off, a.begin() + off + len, b.begin() + off);
        ++blocks;
      }
    }
  }
  report(8, "shared vs unique slot gains", shared_gain > unique_gain && untouched && blocks > 0,
         fmt("active-acc gain shared %+.4f, unique %+.4f; %zu unique blocks bit-identical: %s", shared_gain,
             unique_gain, blocks, untouched ? "yes" : "NO"),
         since(t1));
}

// ---------------------------------------------------------------- C6

void k_sweep() {
  const auto t0 = Clock::now();
  auto cfg = default_experiment(40);
  cfg.finetune_sizes = kFewShot;
  const auto rows = sweep_k(cfg, {1, 5, 50});
  const double k1 = few_shot(rows, "DREPTILE-k1"), k5 = few_shot(rows, "DREPTILE-k5"),
               k50 = few_shot(rows, "DREPTILE-k50");
  report(6, "k-sweep trend", k5 - k1 >= 0.02 && k50 <= k5,
         fmt("few-shot JGA k=1 %.3f, k=5 %.3f, k=50 %.3f (need k5-k1 >= 2 pt, k50 <= k5), 40 seeds", k1, k5, k50),
         since(t0));
}

// ---------------------------------------------------------------- C7

void sampling_trend() {
  const auto t0 = Clock::now();
  // 10:1 imbalance with equal noise across domains; the large domain rotates
  // through all four positions, 20 seeds each.
  double prop = 0, uni = 0;
  for (std::size_t rot = 0; rot < 4; ++rot) {
    auto cfg = default_experiment(20);
    cfg.finetune_sizes = kFewShot;
    const std::size_t small = cfg.family.dialogues_per_domain;
    cfg.family.difficulty = {1.0};
    cfg.family.domain_dialogues.assign(4, small);
    cfg.family.domain_dialogues[rot] = 10 * small;
    const auto rows = sweep_sampling(cfg);
    prop += few_shot(rows, "DREPTILE-proportional") / 4;
    uni += few_shot(rows, "DREPTILE-uniform") / 4;
  }
  report(7, "size-proportional sampling", prop >= uni,
         fmt("few-shot JGA proportional %.4f, uniform %.4f (need prop >= uniform), 80 seeds", prop, uni), since(t0));
}

// ---------------------------------------------------------------- C9

void relatedness() {
  const auto t0 = Clock::now();
  // Meta-training budget scales with the number of train domains (25
  // iterations per domain) so every domain is visited equally often.
  auto base = default_experiment(120);
  base.methods = {Method::DReptile};
  base.finetune_sizes = kFewShot;
  const std::size_t per_domain = base.meta.iterations / base.family.n_train_domains;

  auto unrelated = base;
  unrelated.family.n_unrelated_domains = 8;
  unrelated.meta.iterations = per_domain * 12;
  auto related = base;
  related.family.n_train_domains = 6;
  related.meta.iterations = per_domain * 6;

  const double b = few_shot(run_experiment(base), "DREPTILE");
  const double u = few_shot(run_experiment(unrelated), "DREPTILE");
  const double r = few_shot(run_experiment(related), "DREPTILE");
  report(9, "relatedness effect", std::abs(u - b) < r - b,
         fmt("few-shot JGA base %.4f, +8 unrelated %.4f (|d| %.4f), +2 related %.4f (gain %+.4f), 120 seeds", b, u,
             std::abs(u - b), r, r - b),
         since(t0));
}

// ---------------------------------------------------------------- C10

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void determinism() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.seeds = {11, 12, 13};
  cfg.finetune_sizes = {0, 1, 4};
  cfg.meta.iterations = 30;
  cfg.parallel = true;
  cfg.meta.execution = Execution::Parallel;
  std::vector<std::string> outputs;
  for (int run = 0; run < 3; ++run) {
    if (run == 2) {
      cfg.parallel = false;
      cfg.meta.execution = Execution::Serial;
    }
    cfg.output_path = "acceptance_determinism_" + std::to_string(run) + ".csv";
    run_experiment(cfg);
    outputs.push_back(file_bytes(cfg.output_path));
    std::remove(cfg.output_path.c_str());
  }
  const bool ok = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
  report(10, "determinism", ok,
         fmt("2 parallel runs + 1 serial run, %zu CSV bytes each, identical: %s", outputs[0].size(), ok ? "yes" : "NO"),
         since(t0));
}

// ---------------------------------------------------------------- C11

std::vector<TurnEval> masked(const std::vector<int>& mask, const std::string& slot) {
  std::vector<TurnEval> out;
  for (std::size_t i = 0; i < mask.size(); ++i) out.push_back({std::to_string(i), {{slot, mask[i] ? "x" : "y", "x"}}});
  return out;
}

void metric_fixtures() {
  const auto t0 = Clock::now();
  int passed = 0, total = 0;
  auto expect = [&](bool c) {
    ++total;
    passed += c;
  };
  expect(joint_goal_accuracy(masked({1, 1, 0}, "s")) == 2.0 / 3.0);
  expect(joint_goal_accuracy(std::vector<TurnEval>{{"0", {{"a", "None", "None"}}}, {"1", {{"a", "None", "None"}}}}) == 1.0);
  expect(joint_goal_accuracy(masked({0, 0}, "s")) == 0.0);
  const std::vector<TurnEval> act{{"0", {{"s", "z", "None"}}}, {"1", {{"s", "a", "a"}}}, {"2", {{"s", "c", "b"}}}};
  expect(active_slot_accuracy(act, "s") == 0.5);
  expect(!active_slot_accuracy(std::vector<TurnEval>{{"0", {{"s", "q", "None"}}}}, "s").has_value());
  expect(active_slot_accuracy(std::vector<TurnEval>{{"0", {{"s", "x", "x"}}}, {"1", {{"s", "x", "x"}}}}, "s") == 1.0);
  expect(combined_jga(masked({1, 1, 1}, "c"), masked({1, 1, 1}, "e")) == 1.0);
  expect(combined_jga(masked({1, 1, 1}, "c"), masked({0, 0, 0}, "e")) == 0.0);
  expect(combined_jga(masked({1, 1, 0}, "c"), masked({1, 0, 1}, "e")) == 1.0 / 3.0);
  const std::vector<TurnEval> four{
      {"0", {{"rating", "4", "4"}, {"parking", "None", "yes"}}},
      {"1", {{"rating", "3", "4"}, {"parking", "yes", "yes"}}},
      {"2", {{"rating", "None", "None"}, {"parking", "no", "yes"}}},
      {"3", {{"rating", "5", "5"}, {"parking", "None", "None"}}},
  };
  const auto rep = slotwise_report(four, {{"rating", SlotClass::Shared}, {"parking", SlotClass::Unique}});
  expect(rep.shared_mean == 2.0 / 3.0);
  expect(rep.unique_mean == 1.0 / 3.0);
  const auto all_shared = slotwise_report(four, {{"rating", SlotClass::Shared}, {"parking", SlotClass::Shared}});
  expect(!all_shared.unique_mean.has_value());
  report(11, "metric fixtures", passed == total, fmt("%d/%d exact", passed, total), since(t0));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  gradient_correctness();
  k1_reduction();
  closed_form();
  main_comparison();
  k_sweep();
  sampling_trend();
  relatedness();
  determinism();
  metric_fixtures();
  std::printf("%s: %d criteria failed, total %.1fs\n", failures ? "FAILED" : "ALL PASSED", failures, since(t0));
  return failures ? 1 : 0;
}
