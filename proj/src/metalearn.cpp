#include "dreptile/metalearn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dreptile/errors.hpp"

namespace dreptile {

OptimizerConfig MetaConfig::inner_optimizer_config() const {
  if (inner_optimizer == InnerOptimizer::Sgd) return SgdConfig{alpha};
  AdamConfig a = adam;
  a.lr = alpha;
  return a;
}

void validate(const MetaConfig& cfg) {
  if (!(cfg.alpha > 0)) throw ConfigError("MetaConfig: alpha must be > 0");
  if (!(cfg.beta > 0 && cfg.beta <= 1)) throw ConfigError("MetaConfig: beta must lie in (0,1]");
  if (cfg.k < 1) throw ConfigError("MetaConfig: k must be >= 1");
  if (cfg.m < 1) throw ConfigError("MetaConfig: m must be >= 1");
  if (cfg.iterations < 1) throw ConfigError("MetaConfig: iterations must be >= 1");
  validate(cfg.inner_optimizer_config());
}

// ---------------------------------------------------------------- sampling

DomainSampler::DomainSampler(std::vector<std::string> names, std::vector<double> probabilities,
                             std::uint64_t seed)
    : names_(std::move(names)), probs_(std::move(probabilities)), rng_(seed) {
  if (names_.empty() || names_.size() != probs_.size()) {
    throw ConfigError("DomainSampler: need one probability per domain");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0) || !std::isfinite(p)) throw ConfigError("DomainSampler: probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("DomainSampler: probabilities must sum to 1");
  cumulative_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
}

std::size_t DomainSampler::draw() {
  const double u = std::uniform_real_distribution<double>(0.0, cumulative_.back())(rng_);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  auto i = static_cast<std::size_t>(it - cumulative_.begin());
  if (i >= probs_.size()) i = probs_.size() - 1;
  // Never return a zero-probability domain on a boundary draw.
  while (probs_[i] == 0.0 && i > 0) --i;
  return i;
}

DomainSampler domain_weights(std::span<const std::size_t> sizes, std::span<const std::string> names,
                             std::uint64_t seed) {
  if (sizes.empty()) throw ConfigError("domain_weights: no datasets");
  if (sizes.size() != names.size()) throw ContractViolation("domain_weights: sizes/names mismatch");
  double total = 0.0;
  for (auto s : sizes) {
    if (s == 0) throw ConfigError("domain_weights: empty dataset");
    total += static_cast<double>(s);
  }
  std::vector<double> p;
  for (auto s : sizes) p.push_back(static_cast<double>(s) / total);
  return DomainSampler({names.begin(), names.end()}, std::move(p), seed);
}

DomainSampler domain_weights(std::span<const Task> tasks, std::uint64_t seed) {
  std::vector<std::size_t> sizes;
  std::vector<std::string> names;
  for (const auto& t : tasks) {
    sizes.push_back(t.size());
    names.push_back(t.name);
  }
  return domain_weights(sizes, names, seed);
}

std::vector<std::size_t> sample_domains(DomainSampler& sampler, std::size_t m) {
  std::vector<std::size_t> out(m);
  for (auto& i : out) i = sampler.draw();
  return out;
}

// ---------------------------------------------------------------- D-REPTILE

ParamVector reptile_update(const ParamVector& theta, std::span<const ParamVector> results, double beta) {
  if (results.empty()) throw ContractViolation("reptile_update: no domain results");
  ParamVector mean(theta.size());
  for (const auto& r : results) {
    require_same_length(theta, r, "reptile_update");
    for (std::size_t i = 0; i < theta.size(); ++i) mean[i] += r[i];
  }
  // (1 − β)·θ + β·mean(θ_j), so m = 1 and β = 1 return the endpoint exactly.
  const double inv = 1.0 / static_cast<double>(results.size());
  ParamVector out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = (1.0 - beta) * theta[i] + beta * (mean[i] * inv);
  return out;
}

namespace {

void check_tasks(std::span<const Task> tasks) {
  if (tasks.empty()) throw ConfigError("no training tasks");
  const std::size_t n = tasks.front().model->param_count();
  for (const auto& t : tasks) {
    if (!t.model || !t.source) throw ConfigError("task " + t.name + " lacks a model or data");
    if (t.model->param_count() != n) throw ConfigError("tasks disagree on parameter count");
    if (t.size() == 0) throw ConfigError("task " + t.name + " has no data");
  }
}

DomainSampler make_sampler(const MetaConfig& cfg, std::span<const Task> tasks, std::uint64_t seed) {
  const std::uint64_t sampler_seed = mix_seed(seed, "domain-sampler");
  std::vector<std::string> names;
  for (const auto& t : tasks) names.push_back(t.name);
  if (!cfg.p_override.empty()) {
    if (cfg.p_override.size() != tasks.size()) throw ConfigError("p_override needs one entry per task");
    return DomainSampler(std::move(names), cfg.p_override, sampler_seed);
  }
  if (cfg.sampling == Sampling::Uniform) {
    std::vector<double> p(tasks.size(), 1.0 / static_cast<double>(tasks.size()));
    return DomainSampler(std::move(names), std::move(p), sampler_seed);
  }
  return domain_weights(tasks, sampler_seed);
}

}  // namespace

std::size_t d_reptile_gradient_steps(const MetaConfig& cfg) { return cfg.iterations * cfg.m * cfg.k; }

ParamVector d_reptile_from(const MetaConfig& cfg, std::span<const Task> tasks, ParamVector theta,
                           std::uint64_t seed) {
  validate(cfg);
  check_tasks(tasks);
  if (theta.size() != tasks.front().model->param_count()) {
    throw ContractViolation("d_reptile: initial parameters have the wrong length");
  }
  DomainSampler sampler = make_sampler(cfg, tasks, seed);
  const OptimizerConfig inner = cfg.inner_optimizer_config();
  const bool parallel = cfg.execution == Execution::Parallel;

  std::optional<AdamState> outer_state;
  AdamConfig outer_cfg = cfg.adam;
  outer_cfg.lr = cfg.beta;
  if (cfg.outer_update == OuterUpdate::AdamPseudoGrad) outer_state = AdamState::fresh(theta.size());

  std::vector<ParamVector> endpoints(cfg.m);
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    const auto chosen = sample_domains(sampler, cfg.m);
    const std::uint64_t iter_seed = mix_seed(seed, iter);
    const ParamVector& snapshot = theta;

    // Each inner loop owns its batches and optimizer state; the outer update
    // below is the only synchronization point.
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t j = 0; j < cfg.m; ++j) {
      const Task& task = tasks[chosen[j]];
      const auto batches = batches_from(*task.source, cfg.inner_batch_size, mix_seed(iter_seed, j), cfg.k);
      endpoints[j] = run_inner_loop(*task.model, snapshot, batches, cfg.k, inner);
    }

    if (cfg.outer_update == OuterUpdate::Interpolate) {
      theta = reptile_update(theta, endpoints, cfg.beta);
    } else {
      // Pseudo-gradient θ − mean(θ_j), fed to Adam with lr = β.
      const ParamVector target = reptile_update(theta, endpoints, 1.0);
      auto step = adam_step(theta, subtract(theta, target), *outer_state, outer_cfg);
      theta = std::move(step.params);
      outer_state = std::move(step.state);
    }
  }
  return theta;
}

ParamVector d_reptile(const MetaConfig& cfg, std::span<const Task> tasks, std::uint64_t seed) {
  check_tasks(tasks);
  return d_reptile_from(cfg, tasks, tasks.front().model->init_params(seed), seed);
}

// ---------------------------------------------------------------- NFT

namespace {

std::size_t pooled_size(std::span<const Task> tasks) {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.size();
  return n;
}

std::size_t batches_per_epoch(std::size_t pooled, std::size_t batch_size) {
  if (batch_size == 0 || batch_size >= pooled) return 1;
  return (pooled + batch_size - 1) / batch_size;
}

}  // namespace

std::size_t nft_gradient_steps(std::span<const Task> tasks, const NftConfig& cfg) {
  const std::size_t total = cfg.epochs * batches_per_epoch(pooled_size(tasks), cfg.batch_size);
  return cfg.max_steps == 0 ? total : std::min(total, cfg.max_steps);
}

ParamVector nft_pretrain_from(std::span<const Task> tasks, const NftConfig& cfg, ParamVector theta,
                              std::uint64_t seed) {
  check_tasks(tasks);
  validate(cfg.optimizer);
  if (theta.size() != tasks.front().model->param_count()) {
    throw ContractViolation("nft_pretrain: initial parameters have the wrong length");
  }

  // Pool of (task, item) pairs.
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (std::size_t i = 0; i < tasks[t].size(); ++i) pool.emplace_back(t, i);
  }
  const std::size_t per_batch = cfg.batch_size == 0 ? pool.size() : std::min(cfg.batch_size, pool.size());
  const std::size_t step_limit = nft_gradient_steps(tasks, cfg);

  Optimizer optimizer(cfg.optimizer, theta.size());
  Rng rng(mix_seed(seed, "nft-shuffle"));
  std::size_t steps = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs && steps < step_limit; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t start = 0; start < pool.size() && steps < step_limit; start += per_batch) {
      // Merge items per distinct model, preserving first-seen order.
      std::vector<const ModelContract*> models;
      std::vector<Batch> merged;
      for (std::size_t i = start; i < std::min(pool.size(), start + per_batch); ++i) {
        const Task& task = tasks[pool[i].first];
        auto it = std::find(models.begin(), models.end(), task.model.get());
        std::size_t slot = static_cast<std::size_t>(it - models.begin());
        if (it == models.end()) {
          models.push_back(task.model.get());
          merged.emplace_back();
        }
        task.source->append_examples(pool[i].second, merged[slot]);
      }
      std::size_t total = 0;
      for (const auto& b : merged) total += b.size();
      ParamVector grad(theta.size());
      for (std::size_t g = 0; g < models.size(); ++g) {
        if (merged[g].empty()) continue;
        const double weight = static_cast<double>(merged[g].size()) / static_cast<double>(total);
        axpy(weight, models[g]->gradient(theta, merged[g]), grad);
      }
      optimizer.step(theta, grad);
      ++steps;
    }
  }
  return theta;
}

ParamVector nft_pretrain(std::span<const Task> tasks, const NftConfig& cfg, std::uint64_t seed) {
  check_tasks(tasks);
  return nft_pretrain_from(tasks, cfg, tasks.front().model->init_params(seed), seed);
}

// ---------------------------------------------------------------- fine-tuning

ParamVector fine_tune(const ParamVector& init, const ExampleSource* target, const ModelContract& model,
                      std::size_t steps, const OptimizerConfig& opt, std::size_t batch_size,
                      std::uint64_t seed) {
  if (steps == 0) return init;
  if (target == nullptr || target->size() == 0) {
    throw ConfigError("fine_tune: " + std::to_string(steps) + " steps requested without target data");
  }
  const auto batches = batches_from(*target, batch_size, mix_seed(seed, "fine-tune"), steps);
  return run_inner_loop(model, init, batches, steps, opt);
}

}  // namespace dreptile
