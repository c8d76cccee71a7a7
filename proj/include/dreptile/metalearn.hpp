#pragma once

// D-REPTILE meta-learning over domains, the pooled-training (NFT) baseline,
// size-proportional domain sampling and target fine-tuning. Everything here is
// written against ModelContract and ExampleSource only.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dreptile/diffcore.hpp"
#include "dreptile/optim.hpp"
#include "dreptile/rng.hpp"
#include "dreptile/synthdst.hpp"

namespace dreptile {

/// One meta-learning task: a domain's data under the model that scores it.
struct Task {
  std::string name;
  std::shared_ptr<const ModelContract> model;
  std::shared_ptr<const ExampleSource> source;

  std::size_t size() const { return source->size(); }
};

enum class InnerOptimizer { Sgd, Adam };
enum class OuterUpdate { Interpolate, AdamPseudoGrad };
enum class Execution { Serial, Parallel };
enum class Sampling { Proportional, Uniform };

struct MetaConfig {
  double alpha = 1e-2;  // inner learning rate
  double beta = 1.0;    // outer rate
  std::size_t k = 5;
  std::size_t m = 4;
  std::size_t iterations = 2000;
  InnerOptimizer inner_optimizer = InnerOptimizer::Sgd;
  OuterUpdate outer_update = OuterUpdate::Interpolate;
  std::size_t inner_batch_size = 8;  // turns per batch; 0 = full batch
  Sampling sampling = Sampling::Proportional;
  /// Explicit p_D over tasks; takes precedence over `sampling` when non-empty.
  std::vector<double> p_override;
  /// Moment constants for Adam wherever it is selected. lr is taken from
  /// alpha (inner) or beta (outer).
  AdamConfig adam{};
  Execution execution = Execution::Parallel;

  OptimizerConfig inner_optimizer_config() const;
};

void validate(const MetaConfig& cfg);

/// Weighted sampler over task names drawing from its own seeded stream.
class DomainSampler {
 public:
  DomainSampler(std::vector<std::string> names, std::vector<double> probabilities, std::uint64_t seed);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& probabilities() const { return probs_; }

  /// One draw with replacement; returns the task index.
  std::size_t draw();

 private:
  std::vector<std::string> names_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  Rng rng_;
};

/// p_D(i) = size_i / Σ size_j over task sizes (turn counts).
DomainSampler domain_weights(std::span<const Task> tasks, std::uint64_t seed);
DomainSampler domain_weights(std::span<const std::size_t> sizes, std::span<const std::string> names,
                             std::uint64_t seed);

/// m independent draws with replacement, as task indices.
std::vector<std::size_t> sample_domains(DomainSampler& sampler, std::size_t m);

/// θ + β·(1/m)·Σ(θ_j − θ).
ParamVector reptile_update(const ParamVector& theta, std::span<const ParamVector> results, double beta);

/// Algorithm loop: init from tasks.front().model->init_params(seed), then per
/// iteration sample m tasks, run k inner steps on each from the current θ,
/// and apply the outer update. Serial and parallel execution give
/// bit-identical results.
ParamVector d_reptile(const MetaConfig& cfg, std::span<const Task> tasks, std::uint64_t seed);

/// Same loop starting from an explicit θ.
ParamVector d_reptile_from(const MetaConfig& cfg, std::span<const Task> tasks, ParamVector theta,
                           std::uint64_t seed);

/// Gradient steps one d_reptile run performs: iterations · m · k.
std::size_t d_reptile_gradient_steps(const MetaConfig& cfg);

struct NftConfig {
  std::size_t epochs = 1;
  std::size_t max_steps = 0;    // 0 = no cap
  std::size_t batch_size = 8;   // turns per batch; 0 = full pooled batch
  OptimizerConfig optimizer = SgdConfig{1e-2};
};

/// Mini-batch training on the pooled, shuffled union of every task's items.
/// Items drawn for tasks sharing a model are merged into one batch; the step
/// gradient weights each model's batch gradient by its share of examples.
ParamVector nft_pretrain(std::span<const Task> tasks, const NftConfig& cfg, std::uint64_t seed);
ParamVector nft_pretrain_from(std::span<const Task> tasks, const NftConfig& cfg, ParamVector theta,
                              std::uint64_t seed);

/// Gradient steps nft_pretrain performs for this configuration.
std::size_t nft_gradient_steps(std::span<const Task> tasks, const NftConfig& cfg);

/// `steps` optimizer steps on the target source from `init`. steps == 0
/// returns init unchanged (zero-shot) and accepts an empty source.
ParamVector fine_tune(const ParamVector& init, const ExampleSource* target, const ModelContract& model,
                      std::size_t steps, const OptimizerConfig& opt, std::size_t batch_size,
                      std::uint64_t seed);

}  // namespace dreptile
