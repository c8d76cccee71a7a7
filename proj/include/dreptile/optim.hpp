#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>

#include "dreptile/diffcore.hpp"

namespace dreptile {

struct SgdConfig {
  double lr = 1e-2;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ParamVector m;
  ParamVector v;
  std::size_t t = 0;

  static AdamState fresh(std::size_t n) { return {ParamVector(n), ParamVector(n), 0}; }
};

using OptimizerConfig = std::variant<SgdConfig, AdamConfig>;

void validate(const SgdConfig& cfg);
void validate(const AdamConfig& cfg);
void validate(const OptimizerConfig& cfg);

/// params − lr·grad.
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr);

struct AdamStepResult {
  ParamVector params;
  AdamState state;
};

/// Bias-corrected Adam update. The returned state has t incremented by one.
AdamStepResult adam_step(const ParamVector& params, const ParamVector& grad,
                         const AdamState& state, const AdamConfig& cfg);

/// Stateful stepper so callers can drive either optimizer uniformly.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::size_t n);

  void step(ParamVector& params, const ParamVector& grad);
  std::size_t steps() const { return steps_; }
  const std::optional<AdamState>& adam_state() const { return adam_; }

 private:
  OptimizerConfig cfg_;
  std::optional<AdamState> adam_;
  std::size_t steps_ = 0;
};

struct InnerLoopResult {
  ParamVector params;
  std::optional<AdamState> adam;  // final state when the optimizer is Adam
};

/// Exactly k optimizer steps from `params`, consuming batches[i] at step i.
/// Optimizer state starts fresh. Throws ConfigError when k > batches.size().
InnerLoopResult inner_loop(const ModelContract& model, const ParamVector& params,
                           std::span<const Batch> batches, std::size_t k,
                           const OptimizerConfig& opt);

ParamVector run_inner_loop(const ModelContract& model, const ParamVector& params,
                           std::span<const Batch> batches, std::size_t k,
                           const OptimizerConfig& opt);

}  // namespace dreptile
