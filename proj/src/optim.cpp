#include "dreptile/optim.hpp"

#include <cmath>
#include <string>

#include "dreptile/errors.hpp"

namespace dreptile {

void validate(const SgdConfig& cfg) {
  if (!(cfg.lr > 0)) throw ConfigError("SGD learning rate must be > 0");
}

void validate(const AdamConfig& cfg) {
  if (!(cfg.lr > 0)) throw ConfigError("Adam learning rate must be > 0");
  if (!(cfg.beta1 >= 0 && cfg.beta1 < 1)) throw ConfigError("Adam beta1 must lie in [0,1)");
  if (!(cfg.beta2 >= 0 && cfg.beta2 < 1)) throw ConfigError("Adam beta2 must lie in [0,1)");
  if (!(cfg.eps > 0)) throw ConfigError("Adam eps must be > 0");
}

void validate(const OptimizerConfig& cfg) {
  std::visit([](const auto& c) { validate(c); }, cfg);
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr) {
  require_same_length(params, grad, "sgd_step");
  if (!(lr > 0)) throw ContractViolation("sgd_step: lr must be > 0");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
  return out;
}

AdamStepResult adam_step(const ParamVector& params, const ParamVector& grad,
                         const AdamState& state, const AdamConfig& cfg) {
  require_same_length(params, grad, "adam_step");
  require_same_length(params, state.m, "adam_step (first moment)");
  require_same_length(params, state.v, "adam_step (second moment)");

  AdamStepResult out{ParamVector(params.size()), state};
  AdamState& s = out.state;
  s.t += 1;
  const double t = static_cast<double>(s.t);
  const double m_correction = 1.0 - std::pow(cfg.beta1, t);
  const double v_correction = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * g;
    s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = s.m[i] / m_correction;
    const double v_hat = s.v[i] / v_correction;
    out.params[i] = params[i] - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
  return out;
}

Optimizer::Optimizer(const OptimizerConfig& cfg, std::size_t n) : cfg_(cfg) {
  validate(cfg_);
  if (std::holds_alternative<AdamConfig>(cfg_)) adam_ = AdamState::fresh(n);
}

void Optimizer::step(ParamVector& params, const ParamVector& grad) {
  if (const auto* sgd = std::get_if<SgdConfig>(&cfg_)) {
    require_same_length(params, grad, "Optimizer::step");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= sgd->lr * grad[i];
  } else {
    auto r = adam_step(params, grad, *adam_, std::get<AdamConfig>(cfg_));
    params = std::move(r.params);
    adam_ = std::move(r.state);
  }
  ++steps_;
}

InnerLoopResult inner_loop(const ModelContract& model, const ParamVector& params,
                           std::span<const Batch> batches, std::size_t k,
                           const OptimizerConfig& opt) {
  if (k > batches.size()) {
    throw ConfigError("run_inner_loop: k=" + std::to_string(k) + " exceeds the " +
                      std::to_string(batches.size()) + " provided batches");
  }
  ParamVector theta = params;
  Optimizer optimizer(opt, theta.size());
  for (std::size_t step = 0; step < k; ++step) {
    optimizer.step(theta, model.gradient(theta, batches[step]));
  }
  return {std::move(theta), optimizer.adam_state()};
}

ParamVector run_inner_loop(const ModelContract& model, const ParamVector& params,
                           std::span<const Batch> batches, std::size_t k,
                           const OptimizerConfig& opt) {
  return inner_loop(model, params, batches, k, opt).params;
}

}  // namespace dreptile
