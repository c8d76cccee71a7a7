#include "dreptile/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dreptile/errors.hpp"
#include "dreptile/rng.hpp"

namespace dreptile {

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Batch unit_batch(std::size_t n) {
  Batch b;
  b.examples.assign(n, UnitExample{});
  return b;
}

QuadraticModel::QuadraticModel(ParamVector target, double init_scale)
    : target_(std::move(target)), init_scale_(init_scale) {
  if (init_scale_ < 0) throw ContractViolation("QuadraticModel: init_scale must be >= 0");
}

LossAndGrad QuadraticModel::loss_and_grad(const ParamVector& params, const Batch&) const {
  require_same_length(params, target_, "QuadraticModel");
  LossAndGrad out{0.0, ParamVector(params.size())};
  for (std::size_t i = 0; i < params.size(); ++i) {
    double d = params[i] - target_[i];
    out.loss += 0.5 * d * d;
    out.grad[i] = d;
  }
  return out;
}

Prediction QuadraticModel::predict(const ParamVector&, const Example&) const { return {}; }

ParamVector QuadraticModel::init_params(std::uint64_t seed) const {
  return uniform_params(target_.size(), seed, init_scale_);
}

LossAndGrad ConstantModel::loss_and_grad(const ParamVector& params, const Batch&) const {
  if (params.size() != n_) throw ContractViolation("ConstantModel: length mismatch");
  return {value_, ParamVector(n_)};
}

ParamVector finite_diff_grad(const ModelContract& model, const ParamVector& params,
                             const Batch& batch, double h) {
  if (!(h > 0)) throw ContractViolation("finite_diff_grad: h must be > 0");
  if (!params.all_finite()) throw ContractViolation("finite_diff_grad: params not finite");

  ParamVector probe = params;
  ParamVector grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x = params[i];
    probe[i] = x + h;
    const double up = model.loss(probe, batch);
    probe[i] = x - h;
    const double down = model.loss(probe, batch);
    probe[i] = x;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw OracleFailure("finite_diff_grad: non-finite loss at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const ParamVector& a, const ParamVector& b, double floor) {
  require_same_length(a, b, "max_relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (scale < floor) continue;
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

double max_abs_difference(const ParamVector& a, const ParamVector& b) {
  require_same_length(a, b, "max_abs_difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

ParamVector uniform_params(std::size_t n, std::uint64_t seed, double scale) {
  if (scale < 0) throw ContractViolation("uniform_params: scale must be >= 0");
  ParamVector out(n);
  if (scale == 0.0) return out;
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& v : out) v = dist(rng);
  return out;
}

void require_same_length(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ContractViolation(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
  }
}

ParamVector subtract(const ParamVector& a, const ParamVector& b) {
  require_same_length(a, b, "subtract");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void axpy(double alpha, const ParamVector& x, ParamVector& y) {
  require_same_length(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_length(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace dreptile
