#pragma once

// Parameter vectors, batches, the model contract every trainable model
// implements, and a central-difference gradient oracle.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace dreptile {

/// Flat vector of all trainable parameters. Length is fixed at construction.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

/// Index of a slot in a SlotRegistry.
struct SlotId {
  std::size_t value = 0;
  friend bool operator==(SlotId, SlotId) = default;
  friend auto operator<=>(SlotId, SlotId) = default;
};

using FeatureData = std::shared_ptr<const std::vector<double>>;

/// Payload-free example, used by analytic test models whose loss ignores data.
struct UnitExample {};

/// One (feature vector, slot, gold value index) instance for a categorical head.
struct CategoricalExample {
  FeatureData feature;
  SlotId slot;
  std::size_t gold = 0;
};

/// One span-marking instance: `length` positions of feature_dim each, row-major.
struct SpanExample {
  FeatureData positions;
  std::size_t length = 0;
  SlotId slot;
  std::size_t start = 0;
  std::size_t end = 0;
};

using Example = std::variant<UnitExample, CategoricalExample, SpanExample>;

struct Batch {
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

/// A batch holding `n` payload-free examples.
Batch unit_batch(std::size_t n = 1);

struct CategoricalPrediction {
  std::size_t value_index = 0;
};

struct SpanPrediction {
  std::size_t start = 0;
  std::size_t end = 0;
};

using Prediction = std::variant<std::monostate, CategoricalPrediction, SpanPrediction>;

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Loss / gradient / prediction interface shared by every trainable model.
///
/// Implementations are stateless with respect to parameters: all calls are
/// pure functions of their arguments, so identical inputs give bit-identical
/// outputs and concurrent calls are safe.
class ModelContract {
 public:
  virtual ~ModelContract() = default;

  virtual std::size_t param_count() const = 0;
  virtual LossAndGrad loss_and_grad(const ParamVector& params, const Batch& batch) const = 0;
  virtual Prediction predict(const ParamVector& params, const Example& input) const = 0;
  virtual ParamVector init_params(std::uint64_t seed) const = 0;

  virtual double loss(const ParamVector& params, const Batch& batch) const {
    return loss_and_grad(params, batch).loss;
  }
  virtual ParamVector gradient(const ParamVector& params, const Batch& batch) const {
    return loss_and_grad(params, batch).grad;
  }
};

/// Loss ½‖θ − c‖² with a fixed target c. Closed-form SGD trajectories make it
/// the reference model for exact optimizer and meta-learner checks.
class QuadraticModel final : public ModelContract {
 public:
  explicit QuadraticModel(ParamVector target, double init_scale = 0.0);

  std::size_t param_count() const override { return target_.size(); }
  LossAndGrad loss_and_grad(const ParamVector& params, const Batch& batch) const override;
  Prediction predict(const ParamVector& params, const Example& input) const override;
  ParamVector init_params(std::uint64_t seed) const override;

  const ParamVector& target() const { return target_; }

 private:
  ParamVector target_;
  double init_scale_;
};

/// Loss that ignores its parameters entirely.
class ConstantModel final : public ModelContract {
 public:
  ConstantModel(std::size_t n, double value) : n_(n), value_(value) {}

  std::size_t param_count() const override { return n_; }
  LossAndGrad loss_and_grad(const ParamVector& params, const Batch& batch) const override;
  Prediction predict(const ParamVector&, const Example&) const override { return {}; }
  ParamVector init_params(std::uint64_t) const override { return ParamVector(n_); }

 private:
  std::size_t n_;
  double value_;
};

inline constexpr double kDefaultFiniteDiffStep = 1e-5;

/// Central-difference estimate of ∇loss, one coordinate at a time.
/// Throws OracleFailure naming the coordinate when a probe loss is non-finite.
ParamVector finite_diff_grad(const ModelContract& model, const ParamVector& params,
                             const Batch& batch, double h = kDefaultFiniteDiffStep);

/// Largest per-coordinate |a − b| / max(|a|, |b|), skipping coordinates where
/// both magnitudes are below `floor`.
double max_relative_error(const ParamVector& a, const ParamVector& b, double floor = 1e-8);

double max_abs_difference(const ParamVector& a, const ParamVector& b);

/// Uniform i.i.d. draws in [−scale, scale] from a generator seeded with `seed`.
ParamVector uniform_params(std::size_t n, std::uint64_t seed, double scale);

// Element-wise helpers. All throw ContractViolation on length mismatch.
void require_same_length(const ParamVector& a, const ParamVector& b, const char* what);
ParamVector subtract(const ParamVector& a, const ParamVector& b);
void axpy(double alpha, const ParamVector& x, ParamVector& y);
double dot(const ParamVector& a, const ParamVector& b);

}  // namespace dreptile
