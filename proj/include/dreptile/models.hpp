#pragma once

// Micro slot-filling models: a per-slot softmax value classifier and a
// per-slot start/end span marker. Both flatten their per-slot heads into one
// ParamVector laid out in SlotRegistry order, so a slot name shared by several
// domains is one parameter block.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dreptile/diffcore.hpp"

namespace dreptile {

enum class SlotKind { Categorical, Extractive };

std::string_view to_string(SlotKind kind);

inline constexpr std::string_view kNoneValue = "None";

/// Value string of an extractive prediction. Position 0 is the no-answer
/// marker, so the span (0, 0) reads as "None".
std::string span_value(std::size_t start, std::size_t end);

struct SlotSchema {
  std::string name;
  SlotKind kind = SlotKind::Categorical;
  /// Categorical: "None" at index 0 followed by the enumerated values.
  /// Extractive: the value vocabulary used by the generator (may be empty).
  std::vector<std::string> values;
  std::set<std::string> owning_domains;

  bool shared() const { return owning_domains.size() >= 2; }
};

/// Ordered set of every slot in a task family, fixed at construction.
class SlotRegistry {
 public:
  SlotRegistry() = default;
  explicit SlotRegistry(std::vector<SlotSchema> slots);

  std::size_t size() const { return slots_.size(); }
  const SlotSchema& at(SlotId id) const;
  const std::vector<SlotSchema>& slots() const { return slots_; }

  SlotId id_of(std::string_view name) const;  // RegistryError when unknown
  bool contains(std::string_view name) const;

  /// FNV-1a over names, kinds and value lists; identifies the parameter layout.
  std::uint64_t hash() const { return hash_; }

 private:
  std::vector<SlotSchema> slots_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t hash_ = 0;
};

struct SlotPrediction {
  std::string slot_name;
  std::string value;  // categorical value, or "None"
  std::size_t start = 0;
  std::size_t end = 0;
};

/// Softmax classifier per categorical slot: score_v = W_s[v]·x + b_s[v].
class CategoricalSlotModel final : public ModelContract {
 public:
  CategoricalSlotModel(std::shared_ptr<const SlotRegistry> registry, std::size_t feature_dim,
                       double init_scale = 0.0);

  std::size_t param_count() const override { return param_count_; }
  LossAndGrad loss_and_grad(const ParamVector& params, const Batch& batch) const override;
  Prediction predict(const ParamVector& params, const Example& input) const override;
  ParamVector init_params(std::uint64_t seed) const override;

  /// Argmax over value scores; ties go to the lowest index.
  SlotPrediction predict_slot(const ParamVector& params, std::span<const double> feature,
                              SlotId slot) const;
  std::vector<double> scores(const ParamVector& params, std::span<const double> feature,
                             SlotId slot) const;

  /// First coordinate and length of the block owned by `slot`.
  std::pair<std::size_t, std::size_t> block(SlotId slot) const;

  const SlotRegistry& registry() const { return *registry_; }
  std::size_t feature_dim() const { return dim_; }
  double init_scale() const { return init_scale_; }

 private:
  std::size_t offset_of(SlotId slot) const;

  std::shared_ptr<const SlotRegistry> registry_;
  std::size_t dim_;
  double init_scale_;
  std::vector<std::size_t> offsets_;  // per registry slot; npos when not categorical
  std::size_t param_count_ = 0;
};

/// Start/end scorers per extractive slot: start_t = u_s·x_t, end_t = v_s·x_t.
class ExtractiveSlotModel final : public ModelContract {
 public:
  ExtractiveSlotModel(std::shared_ptr<const SlotRegistry> registry, std::size_t feature_dim,
                      double init_scale = 0.0);

  std::size_t param_count() const override { return param_count_; }
  LossAndGrad loss_and_grad(const ParamVector& params, const Batch& batch) const override;
  Prediction predict(const ParamVector& params, const Example& input) const override;
  ParamVector init_params(std::uint64_t seed) const override;

  /// Maximizes start_s + end_e over s <= e; ties go to the smallest start,
  /// then the smallest end.
  SlotPrediction predict_slot(const ParamVector& params, std::span<const double> positions,
                              std::size_t length, SlotId slot) const;

  std::pair<std::size_t, std::size_t> block(SlotId slot) const;

  const SlotRegistry& registry() const { return *registry_; }
  std::size_t feature_dim() const { return dim_; }
  double init_scale() const { return init_scale_; }

 private:
  std::size_t offset_of(SlotId slot) const;

  std::shared_ptr<const SlotRegistry> registry_;
  std::size_t dim_;
  double init_scale_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
};

/// Free-function forms of the per-model operations.
LossAndGrad cat_loss_and_grad(const CategoricalSlotModel& model, const ParamVector& params,
                              const Batch& batch);
LossAndGrad ext_loss_and_grad(const ExtractiveSlotModel& model, const ParamVector& params,
                              const Batch& batch);

/// Constrained argmax of start[s] + end[e] over s <= e with the documented
/// tie-breaking. Exposed for tests.
std::pair<std::size_t, std::size_t> best_span(std::span<const double> start_scores,
                                              std::span<const double> end_scores);

}  // namespace dreptile
