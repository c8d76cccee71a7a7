#include "dreptile/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dreptile/errors.hpp"
#include "dreptile/rng.hpp"

namespace dreptile {
namespace {

constexpr std::size_t kNoBlock = std::numeric_limits<std::size_t>::max();

// log Σ exp(z) and softmax probabilities written into `probs`.
double log_softmax_into(std::span<const double> z, std::vector<double>& probs) {
  const double zmax = *std::max_element(z.begin(), z.end());
  probs.resize(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    probs[i] = std::exp(z[i] - zmax);
    sum += probs[i];
  }
  for (auto& p : probs) p /= sum;
  return zmax + std::log(sum);
}

std::size_t argmax_lowest(std::span<const double> z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

}  // namespace

std::string_view to_string(SlotKind kind) {
  return kind == SlotKind::Categorical ? "categorical" : "extractive";
}

std::string span_value(std::size_t start, std::size_t end) {
  if (start == 0 && end == 0) return std::string(kNoneValue);
  return "span:" + std::to_string(start) + "-" + std::to_string(end);
}

// ---------------------------------------------------------------- registry

SlotRegistry::SlotRegistry(std::vector<SlotSchema> slots) : slots_(std::move(slots)) {
  hash_ = fnv1a("slot-registry");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& s = slots_[i];
    if (!index_.emplace(s.name, i).second) throw RegistryError("duplicate slot name: " + s.name);
    if (s.kind == SlotKind::Categorical) {
      if (s.values.size() < 2) throw RegistryError("categorical slot needs >= 2 values: " + s.name);
      if (s.values.front() != kNoneValue ||
          std::count(s.values.begin(), s.values.end(), std::string(kNoneValue)) != 1) {
        throw RegistryError("categorical slot must list \"None\" exactly once, first: " + s.name);
      }
    }
    hash_ = fnv1a(s.name, hash_);
    hash_ = fnv1a(to_string(s.kind), hash_);
    for (const auto& v : s.values) hash_ = fnv1a(v, fnv1a("|", hash_));
    hash_ = fnv1a(";", hash_);
  }
}

const SlotSchema& SlotRegistry::at(SlotId id) const {
  if (id.value >= slots_.size()) {
    throw RegistryError("slot id " + std::to_string(id.value) + " out of range");
  }
  return slots_[id.value];
}

SlotId SlotRegistry::id_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw RegistryError("unknown slot: " + std::string(name));
  return SlotId{it->second};
}

bool SlotRegistry::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

// ---------------------------------------------------------------- categorical

CategoricalSlotModel::CategoricalSlotModel(std::shared_ptr<const SlotRegistry> registry,
                                           std::size_t feature_dim, double init_scale)
    : registry_(std::move(registry)), dim_(feature_dim), init_scale_(init_scale) {
  if (!registry_) throw ContractViolation("CategoricalSlotModel: null registry");
  if (dim_ == 0) throw ContractViolation("CategoricalSlotModel: feature_dim must be > 0");
  offsets_.assign(registry_->size(), kNoBlock);
  for (std::size_t i = 0; i < registry_->size(); ++i) {
    const auto& s = registry_->slots()[i];
    if (s.kind != SlotKind::Categorical) continue;
    offsets_[i] = param_count_;
    param_count_ += s.values.size() * (dim_ + 1);
  }
}

std::size_t CategoricalSlotModel::offset_of(SlotId slot) const {
  const auto& schema = registry_->at(slot);
  if (offsets_[slot.value] == kNoBlock) {
    throw RegistryError("slot is not categorical: " + schema.name);
  }
  return offsets_[slot.value];
}

std::pair<std::size_t, std::size_t> CategoricalSlotModel::block(SlotId slot) const {
  return {offset_of(slot), registry_->at(slot).values.size() * (dim_ + 1)};
}

std::vector<double> CategoricalSlotModel::scores(const ParamVector& params,
                                                 std::span<const double> feature,
                                                 SlotId slot) const {
  if (params.size() != param_count_) throw ContractViolation("CategoricalSlotModel: bad params length");
  if (feature.size() != dim_) throw DataError("CategoricalSlotModel: feature has wrong dimension");
  const std::size_t base = offset_of(slot);
  const std::size_t n_values = registry_->at(slot).values.size();
  const double* w = params.data() + base;
  const double* b = w + n_values * dim_;
  std::vector<double> z(n_values);
  for (std::size_t v = 0; v < n_values; ++v) {
    double s = b[v];
    const double* row = w + v * dim_;
    for (std::size_t j = 0; j < dim_; ++j) s += row[j] * feature[j];
    z[v] = s;
  }
  return z;
}

LossAndGrad CategoricalSlotModel::loss_and_grad(const ParamVector& params, const Batch& batch) const {
  if (batch.empty()) throw ContractViolation("CategoricalSlotModel: empty batch");
  LossAndGrad out{0.0, ParamVector(param_count_)};
  std::vector<double> probs;
  for (const auto& ex : batch.examples) {
    const auto* cat = std::get_if<CategoricalExample>(&ex);
    if (!cat) throw ContractViolation("CategoricalSlotModel: batch holds a non-categorical example");
    const auto& schema = registry_->at(cat->slot);
    if (cat->gold >= schema.values.size()) {
      throw DataError("gold value index out of range for slot " + schema.name);
    }
    const std::span<const double> x(*cat->feature);
    const auto z = scores(params, x, cat->slot);
    const double lse = log_softmax_into(z, probs);
    out.loss += lse - z[cat->gold];

    const std::size_t base = offsets_[cat->slot.value];
    const std::size_t n_values = z.size();
    double* gw = out.grad.data() + base;
    double* gb = gw + n_values * dim_;
    for (std::size_t v = 0; v < n_values; ++v) {
      const double delta = probs[v] - (v == cat->gold ? 1.0 : 0.0);
      gb[v] += delta;
      double* row = gw + v * dim_;
      for (std::size_t j = 0; j < dim_; ++j) row[j] += delta * x[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

SlotPrediction CategoricalSlotModel::predict_slot(const ParamVector& params,
                                                  std::span<const double> feature,
                                                  SlotId slot) const {
  const auto z = scores(params, feature, slot);
  const auto& schema = registry_->at(slot);
  return {schema.name, schema.values[argmax_lowest(z)], 0, 0};
}

Prediction CategoricalSlotModel::predict(const ParamVector& params, const Example& input) const {
  const auto* cat = std::get_if<CategoricalExample>(&input);
  if (!cat) throw ContractViolation("CategoricalSlotModel: predict needs a categorical example");
  return CategoricalPrediction{argmax_lowest(scores(params, *cat->feature, cat->slot))};
}

ParamVector CategoricalSlotModel::init_params(std::uint64_t seed) const {
  return uniform_params(param_count_, seed, init_scale_);
}

// ---------------------------------------------------------------- extractive

ExtractiveSlotModel::ExtractiveSlotModel(std::shared_ptr<const SlotRegistry> registry,
                                         std::size_t feature_dim, double init_scale)
    : registry_(std::move(registry)), dim_(feature_dim), init_scale_(init_scale) {
  if (!registry_) throw ContractViolation("ExtractiveSlotModel: null registry");
  if (dim_ == 0) throw ContractViolation("ExtractiveSlotModel: feature_dim must be > 0");
  offsets_.assign(registry_->size(), kNoBlock);
  for (std::size_t i = 0; i < registry_->size(); ++i) {
    if (registry_->slots()[i].kind != SlotKind::Extractive) continue;
    offsets_[i] = param_count_;
    param_count_ += 2 * dim_;
  }
}

std::size_t ExtractiveSlotModel::offset_of(SlotId slot) const {
  const auto& schema = registry_->at(slot);
  if (offsets_[slot.value] == kNoBlock) {
    throw RegistryError("slot is not extractive: " + schema.name);
  }
  return offsets_[slot.value];
}

std::pair<std::size_t, std::size_t> ExtractiveSlotModel::block(SlotId slot) const {
  return {offset_of(slot), 2 * dim_};
}

LossAndGrad ExtractiveSlotModel::loss_and_grad(const ParamVector& params, const Batch& batch) const {
  if (batch.empty()) throw ContractViolation("ExtractiveSlotModel: empty batch");
  if (params.size() != param_count_) throw ContractViolation("ExtractiveSlotModel: bad params length");
  LossAndGrad out{0.0, ParamVector(param_count_)};
  std::vector<double> start(0), end(0), p_start, p_end;
  for (const auto& ex : batch.examples) {
    const auto* span = std::get_if<SpanExample>(&ex);
    if (!span) throw ContractViolation("ExtractiveSlotModel: batch holds a non-span example");
    const std::size_t T = span->length;
    if (T == 0 || span->positions->size() != T * dim_) {
      throw DataError("ExtractiveSlotModel: malformed position sequence");
    }
    if (!(span->start <= span->end && span->end < T)) {
      throw DataError("gold span out of range for slot " + registry_->at(span->slot).name);
    }
    const std::size_t base = offset_of(span->slot);
    const double* u = params.data() + base;
    const double* v = u + dim_;
    const double* x = span->positions->data();

    start.assign(T, 0.0);
    end.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const double* xt = x + t * dim_;
      double a = 0.0, e = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        a += u[j] * xt[j];
        e += v[j] * xt[j];
      }
      start[t] = a;
      end[t] = e;
    }
    out.loss += log_softmax_into(start, p_start) - start[span->start];
    out.loss += log_softmax_into(end, p_end) - end[span->end];

    double* gu = out.grad.data() + base;
    double* gv = gu + dim_;
    for (std::size_t t = 0; t < T; ++t) {
      const double ds = p_start[t] - (t == span->start ? 1.0 : 0.0);
      const double de = p_end[t] - (t == span->end ? 1.0 : 0.0);
      const double* xt = x + t * dim_;
      for (std::size_t j = 0; j < dim_; ++j) {
        gu[j] += ds * xt[j];
        gv[j] += de * xt[j];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

std::pair<std::size_t, std::size_t> best_span(std::span<const double> start_scores,
                                              std::span<const double> end_scores) {
  if (start_scores.empty() || start_scores.size() != end_scores.size()) {
    throw ContractViolation("best_span: score sequences must be non-empty and equal length");
  }
  std::size_t best_start_so_far = 0;
  std::size_t best_s = 0, best_e = 0;
  double best_total = start_scores[0] + end_scores[0];
  for (std::size_t e = 0; e < end_scores.size(); ++e) {
    if (start_scores[e] > start_scores[best_start_so_far]) best_start_so_far = e;
    const double total = start_scores[best_start_so_far] + end_scores[e];
    const bool better = total > best_total ||
                        (total == best_total && best_start_so_far < best_s);
    if (better) {
      best_total = total;
      best_s = best_start_so_far;
      best_e = e;
    }
  }
  return {best_s, best_e};
}

SlotPrediction ExtractiveSlotModel::predict_slot(const ParamVector& params,
                                                 std::span<const double> positions,
                                                 std::size_t length, SlotId slot) const {
  if (length == 0 || positions.size() != length * dim_) {
    throw DataError("ExtractiveSlotModel: malformed position sequence");
  }
  if (params.size() != param_count_) throw ContractViolation("ExtractiveSlotModel: bad params length");
  const std::size_t base = offset_of(slot);
  const double* u = params.data() + base;
  const double* v = u + dim_;
  std::vector<double> start(length), end(length);
  for (std::size_t t = 0; t < length; ++t) {
    const double* xt = positions.data() + t * dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
      start[t] += u[j] * xt[j];
      end[t] += v[j] * xt[j];
    }
  }
  const auto [s, e] = best_span(start, end);
  return {registry_->at(slot).name, span_value(s, e), s, e};
}

Prediction ExtractiveSlotModel::predict(const ParamVector& params, const Example& input) const {
  const auto* span = std::get_if<SpanExample>(&input);
  if (!span) throw ContractViolation("ExtractiveSlotModel: predict needs a span example");
  const auto p = predict_slot(params, *span->positions, span->length, span->slot);
  return SpanPrediction{p.start, p.end};
}

ParamVector ExtractiveSlotModel::init_params(std::uint64_t seed) const {
  return uniform_params(param_count_, seed, init_scale_);
}

LossAndGrad cat_loss_and_grad(const CategoricalSlotModel& model, const ParamVector& params,
                              const Batch& batch) {
  return model.loss_and_grad(params, batch);
}

LossAndGrad ext_loss_and_grad(const ExtractiveSlotModel& model, const ParamVector& params,
                              const Batch& batch) {
  return model.loss_and_grad(params, batch);
}

}  // namespace dreptile
