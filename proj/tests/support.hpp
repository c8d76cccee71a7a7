#pragma once

// Small fixtures shared by the unit tests and the acceptance binary.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dreptile/diffcore.hpp"
#include "dreptile/models.hpp"
#include "dreptile/rng.hpp"

namespace dreptile::testing {

/// Two categorical slots (4 and 3 values) and two extractive slots.
inline std::shared_ptr<const SlotRegistry> mixed_registry() {
  return std::make_shared<const SlotRegistry>(std::vector<SlotSchema>{
      {"area", SlotKind::Categorical, {"None", "north", "south", "east"}, {"a", "b"}},
      {"name", SlotKind::Extractive, {}, {"a"}},
      {"price", SlotKind::Categorical, {"None", "cheap", "dear"}, {"a"}},
      {"time", SlotKind::Extractive, {}, {"a", "b"}},
  });
}

inline FeatureData gaussian_feature(Rng& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return std::make_shared<const std::vector<double>>(std::move(v));
}

/// Random categorical batch over every categorical slot of the registry.
inline Batch random_categorical_batch(Rng& rng, const SlotRegistry& reg, std::size_t dim, std::size_t n) {
  std::vector<SlotId> slots;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg.at(SlotId{i}).kind == SlotKind::Categorical) slots.push_back(SlotId{i});
  }
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    const SlotId s = slots[std::uniform_int_distribution<std::size_t>(0, slots.size() - 1)(rng)];
    const std::size_t c = reg.at(s).values.size();
    b.examples.emplace_back(
        CategoricalExample{gaussian_feature(rng, dim), s, std::uniform_int_distribution<std::size_t>(0, c - 1)(rng)});
  }
  return b;
}

inline Batch random_span_batch(Rng& rng, const SlotRegistry& reg, std::size_t dim, std::size_t length,
                               std::size_t n) {
  std::vector<SlotId> slots;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg.at(SlotId{i}).kind == SlotKind::Extractive) slots.push_back(SlotId{i});
  }
  Batch b;
  std::uniform_int_distribution<std::size_t> pos(0, length - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const SlotId s = slots[std::uniform_int_distribution<std::size_t>(0, slots.size() - 1)(rng)];
    std::size_t a = pos(rng), e = pos(rng);
    if (a > e) std::swap(a, e);
    b.examples.emplace_back(SpanExample{gaussian_feature(rng, dim * length), length, s, a, e});
  }
  return b;
}

}  // namespace dreptile::testing
