#include <doctest.h>

#include <cmath>
#include <random>

#include "dreptile/errors.hpp"
#include "dreptile/models.hpp"
#include "support.hpp"

using namespace dreptile;

namespace {

std::pair<std::size_t, std::size_t> brute_force_span(const std::vector<double>& s, const std::vector<double>& e) {
  std::pair<std::size_t, std::size_t> best{0, 0};
  double top = s[0] + e[0];
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = a; b < e.size(); ++b) {
      if (s[a] + e[b] > top) {
        top = s[a] + e[b];
        best = {a, b};
      }
    }
  }
  return best;
}

bool zero_outside(const ParamVector& g, std::pair<std::size_t, std::size_t> block) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if ((i < block.first || i >= block.first + block.second) && g[i] != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("registry lookups and validation") {
  const auto reg = testing::mixed_registry();
  CHECK(reg->id_of("price") == SlotId{2});
  CHECK(reg->at(SlotId{0}).shared());
  CHECK_FALSE(reg->at(SlotId{1}).shared());
  CHECK_THROWS_AS(reg->id_of("nope"), RegistryError);
  CHECK_THROWS_AS(reg->at(SlotId{9}), RegistryError);
  CHECK_THROWS_AS(SlotRegistry({{"a", SlotKind::Categorical, {"x", "None"}, {}}}), RegistryError);
  CHECK_THROWS_AS(SlotRegistry({{"a", SlotKind::Categorical, {"None"}, {}}}), RegistryError);
  CHECK_THROWS_AS(SlotRegistry({{"a", SlotKind::Extractive, {}, {}}, {"a", SlotKind::Extractive, {}, {}}}),
                  RegistryError);
  const SlotRegistry other({{"area", SlotKind::Categorical, {"None", "north"}, {"a"}}});
  CHECK(other.hash() != reg->hash());
}

TEST_CASE("categorical loss at zero params is ln C") {
  const auto reg = testing::mixed_registry();
  CategoricalSlotModel model(reg, 3);
  CHECK(model.param_count() == 4 * 4 + 3 * 4);
  Rng rng(1);
  for (std::size_t slot : {0u, 2u}) {
    Batch b;
    const std::size_t c = reg->at(SlotId{slot}).values.size();
    b.examples.emplace_back(CategoricalExample{testing::gaussian_feature(rng, 3), SlotId{slot}, 1});
    CHECK(model.loss(ParamVector(model.param_count()), b) == doctest::Approx(std::log(double(c))).epsilon(1e-15));
  }
}

TEST_CASE("categorical gradient touches only the batch's slot") {
  const auto reg = testing::mixed_registry();
  CategoricalSlotModel model(reg, 4);
  Rng rng(3);
  const auto p = uniform_params(model.param_count(), 9, 0.5);
  Batch b;
  for (int i = 0; i < 5; ++i) b.examples.emplace_back(CategoricalExample{testing::gaussian_feature(rng, 4), SlotId{2}, 2});
  const auto g = model.gradient(p, b);
  CHECK(zero_outside(g, model.block(SlotId{2})));
  CHECK(g == model.gradient(p, b));
  CHECK(cat_loss_and_grad(model, p, b).grad == g);
}

TEST_CASE("categorical prediction and tie-breaking") {
  const auto reg = testing::mixed_registry();
  CategoricalSlotModel model(reg, 2);
  const std::vector<double> x{0.4, -1.2};
  ParamVector p(model.param_count());
  CHECK(model.predict_slot(p, x, SlotId{0}).value == "None");
  const auto [off, len] = model.block(SlotId{0});
  CHECK(len == 4 * 3);
  p[off + 4 * 2 + 2] = 0.5;  // bias of value 2
  CHECK(model.predict_slot(p, x, SlotId{0}).value == "south");
  // A constant added to every score of the slot does not change the argmax.
  for (std::size_t v = 0; v < 4; ++v) p[off + 4 * 2 + v] += 7.0;
  CHECK(model.predict_slot(p, x, SlotId{0}).value == "south");
  p[off + 4 * 2 + 3] = p[off + 4 * 2 + 2];
  CHECK(model.predict_slot(p, x, SlotId{0}).value == "south");
  CHECK_THROWS_AS(model.predict_slot(p, x, SlotId{1}), RegistryError);
  CHECK_THROWS_AS(model.block(SlotId{3}), RegistryError);
  CHECK_THROWS_AS(model.predict_slot(p, x, SlotId{7}), RegistryError);
}

TEST_CASE("categorical gold index out of range is a data error") {
  const auto reg = testing::mixed_registry();
  CategoricalSlotModel model(reg, 2);
  Rng rng(4);
  Batch b;
  b.examples.emplace_back(CategoricalExample{testing::gaussian_feature(rng, 2), SlotId{2}, 3});
  CHECK_THROWS_AS(model.loss(ParamVector(model.param_count()), b), DataError);
}

TEST_CASE("fresh head on an unseen slot gets active values almost never right") {
  const auto reg = testing::mixed_registry();
  CategoricalSlotModel model(reg, 8, 0.0);
  const auto p = model.init_params(11);
  Rng rng(12);
  int hits = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto x = testing::gaussian_feature(rng, 8);
    const std::size_t gold = 1 + std::uniform_int_distribution<std::size_t>(0, 2)(rng);
    if (model.predict_slot(p, *x, SlotId{0}).value == reg->at(SlotId{0}).values[gold]) ++hits;
  }
  CHECK(hits == 0);
}

TEST_CASE("extractive loss at zero params is 2 ln T") {
  const auto reg = testing::mixed_registry();
  ExtractiveSlotModel model(reg, 3);
  CHECK(model.param_count() == 2 * 2 * 3);
  Rng rng(5);
  for (std::size_t T : {2u, 5u, 9u}) {
    Batch b;
    b.examples.emplace_back(SpanExample{testing::gaussian_feature(rng, 3 * T), T, SlotId{1}, 0, T - 1});
    CHECK(model.loss(ParamVector(model.param_count()), b) == doctest::Approx(2 * std::log(double(T))).epsilon(1e-15));
  }
}

TEST_CASE("single-position sequence has zero loss and zero gradient") {
  const auto reg = testing::mixed_registry();
  ExtractiveSlotModel model(reg, 3);
  Rng rng(6);
  Batch b;
  b.examples.emplace_back(SpanExample{testing::gaussian_feature(rng, 3), 1, SlotId{3}, 0, 0});
  const auto lg = ext_loss_and_grad(model, uniform_params(model.param_count(), 2, 1.0), b);
  CHECK(lg.loss == 0.0);
  for (double g : lg.grad) CHECK(g == 0.0);
}

TEST_CASE("extractive gradient locality and bad spans") {
  const auto reg = testing::mixed_registry();
  ExtractiveSlotModel model(reg, 3);
  Rng rng(7);
  const auto p = uniform_params(model.param_count(), 5, 1.0);
  Batch b;
  b.examples.emplace_back(SpanExample{testing::gaussian_feature(rng, 12), 4, SlotId{3}, 1, 2});
  CHECK(zero_outside(model.gradient(p, b), model.block(SlotId{3})));

  Batch bad;
  bad.examples.emplace_back(SpanExample{testing::gaussian_feature(rng, 12), 4, SlotId{3}, 2, 1});
  CHECK_THROWS_AS(model.loss(p, bad), DataError);
  bad.examples[0] = SpanExample{testing::gaussian_feature(rng, 12), 4, SlotId{3}, 1, 4};
  CHECK_THROWS_AS(model.loss(p, bad), DataError);
  bad.examples[0] = SpanExample{testing::gaussian_feature(rng, 12), 4, SlotId{0}, 1, 1};
  CHECK_THROWS_AS(model.loss(p, bad), RegistryError);
}

TEST_CASE("span prediction tie-breaking and examples") {
  const auto reg = testing::mixed_registry();
  ExtractiveSlotModel model(reg, 1);
  const std::vector<double> xs{1, 1, 1, 1, 1};
  ParamVector p(model.param_count());
  const auto pred = model.predict_slot(p, xs, 5, SlotId{1});
  CHECK(pred.start == 0);
  CHECK(pred.end == 0);
  CHECK(pred.value == "None");
  CHECK(best_span(std::vector<double>{0, 0, 5, 0, 0}, std::vector<double>{0, 0, 0, 0, 4}) ==
        std::pair<std::size_t, std::size_t>{2, 4});
  // Unconstrained best is start 3, end 1; the valid optimum differs.
  CHECK(best_span(std::vector<double>{0, 1, 0, 9}, std::vector<double>{0, 9, 0, 1}) ==
        std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(span_value(2, 4) != "None");
}

TEST_CASE("best_span agrees with exhaustive enumeration") {
  Rng rng(8);
  std::uniform_int_distribution<int> small(-3, 3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t T = 1 + trial % 9;
    std::vector<double> s(T), e(T);
    for (std::size_t i = 0; i < T; ++i) {
      // Integer scores make ties common; the rest exercise generic inputs.
      s[i] = trial % 2 ? small(rng) : g(rng);
      e[i] = trial % 2 ? small(rng) : g(rng);
    }
    CHECK(best_span(s, e) == brute_force_span(s, e));
  }
}

TEST_CASE("init_params is seeded, scaled and decorrelated across seeds") {
  const auto reg = testing::mixed_registry();
  CategoricalSlotModel model(reg, 6, 0.1);
  const auto a = model.init_params(1);
  CHECK(a == model.init_params(1));
  const auto b = model.init_params(2);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i];
  CHECK(double(differ) >= 0.99 * double(a.size()));
  for (double x : a) CHECK(std::abs(x) <= 0.1);
  CategoricalSlotModel flat(reg, 6, 0.0);
  for (double x : flat.init_params(3)) CHECK(x == 0.0);
}
