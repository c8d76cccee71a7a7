#include <doctest.h>

#include <cmath>
#include <limits>

#include "dreptile/diffcore.hpp"
#include "dreptile/errors.hpp"
#include "support.hpp"

using namespace dreptile;

namespace {

// Loss blows up away from the origin so the oracle's probes hit NaN.
class PoleModel final : public ModelContract {
 public:
  std::size_t param_count() const override { return 2; }
  LossAndGrad loss_and_grad(const ParamVector& p, const Batch&) const override {
    return {p[0] > 0 ? std::log(-p[0]) : p[0] * p[0], ParamVector(2)};
  }
  Prediction predict(const ParamVector&, const Example&) const override { return {}; }
  ParamVector init_params(std::uint64_t) const override { return ParamVector(2); }
};

}  // namespace

TEST_CASE("quadratic gradient matches finite differences") {
  QuadraticModel model({1.0, -2.0, 0.5});
  const ParamVector theta{0.3, 0.7, -1.1};
  const auto analytic = model.gradient(theta, unit_batch());
  CHECK(analytic == ParamVector{-0.7, 2.7, -1.6000000000000001});
  const auto numeric = finite_diff_grad(model, theta, unit_batch());
  CHECK(max_abs_difference(analytic, numeric) < 1e-9);
  CHECK(model.loss(theta, unit_batch()) == doctest::Approx(0.5 * (0.49 + 7.29 + 2.56)));
}

TEST_CASE("constant loss has zero numerical gradient") {
  ConstantModel model(4, 3.25);
  const auto g = finite_diff_grad(model, ParamVector{1, 2, 3, 4}, unit_batch());
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("finite_diff_grad rejects bad step and non-finite parameters") {
  QuadraticModel model({0.0, 0.0});
  CHECK_THROWS_AS(finite_diff_grad(model, ParamVector{1, 1}, unit_batch(), 0.0), ContractViolation);
  CHECK_THROWS_AS(finite_diff_grad(model, ParamVector{1, 1}, unit_batch(), -1e-5), ContractViolation);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(finite_diff_grad(model, ParamVector{nan, 1}, unit_batch()), ContractViolation);
}

TEST_CASE("a non-finite probe is reported with its coordinate") {
  PoleModel model;
  try {
    finite_diff_grad(model, ParamVector{0.0, 0.0}, unit_batch());
    FAIL("expected OracleFailure");
  } catch (const OracleFailure& e) {
    CHECK(std::string(e.what()).find("coordinate 0") != std::string::npos);
  }
}

TEST_CASE("max_relative_error skips coordinates below the floor") {
  CHECK(max_relative_error(ParamVector{1.0, 1e-12}, ParamVector{1.0, 3e-12}) == 0.0);
  CHECK(max_relative_error(ParamVector{2.0, 0.0}, ParamVector{1.0, 0.0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(max_relative_error(ParamVector{1.0}, ParamVector{1.0, 2.0}), ContractViolation);
}

TEST_CASE("uniform_params is seeded and bounded") {
  const auto a = uniform_params(500, 7, 0.3);
  CHECK(a == uniform_params(500, 7, 0.3));
  CHECK_FALSE(a == uniform_params(500, 8, 0.3));
  for (double x : a) CHECK(std::abs(x) <= 0.3);
  for (double x : uniform_params(10, 7, 0.0)) CHECK(x == 0.0);
}

TEST_CASE("element-wise helpers") {
  ParamVector y{1, 1};
  axpy(2.0, ParamVector{3, -1}, y);
  CHECK(y == ParamVector{7, -1});
  CHECK(subtract(ParamVector{5, 5}, ParamVector{2, 7}) == ParamVector{3, -2});
  CHECK(dot(ParamVector{1, 2}, ParamVector{3, 4}) == 11.0);
  CHECK_THROWS_AS(subtract(ParamVector{1}, ParamVector{1, 2}), ContractViolation);
  CHECK_THROWS_AS(axpy(1.0, ParamVector{1}, y), ContractViolation);
}

TEST_CASE("slot model gradients match central differences") {
  const auto reg = testing::mixed_registry();
  const std::size_t dim = 5;
  CategoricalSlotModel cat(reg, dim);
  ExtractiveSlotModel ext(reg, dim);
  Rng rng(2024);
  double worst_cat = 0.0, worst_ext = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto pc = uniform_params(cat.param_count(), 100 + i, 1.0);
    const auto bc = testing::random_categorical_batch(rng, *reg, dim, 4);
    worst_cat = std::max(worst_cat, max_relative_error(cat.gradient(pc, bc), finite_diff_grad(cat, pc, bc)));
    const auto pe = uniform_params(ext.param_count(), 200 + i, 1.0);
    const auto be = testing::random_span_batch(rng, *reg, dim, 6, 4);
    worst_ext = std::max(worst_ext, max_relative_error(ext.gradient(pe, be), finite_diff_grad(ext, pe, be)));
    CHECK(cat.loss(pc, bc) >= 0.0);
    CHECK(ext.loss(pe, be) >= 0.0);
    CHECK(cat.gradient(pc, bc) == cat.gradient(pc, bc));
    CHECK(ext.gradient(pe, be) == ext.gradient(pe, be));
  }
  CHECK(worst_cat <= 1e-5);
  CHECK(worst_ext <= 1e-5);
}
