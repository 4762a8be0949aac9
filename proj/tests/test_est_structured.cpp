#include <doctest.h>

#include "oracles.hpp"
#include "sensorimotor/est_structured.hpp"
#include "sensorimotor/plants.hpp"

using namespace sensorimotor;

namespace {

// y = x * pi with scalar x and pi.
RegressorModel scalar_identity() {
  RegressorModel reg;
  reg.p = 1;
  reg.m = 1;
  reg.n = 1;
  reg.evaluate = [](const Configuration& x) { return Matrix::Constant(1, 1, x(0)); };
  return reg;
}

std::vector<ObservationYX> scalar_data(std::initializer_list<std::pair<double, double>> xy) {
  std::vector<ObservationYX> data;
  for (auto [x, y] : xy) data.push_back({Vector::Constant(1, y), Vector::Constant(1, x)});
  return data;
}

// Random linear regressor L(x) = [x0 + 2 x1, sin(x1); x0 x1, 1] for p = 2, m = 2.
RegressorModel two_parameter_model() {
  RegressorModel reg;
  reg.p = 2;
  reg.m = 2;
  reg.n = 2;
  reg.evaluate = [](const Configuration& x) {
    Matrix L(2, 2);
    L << x(0) + 2.0 * x(1), std::sin(x(1)), x(0) * x(1), 1.0;
    return L;
  };
  return reg;
}

}  // namespace

TEST_CASE("cost_U examples") {
  const auto reg = scalar_identity();
  const auto data = scalar_data({{1, 2}, {2, 4}});
  CHECK(cost_U(data, Vector::Constant(1, 2.0), 1.0, reg) == doctest::Approx(0.0));
  CHECK(cost_U(data, Vector::Constant(1, 0.0), 1.0, reg) == doctest::Approx(10.0));
  CHECK(cost_U(data, Vector::Constant(1, 0.7), 2.0, reg) ==
        doctest::Approx(2.0 * cost_U(data, Vector::Constant(1, 0.7), 1.0, reg)));
  CHECK_THROWS_AS(cost_U({}, Vector::Constant(1, 0.0), 1.0, reg), InvalidInput);
  CHECK_THROWS_AS(cost_U(data, Vector::Zero(2), 1.0, reg), ContractError);
}

TEST_CASE("grad_U examples and finite-difference agreement") {
  const auto reg = scalar_identity();
  CHECK(grad_U(scalar_data({{1, 2}, {2, 4}}), Vector::Constant(1, 2.0), 3.0, reg).norm() ==
        doctest::Approx(0.0));
  CHECK(grad_U(scalar_data({{1, 2}}), Vector::Constant(1, 0.0), 1.0, reg)(0) == doctest::Approx(-2.0));

  std::mt19937_64 rng(21);
  const auto model = two_parameter_model();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ObservationYX> data;
    for (int k = 0; k < 5; ++k) {
      data.push_back({oracle::random_vector(rng, 2), oracle::random_vector(rng, 2)});
    }
    const Vector pi = oracle::random_vector(rng, 2, -3.0, 3.0);
    const double gamma = 0.5 + trial * 0.1;
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& p) { return cost_U(data, p, gamma, model); }, pi);
    const Vector g = grad_U(data, pi, gamma, model);
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("update_parameters examples") {
  const auto reg = scalar_identity();
  CHECK(update_parameters(Vector::Constant(1, 2.0), scalar_data({{1, 2}, {2, 4}}), 0.1, reg)(0) ==
        doctest::Approx(2.0));
  CHECK(update_parameters(Vector::Constant(1, 0.0), scalar_data({{1, 2}}), 0.5, reg)(0) ==
        doctest::Approx(1.0));

  std::mt19937_64 rng(22);
  const auto model = two_parameter_model();
  std::vector<ObservationYX> data;
  for (int k = 0; k < 6; ++k) data.push_back({oracle::random_vector(rng, 2), oracle::random_vector(rng, 2)});
  const double gamma = stable_gain_U(data, model);
  Vector pi = Vector::Constant(2, 4.0);
  double previous = cost_U(data, pi, gamma, model);
  for (int k = 0; k < 20; ++k) {
    pi = update_parameters(pi, data, gamma, model);
    const double now = cost_U(data, pi, gamma, model);
    CHECK(now < previous);
    previous = now;
  }
}

TEST_CASE("cost_U is convex in the parameters") {
  std::mt19937_64 rng(23);
  const auto model = two_parameter_model();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ObservationYX> data;
    for (int k = 0; k < 4; ++k) data.push_back({oracle::random_vector(rng, 2), oracle::random_vector(rng, 2)});
    const Vector a = oracle::random_vector(rng, 2, -5, 5);
    const Vector b = oracle::random_vector(rng, 2, -5, 5);
    CHECK(cost_U(data, 0.5 * (a + b), 1.0, model) <=
          0.5 * cost_U(data, a, 1.0, model) + 0.5 * cost_U(data, b, 1.0, model) + 1e-12);
  }
}

TEST_CASE("fit matches the closed-form least-squares solution") {
  const auto reg = scalar_identity();
  const auto data = scalar_data({{1, 2}, {2, 4}});
  FitSchedule schedule;
  schedule.gamma = stable_gain_U(data, reg);
  const FitResult r = fit(data, Vector::Zero(1), schedule, reg);
  CHECK(r.converged);
  CHECK(std::abs(r.params(0) - 2.0) <= 1e-6);

  std::mt19937_64 rng(24);
  const auto model = two_parameter_model();
  Vector truth(2);
  truth << 1.0, -3.0;
  std::vector<ObservationYX> generated;
  std::vector<Matrix> L;
  std::vector<Vector> y;
  for (int k = 0; k < 8; ++k) {
    const Vector x = oracle::random_vector(rng, 2);
    L.push_back(model.evaluate(x));
    y.push_back(L.back() * truth);
    generated.push_back({y.back(), x});
  }
  schedule.gamma = stable_gain_U(generated, model);
  schedule.grad_tol = 1e-12;
  schedule.max_iters = 1000000;
  const FitResult rec = fit(generated, Vector::Zero(2), schedule, model);
  CHECK((rec.params - truth).norm() <= 1e-6);
  CHECK((rec.params - oracle::stacked_least_squares(L, y)).norm() <= 1e-6);

  const FitResult fixed = fit(generated, truth, schedule, model);
  CHECK((fixed.params - truth).norm() <= 1e-12);
  CHECK(fixed.iterations == 0);
}

TEST_CASE("fit reports divergence for a gain that is too large") {
  const auto reg = scalar_identity();
  FitSchedule schedule;
  schedule.gamma = 10.0;
  CHECK_THROWS_AS(fit(scalar_data({{1, 2}, {2, 4}}), Vector::Zero(1), schedule, reg), StepSizeError);
  schedule.gamma = -1.0;
  CHECK_THROWS_AS(fit(scalar_data({{1, 2}}), Vector::Zero(1), schedule, reg), InvalidInput);
}

TEST_CASE("fit with a gain below the stable bound never increases the cost") {
  std::mt19937_64 rng(25);
  const auto model = two_parameter_model();
  std::vector<ObservationYX> data;
  for (int k = 0; k < 6; ++k) data.push_back({oracle::random_vector(rng, 2), oracle::random_vector(rng, 2)});
  FitSchedule schedule;
  schedule.gamma = 0.9 * stable_gain_U(data, model);
  Vector pi = Vector::Constant(2, -2.0);
  double previous = cost_U(data, pi, 1.0, model);
  for (int iters = 1; iters <= 30; ++iters) {
    schedule.max_iters = iters;
    pi = fit(data, Vector::Constant(2, -2.0), schedule, model).params;
    const double now = cost_U(data, pi, 1.0, model);
    CHECK(now <= previous + 1e-15);
    previous = now;
  }
}

TEST_CASE("jacobian_from_parameters") {
  const auto reg = scalar_identity();
  CHECK(jacobian_from_parameters(reg, Vector::Constant(1, 0.3), Vector::Constant(1, 2.0))(0, 0) ==
        doctest::Approx(2.0));

  RegressorModel constant;
  constant.p = 2;
  constant.m = 2;
  constant.n = 3;
  constant.evaluate = [](const Configuration&) { return Matrix::Identity(2, 2); };
  CHECK(jacobian_from_parameters(constant, Vector::Ones(3), Vector::Ones(2)).norm() == 0.0);

  CameraArmParams params = CameraArmParams::defaults();
  CameraArmPlant arm(params, CameraArmPlant::default_spec());
  const RegressorModel model = arm.regressor();
  const Vector x0 = Vector::Zero(3);
  const Matrix fd = finite_difference_jacobian(arm, x0, 1e-5);
  CHECK((jacobian_from_parameters(model, x0, arm.true_parameters()) - fd).norm() <= 1e-4);

  // The finite-difference fallback agrees with the analytic derivative.
  RegressorModel no_dx = model;
  no_dx.evaluate_dx = nullptr;
  std::mt19937_64 rng(26);
  for (int k = 0; k < 5; ++k) {
    const Vector x = oracle::random_vector(rng, 3, -1.0, 1.0);
    CHECK((jacobian_from_parameters(no_dx, x, arm.true_parameters()) -
           jacobian_from_parameters(model, x, arm.true_parameters()))
              .norm() <= 1e-7);
  }
  CHECK_THROWS_AS(jacobian_from_parameters(model, Vector::Zero(2), arm.true_parameters()), ContractError);
}
