#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "sensorimotor/est_distributed.hpp"

using namespace sensorimotor;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ComputingUnit unit_at(const Vector& anchor, Eigen::Index m) {
  return {anchor, Matrix::Zero(m, anchor.size()), false};
}

FitSchedule tight(double gamma) {
  FitSchedule s;
  s.gamma = gamma;
  s.grad_tol = 1e-12;
  s.max_iters = 200000;
  return s;
}

std::vector<LocalizedObservation> linear_data(const Matrix& a, const Box& box, int count,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LocalizedObservation> data;
  for (int k = 0; k < count; ++k) {
    Vector x = box.lower;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x(i) += (box.upper(i) - box.lower(i)) * std::uniform_real_distribution<double>(0, 1)(rng);
    }
    const Vector u = oracle::random_vector(rng, a.cols(), -0.05, 0.05);
    data.push_back({x, {a * u, u}});
  }
  return data;
}

}  // namespace

TEST_CASE("grid allocation") {
  const Box unit{vec({0}), vec({1})};
  const std::vector<int> three{3};
  const UnitNetwork line = allocate_grid(unit, three, 2);
  REQUIRE(line.units.size() == 3);
  CHECK(line.units[0].anchor(0) == 0.0);
  CHECK(line.units[1].anchor(0) == 0.5);
  CHECK(line.units[2].anchor(0) == 1.0);
  CHECK(line.sigma == doctest::Approx(0.25));
  CHECK(line.units[0].local_jacobian.rows() == 2);
  CHECK_FALSE(line.units[0].trained);

  const Box square{vec({0, 0}), vec({1, 1})};
  const std::vector<int> two{2, 2};
  const UnitNetwork grid = allocate_grid(square, two, 1);
  REQUIRE(grid.units.size() == 4);
  CHECK(grid.units[0].anchor == vec({0, 0}));
  CHECK(grid.units[1].anchor == vec({0, 1}));
  CHECK(grid.units[2].anchor == vec({1, 0}));
  CHECK(grid.units[3].anchor == vec({1, 1}));
}

TEST_CASE("random and k-means allocation are deterministic") {
  const Box box{vec({-1, 0, 2}), vec({1, 3, 4})};
  const UnitNetwork a = allocate_random(box, 12, 2, 99);
  const UnitNetwork b = allocate_random(box, 12, 2, 99);
  REQUIRE(a.units.size() == 12);
  for (std::size_t l = 0; l < a.units.size(); ++l) {
    CHECK(a.units[l].anchor == b.units[l].anchor);
    CHECK(box.contains(a.units[l].anchor));
  }

  std::mt19937_64 rng(41);
  std::vector<Configuration> samples;
  for (int k = 0; k < 60; ++k) samples.push_back(oracle::random_vector(rng, 2));
  const UnitNetwork k1 = allocate_kmeans(samples, 5, 1, 3);
  const UnitNetwork k2 = allocate_kmeans(samples, 5, 1, 3);
  REQUIRE(k1.units.size() == 5);
  for (std::size_t l = 0; l < 5; ++l) CHECK(k1.units[l].anchor == k2.units[l].anchor);
  CHECK_THROWS_AS(allocate_kmeans(samples, 61, 1, 3), InvalidInput);
}

TEST_CASE("neighborhood_weight") {
  const Vector a = vec({0.2, -0.1});
  CHECK(neighborhood_weight(a, a, 0.3) == 1.0);
  const Vector at_sigma = a + vec({0.3 * 0.6, 0.3 * 0.8});
  CHECK(neighborhood_weight(a, at_sigma, 0.3) == doctest::Approx(0.6065306597).epsilon(1e-9));
  CHECK(neighborhood_weight(a, a + vec({0.1, 0}), 0.3) > neighborhood_weight(a, a + vec({0.2, 0}), 0.3));

  std::mt19937_64 rng(42);
  for (int k = 0; k < 50; ++k) {
    const Vector p = oracle::random_vector(rng, 3);
    const Vector q = oracle::random_vector(rng, 3);
    const double h = neighborhood_weight(p, q, 0.7);
    CHECK(h > 0.0);
    CHECK(h < 1.0);
    CHECK(h == neighborhood_weight(q, p, 0.7));
  }
  CHECK_THROWS_AS(neighborhood_weight(a, a, 0.0), InvalidInput);
}

TEST_CASE("cost_W examples") {
  ComputingUnit unit = unit_at(vec({0, 0}), 2);
  const ObservationDU obs{vec({3, 4}), vec({1, 0})};
  const double sigma = 0.5;
  const LocalCost at_anchor = cost_W(unit, std::vector<LocalizedObservation>{{vec({0, 0}), obs}}, sigma,
                                     2.0, kDefaultBallCutoff);
  CHECK(at_anchor.value == doctest::Approx(25.0));
  CHECK(at_anchor.ball_size == 1);

  const LocalCost at_sigma = cost_W(unit, std::vector<LocalizedObservation>{{vec({sigma, 0}), obs}},
                                    sigma, 2.0, kDefaultBallCutoff);
  CHECK(at_sigma.value == doctest::Approx(25.0 * 0.6065306597).epsilon(1e-9));

  unit.local_jacobian << 3, 0, 4, 0;
  CHECK(cost_W(unit, std::vector<LocalizedObservation>{{vec({0, 0}), obs}}, sigma, 2.0,
               kDefaultBallCutoff)
            .value == doctest::Approx(0.0));

  const LocalCost far = cost_W(unit, std::vector<LocalizedObservation>{{vec({10, 0}), obs}}, sigma,
                               2.0, kDefaultBallCutoff);
  CHECK(far.empty_ball());
  CHECK(far.value == 0.0);
}

TEST_CASE("grad_W matches central differences of cost_W") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    ComputingUnit unit = unit_at(oracle::random_vector(rng, 3, -0.2, 0.2), 2);
    unit.local_jacobian = oracle::random_matrix(rng, 2, 3);
    std::vector<LocalizedObservation> data;
    for (int k = 0; k < 8; ++k) {
      data.push_back({oracle::random_vector(rng, 3, -0.5, 0.5),
                      {oracle::random_vector(rng, 2), oracle::random_vector(rng, 3)}});
    }
    const double sigma = 0.4;
    const double gamma = 0.5 + 0.05 * trial;
    const Matrix fd = oracle::fd_gradient(
        [&](const Matrix& a) {
          ComputingUnit probe = unit;
          probe.local_jacobian = a;
          return cost_W(probe, data, sigma, gamma, kDefaultBallCutoff).value;
        },
        unit.local_jacobian);
    const Matrix g = grad_W(unit, data, sigma, gamma, kDefaultBallCutoff);
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("train_unit converges to the weighted least-squares solution") {
  const ComputingUnit unit = unit_at(vec({0, 0}), 2);
  const std::vector<LocalizedObservation> one{{vec({0, 0}), {vec({2, 3}), vec({1, 0})}}};
  const UnitTraining single = train_unit(unit, one, 0.5, kDefaultBallCutoff, tight(0.5));
  Matrix want(2, 2);
  want << 2, 0, 3, 0;
  CHECK(single.status == UnitStatus::Trained);
  CHECK(single.unit.trained);
  CHECK((single.unit.local_jacobian - want).norm() <= 1e-6);

  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 2, 3);
    std::vector<LocalizedObservation> data;
    std::vector<Vector> us;
    std::vector<Vector> ds;
    std::vector<double> ws;
    const ComputingUnit u0 = unit_at(vec({0, 0, 0}), 2);
    for (int k = 0; k < 6; ++k) {
      const Vector x = oracle::random_vector(rng, 3, -0.3, 0.3);
      const Vector u = oracle::random_vector(rng, 3);
      const Vector d = oracle::random_vector(rng, 2);  // deliberately inconsistent
      data.push_back({x, {d, u}});
      us.push_back(u);
      ds.push_back(d);
      ws.push_back(neighborhood_weight(u0.anchor, x, 0.5));
    }
    const auto gain = stable_gain_W(u0, data, 0.5, kDefaultBallCutoff);
    REQUIRE(gain.has_value());
    const UnitTraining t = train_unit(u0, data, 0.5, kDefaultBallCutoff, tight(*gain));
    CHECK((t.unit.local_jacobian - oracle::weighted_jacobian(us, ds, ws)).norm() <= 1e-6);

    // Exact data from a linear map recovers the map.
    std::vector<LocalizedObservation> exact;
    for (int k = 0; k < 5; ++k) {
      const Vector u = oracle::random_vector(rng, 3);
      exact.push_back({oracle::random_vector(rng, 3, -0.2, 0.2), {a * u, u}});
    }
    const auto g2 = stable_gain_W(u0, exact, 0.5, kDefaultBallCutoff);
    const UnitTraining lin = train_unit(u0, exact, 0.5, kDefaultBallCutoff, tight(*g2));
    CHECK((lin.unit.local_jacobian - a).norm() <= 1e-6);

    ComputingUnit at_solution = u0;
    at_solution.local_jacobian = a;
    const UnitTraining again = train_unit(at_solution, exact, 0.5, kDefaultBallCutoff, tight(*g2));
    CHECK((again.unit.local_jacobian - a).norm() <= 1e-10);
  }
}

TEST_CASE("empty balls are reported and leave the unit untrained") {
  const ComputingUnit unit = unit_at(vec({0, 0}), 1);
  const std::vector<LocalizedObservation> far{{vec({5, 5}), {vec({1}), vec({1, 0})}}};
  const UnitTraining t = train_unit(unit, far, 0.1, kDefaultBallCutoff, tight(0.5));
  CHECK(t.status == UnitStatus::EmptyBall);
  CHECK(t.ball_size == 0);
  CHECK_FALSE(t.unit.trained);
  CHECK_FALSE(stable_gain_W(unit, far, 0.1, kDefaultBallCutoff).has_value());

  const Box box{vec({0, 0}), vec({1, 1})};
  const std::vector<int> two{2, 2};
  UnitNetwork net = allocate_grid(box, two, 1, 0.1);
  const std::vector<LocalizedObservation> near_origin{{vec({0.01, 0.0}), {vec({1}), vec({1, 0})}}};
  const NetworkTraining trained = train_network(net, near_origin, tight(0.5));
  CHECK(trained.empty_units == std::vector<std::size_t>{1, 2, 3});
  CHECK(trained.network.units[0].trained);
  CHECK_FALSE(trained.network.units[3].trained);
  CHECK_THROWS_AS(query_jacobian(trained.network, vec({0.9, 0.9})), UntrainedRegion);
  CHECK_NOTHROW(query_jacobian(trained.network, vec({0.1, 0.1})));
}

TEST_CASE("train_network on a linear plant recovers the plant everywhere") {
  std::mt19937_64 rng(45);
  const Matrix a = oracle::random_matrix(rng, 2, 3);
  const Box box{vec({0, 0, 0}), vec({1, 1, 1})};
  const std::vector<int> grid{2, 2, 2};
  const UnitNetwork net = allocate_grid(box, grid, 2);
  const auto data = linear_data(a, box, 400, 46);
  FitSchedule schedule = tight(1.0);
  const NetworkTraining trained = train_network(net, data, schedule, GainMode::PerUnitStable);
  CHECK(trained.empty_units.empty());
  for (const auto& unit : trained.network.units) {
    CHECK((unit.local_jacobian - a).norm() <= 1e-6);
  }
  for (int k = 0; k < 10; ++k) {
    const Vector x = oracle::random_vector(rng, 3, 0.0, 1.0);
    CHECK((query_jacobian(trained.network, x) - a).norm() <= 1e-6);
  }

  // Idempotence.
  const NetworkTraining twice = train_network(trained.network, data, schedule, GainMode::PerUnitStable);
  for (std::size_t l = 0; l < net.units.size(); ++l) {
    CHECK((twice.network.units[l].local_jacobian - trained.network.units[l].local_jacobian).norm() <= 1e-9);
  }

  // A one-unit network is the same as training that unit.
  UnitNetwork single;
  single.units = {net.units[3]};
  single.sigma = net.sigma;
  const auto gain = stable_gain_W(net.units[3], data, net.sigma, net.h_min);
  FitSchedule fixed = tight(*gain);
  const NetworkTraining one = train_network(single, data, fixed);
  const UnitTraining direct = train_unit(net.units[3], data, net.sigma, net.h_min, fixed);
  CHECK(one.network.units[0].local_jacobian == direct.unit.local_jacobian);
}

TEST_CASE("units fit only their own cluster") {
  std::mt19937_64 rng(47);
  const Matrix left = oracle::random_matrix(rng, 1, 2);
  const Matrix right = oracle::random_matrix(rng, 1, 2);
  UnitNetwork net;
  net.sigma = 0.1;
  net.units = {unit_at(vec({0, 0}), 1), unit_at(vec({10, 0}), 1)};
  std::vector<LocalizedObservation> data;
  for (int k = 0; k < 10; ++k) {
    const Vector u = oracle::random_vector(rng, 2);
    data.push_back({oracle::random_vector(rng, 2, -0.05, 0.05), {left * u, u}});
    const Vector v = oracle::random_vector(rng, 2);
    data.push_back({vec({10, 0}) + oracle::random_vector(rng, 2, -0.05, 0.05), {right * v, v}});
  }
  const NetworkTraining trained = train_network(net, data, tight(1.0), GainMode::PerUnitStable);
  CHECK((trained.network.units[0].local_jacobian - left).norm() <= 1e-6);
  CHECK((trained.network.units[1].local_jacobian - right).norm() <= 1e-6);

  // Moving an observation that no ball contains changes nothing.
  auto moved = data;
  moved.push_back({vec({5, 0}), {vec({100}), vec({1, 1})}});
  const NetworkTraining again = train_network(net, moved, tight(1.0), GainMode::PerUnitStable);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(again.network.units[l].local_jacobian == trained.network.units[l].local_jacobian);
  }
}

TEST_CASE("winner") {
  UnitNetwork net;
  net.units = {unit_at(vec({0}), 1), unit_at(vec({1}), 1)};
  CHECK(winner(net, vec({0.4})) == 0);
  CHECK(winner(net, vec({0.5})) == 0);
  CHECK(winner(net, vec({1.0})) == 1);
  CHECK(winner(net, vec({0.7})) == 1);

  std::mt19937_64 rng(48);
  for (int trial = 0; trial < 100; ++trial) {
    UnitNetwork random;
    const int count = 1 + trial % 20;
    for (int l = 0; l < count; ++l) random.units.push_back(unit_at(oracle::random_vector(rng, 3), 1));
    const Vector x = oracle::random_vector(rng, 3);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : random.units) best = std::min(best, (u.anchor - x).norm());
    CHECK((random.units[winner(random, x)].anchor - x).norm() == best);
  }
}

TEST_CASE("query_jacobian returns the winner's estimate") {
  UnitNetwork net;
  net.units = {unit_at(vec({0}), 1), unit_at(vec({1}), 1)};
  net.units[0].local_jacobian(0, 0) = 2.0;
  net.units[0].trained = true;
  net.units[1].local_jacobian(0, 0) = 5.0;
  net.units[1].trained = true;
  CHECK(query_jacobian(net, vec({0.0}))(0, 0) == 2.0);
  CHECK(query_jacobian(net, vec({0.3}))(0, 0) == 2.0);
  CHECK(query_jacobian(net, vec({0.9}))(0, 0) == 5.0);
}

TEST_CASE("combined_cost_H and refine_unit") {
  std::mt19937_64 rng(49);
  ComputingUnit unit = unit_at(vec({0, 0}), 2);
  unit.local_jacobian = oracle::random_matrix(rng, 2, 2);
  std::vector<LocalizedObservation> data;
  for (int k = 0; k < 4; ++k) {
    data.push_back({oracle::random_vector(rng, 2, -0.1, 0.1),
                    {oracle::random_vector(rng, 2), oracle::random_vector(rng, 2)}});
  }
  const Vector u = vec({0.3, -0.4});
  const ObservationDU consistent{unit.local_jacobian * u, u};
  const double w = cost_W(unit, data, 0.2, 1.5, kDefaultBallCutoff).value;
  CHECK(combined_cost_H(unit, data, consistent, 0.2, 1.5, kDefaultBallCutoff).value == doctest::Approx(w));

  const ObservationDU current{vec({1, -2}), u};
  const std::vector<LocalizedObservation> far{{vec({9, 9}), {vec({1, 1}), vec({1, 1})}}};
  const LocalCost alone = combined_cost_H(unit, far, current, 0.2, 1.5, kDefaultBallCutoff);
  CHECK(alone.empty_ball());
  CHECK(alone.value == doctest::Approx(cost_V(unit.local_jacobian, current, 1.5)));

  CHECK(combined_cost_H(unit, data, current, 0.2, 1.5, kDefaultBallCutoff).value ==
        doctest::Approx(w + cost_V(unit.local_jacobian, current, 1.5)));

  // One refinement step moves against the gradient of H.
  const double gamma = 0.05;
  const ComputingUnit refined = refine_unit(unit, data, current, 0.2, gamma, kDefaultBallCutoff);
  const Matrix grad_h = oracle::fd_gradient(
      [&](const Matrix& a) {
        ComputingUnit probe = unit;
        probe.local_jacobian = a;
        return combined_cost_H(probe, data, current, 0.2, gamma, kDefaultBallCutoff).value;
      },
      unit.local_jacobian);
  CHECK((refined.local_jacobian - (unit.local_jacobian - grad_h)).norm() <= 1e-6);
}

TEST_CASE("network snapshot round-trips") {
  std::mt19937_64 rng(50);
  const Box box{vec({0, -1}), vec({1, 1})};
  const std::vector<int> grid{2, 3};
  UnitNetwork net = allocate_grid(box, grid, 3);
  for (auto& unit : net.units) {
    unit.local_jacobian = oracle::random_matrix(rng, 3, 2);
    unit.trained = unit.anchor(1) >= 0.0;
  }
  std::stringstream buf;
  write_network(buf, net);
  const UnitNetwork back = read_network(buf);
  REQUIRE(back.units.size() == net.units.size());
  CHECK(back.sigma == net.sigma);
  CHECK(back.h_min == net.h_min);
  for (std::size_t l = 0; l < net.units.size(); ++l) {
    CHECK(back.units[l].anchor == net.units[l].anchor);
    CHECK(back.units[l].local_jacobian == net.units[l].local_jacobian);
    CHECK(back.units[l].trained == net.units[l].trained);
  }

  std::stringstream bad("not-a-network 1\n");
  CHECK_THROWS_AS(read_network(bad), InvalidInput);
  std::stringstream truncated("sensorimotor-network 1\n2 1 1\n0.5 0.01\n1 0 3\n");
  CHECK_THROWS_AS(read_network(truncated), InvalidInput);
  CHECK_THROWS_AS(load_network("/nonexistent/dir/net.txt"), FileError);
}
