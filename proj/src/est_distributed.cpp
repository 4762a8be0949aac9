#include "sensorimotor/est_distributed.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "sensorimotor/text_io.hpp"

namespace sensorimotor {

namespace {

constexpr const char* kSnapshotHeader = "sensorimotor-network 1";

double default_sigma(const std::vector<ComputingUnit>& units, double fallback_scale) {
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < units.size(); ++a) {
    for (std::size_t b = a + 1; b < units.size(); ++b) {
      const double d = (units[a].anchor - units[b].anchor).norm();
      if (d > 0.0) closest = std::min(closest, d);
    }
  }
  if (std::isfinite(closest)) return 0.5 * closest;
  return fallback_scale > 0.0 ? 0.5 * fallback_scale : 1.0;
}

UnitNetwork make_network(std::vector<Configuration> anchors, Eigen::Index m,
                         std::optional<double> sigma, double fallback_scale) {
  if (m < 1) throw InvalidInput("allocate: feature dimension must be >= 1");
  UnitNetwork net;
  net.units.reserve(anchors.size());
  for (auto& a : anchors) {
    const Eigen::Index n = a.size();
    net.units.push_back({std::move(a), JacobianEstimate::Zero(m, n), false});
  }
  net.sigma = sigma ? *sigma : default_sigma(net.units, fallback_scale);
  net.validate();
  return net;
}

// Weighted second moments of a unit's ball:
//   uu = sum h u u^T, du = sum h delta u^T, dd = sum h |delta|^2.
struct BallMoments {
  Matrix uu;
  Matrix du;
  double dd = 0.0;
  std::size_t count = 0;
};

BallMoments ball_moments(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                         double sigma, double h_min) {
  const Eigen::Index m = unit.local_jacobian.rows();
  const Eigen::Index n = unit.local_jacobian.cols();
  BallMoments mom{Matrix::Zero(n, n), Matrix::Zero(m, n), 0.0, 0};
  for (const auto& sample : data) {
    if (sample.x.size() != n || sample.obs.u.size() != n || sample.obs.delta.size() != m) {
      throw ContractError("distributed: observation dimensions do not match the unit");
    }
    const double h = neighborhood_weight(unit.anchor, sample.x, sigma);
    if (h < h_min) continue;
    mom.uu.noalias() += h * sample.obs.u * sample.obs.u.transpose();
    mom.du.noalias() += h * sample.obs.delta * sample.obs.u.transpose();
    mom.dd += h * sample.obs.delta.squaredNorm();
    ++mom.count;
  }
  return mom;
}

double moments_cost(const Matrix& A, const BallMoments& mom, double gamma) {
  return 0.5 * gamma *
         ((A * mom.uu).cwiseProduct(A).sum() - 2.0 * A.cwiseProduct(mom.du).sum() + mom.dd);
}

void check_unit(const ComputingUnit& unit, double sigma, double h_min) {
  if (!(sigma > 0.0)) throw InvalidInput("distributed: sigma must be > 0");
  if (!(h_min > 0.0 && h_min < 1.0)) throw InvalidInput("distributed: h_min must be in (0, 1)");
  if (unit.local_jacobian.cols() != unit.anchor.size()) {
    throw ContractError("distributed: unit Jacobian columns do not match its anchor");
  }
}

}  // namespace

void UnitNetwork::validate() const {
  if (units.empty()) throw InvalidInput("UnitNetwork: needs at least one unit");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("UnitNetwork: sigma must be > 0");
  if (!(h_min > 0.0 && h_min < 1.0)) throw InvalidInput("UnitNetwork: h_min must be in (0, 1)");
  const Eigen::Index nn = n();
  const Eigen::Index mm = m();
  for (const auto& u : units) {
    if (u.anchor.size() != nn || u.local_jacobian.rows() != mm || u.local_jacobian.cols() != nn) {
      throw ContractError("UnitNetwork: inconsistent unit dimensions");
    }
  }
}

const char* to_string(Placement placement) {
  switch (placement) {
    case Placement::UniformGrid: return "uniform-grid";
    case Placement::Random: return "random";
    case Placement::DataKMeans: return "data-kmeans";
  }
  return "?";
}

Placement parse_placement(const std::string& name) {
  if (name == "uniform-grid") return Placement::UniformGrid;
  if (name == "random") return Placement::Random;
  if (name == "data-kmeans") return Placement::DataKMeans;
  throw InvalidInput("unknown placement strategy '" + name + "'");
}

UnitNetwork allocate_grid(const Box& domain, std::span<const int> per_axis, Eigen::Index m,
                          std::optional<double> sigma) {
  domain.validate();
  const Eigen::Index n = domain.dim();
  if (static_cast<Eigen::Index>(per_axis.size()) != n) {
    throw InvalidInput("allocate_grid: need one count per axis");
  }
  if (std::any_of(per_axis.begin(), per_axis.end(), [](int c) { return c < 1; })) {
    throw InvalidInput("allocate_grid: counts must be >= 1");
  }
  auto coordinate = [&](Eigen::Index axis, int k) {
    const int count = per_axis[axis];
    if (count == 1) return 0.5 * (domain.lower(axis) + domain.upper(axis));
    const double t = static_cast<double>(k) / (count - 1);
    return k == count - 1 ? domain.upper(axis)
                          : domain.lower(axis) + t * (domain.upper(axis) - domain.lower(axis));
  };

  std::vector<Configuration> anchors;
  std::vector<int> index(n, 0);
  while (true) {
    Configuration a(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = coordinate(i, index[i]);
    anchors.push_back(std::move(a));
    // Odometer increment, last axis fastest.
    Eigen::Index axis = n - 1;
    while (axis >= 0 && ++index[axis] == per_axis[axis]) {
      index[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }

  if (!sigma) {
    double spacing = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (per_axis[i] > 1) {
        spacing = std::min(spacing, (domain.upper(i) - domain.lower(i)) / (per_axis[i] - 1));
      }
    }
    if (std::isfinite(spacing) && spacing > 0.0) sigma = 0.5 * spacing;
  }
  return make_network(std::move(anchors), m, sigma, domain.scale());
}

UnitNetwork allocate_random(const Box& domain, int count, Eigen::Index m, std::uint64_t seed,
                            std::optional<double> sigma) {
  domain.validate();
  if (count < 1) throw InvalidInput("allocate_random: N must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Configuration> anchors;
  for (int k = 0; k < count; ++k) {
    Configuration a(domain.dim());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) = domain.lower(i) + unit(rng) * (domain.upper(i) - domain.lower(i));
    }
    anchors.push_back(std::move(a));
  }
  return make_network(std::move(anchors), m, sigma, domain.scale());
}

UnitNetwork allocate_kmeans(std::span<const Configuration> samples, int count, Eigen::Index m,
                            std::uint64_t seed, std::optional<double> sigma) {
  if (count < 1) throw InvalidInput("allocate_kmeans: N must be >= 1");
  if (samples.size() < static_cast<std::size_t>(count)) {
    throw InvalidInput("allocate_kmeans: N = " + std::to_string(count) + " exceeds the " +
                       std::to_string(samples.size()) + " available samples");
  }
  const Eigen::Index n = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != n) throw ContractError("allocate_kmeans: samples differ in dimension");
  }

  // Partial Fisher-Yates for the initial centroids.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
    std::swap(order[k], order[pick(rng)]);
  }
  std::vector<Configuration> centers;
  for (int k = 0; k < count; ++k) centers.push_back(samples[order[k]]);

  std::vector<std::size_t> label(samples.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t s = 0; s < samples.size(); ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < count; ++k) {
        const double d = (centers[k] - samples[s]).squaredNorm();
        if (d < best) {
          best = d;
          label[s] = static_cast<std::size_t>(k);
        }
      }
    }
    std::vector<Configuration> sums(count, Configuration::Zero(n));
    std::vector<std::size_t> sizes(count, 0);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      sums[label[s]] += samples[s];
      ++sizes[label[s]];
    }
    // An emptied cluster keeps its previous centroid.
    for (int k = 0; k < count; ++k) {
      if (sizes[k] > 0) centers[k] = sums[k] / static_cast<double>(sizes[k]);
    }
  }

  Vector lo = samples.front();
  Vector hi = samples.front();
  for (const auto& s : samples) {
    lo = lo.cwiseMin(s);
    hi = hi.cwiseMax(s);
  }
  return make_network(std::move(centers), m, sigma, (hi - lo).maxCoeff());
}

double neighborhood_weight(const Configuration& anchor, const Configuration& x, double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("neighborhood_weight: sigma must be > 0");
  if (anchor.size() != x.size()) throw ContractError("neighborhood_weight: dimension mismatch");
  return std::exp(-(anchor - x).squaredNorm() / (2.0 * sigma * sigma));
}

LocalCost cost_W(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                 double sigma, double gamma, double h_min) {
  check_unit(unit, sigma, h_min);
  LocalCost cost;
  double sum = 0.0;
  for (const auto& sample : data) {
    const double h = neighborhood_weight(unit.anchor, sample.x, sigma);
    if (h < h_min) continue;
    if (sample.obs.u.size() != unit.local_jacobian.cols() ||
        sample.obs.delta.size() != unit.local_jacobian.rows()) {
      throw ContractError("cost_W: observation dimensions do not match the unit");
    }
    sum += h * (unit.local_jacobian * sample.obs.u - sample.obs.delta).squaredNorm();
    ++cost.ball_size;
  }
  cost.value = 0.5 * gamma * sum;
  return cost;
}

Matrix grad_W(const ComputingUnit& unit, std::span<const LocalizedObservation> data, double sigma,
              double gamma, double h_min) {
  check_unit(unit, sigma, h_min);
  Matrix grad = Matrix::Zero(unit.local_jacobian.rows(), unit.local_jacobian.cols());
  for (const auto& sample : data) {
    const double h = neighborhood_weight(unit.anchor, sample.x, sigma);
    if (h < h_min) continue;
    if (sample.obs.u.size() != grad.cols() || sample.obs.delta.size() != grad.rows()) {
      throw ContractError("grad_W: observation dimensions do not match the unit");
    }
    grad.noalias() +=
        h * (unit.local_jacobian * sample.obs.u - sample.obs.delta) * sample.obs.u.transpose();
  }
  return gamma * grad;
}

LocalCost combined_cost_H(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                          const ObservationDU& current_obs, double sigma, double gamma,
                          double h_min) {
  LocalCost w = cost_W(unit, data, sigma, gamma, h_min);
  w.value += cost_V(unit.local_jacobian, current_obs, gamma);
  return w;
}

std::optional<double> stable_gain_W(const ComputingUnit& unit,
                                    std::span<const LocalizedObservation> data, double sigma,
                                    double h_min) {
  check_unit(unit, sigma, h_min);
  const BallMoments mom = ball_moments(unit, data, sigma, h_min);
  if (mom.count == 0) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(mom.uu, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0)) return std::nullopt;
  return 1.0 / top;
}

UnitTraining train_unit(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                        double sigma, double h_min, const FitSchedule& schedule) {
  schedule.validate();
  check_unit(unit, sigma, h_min);
  const BallMoments mom = ball_moments(unit, data, sigma, h_min);
  UnitTraining out{unit, UnitStatus::EmptyBall, mom.count, 0, false};
  if (mom.count == 0) return out;

  // Same rule as a(i,j) <- a(i,j) - dW/da(i,j), with the ball sums folded into
  // its second moments.
  const double gamma = schedule.gamma;
  const double cost_noise = 1e-12 * 0.5 * gamma * (mom.dd + 1.0);
  Matrix A = unit.local_jacobian;
  double previous = moments_cost(A, mom, gamma);
  int increases = 0;
  int it = 0;
  for (; it < schedule.max_iters; ++it) {
    const Matrix grad = gamma * (A * mom.uu - mom.du);
    if (grad.norm() <= schedule.grad_tol) {
      out.converged = true;
      break;
    }
    A -= grad;
    const double current = moments_cost(A, mom, gamma);
    if (!std::isfinite(current)) {
      throw StepSizeError("train_unit: cost became non-finite; use a smaller gamma");
    }
    increases = current > previous + cost_noise ? increases + 1 : 0;
    if (increases >= 10) {
      throw StepSizeError(
          "train_unit: cost increased for 10 consecutive iterations; use a smaller gamma");
    }
    previous = current;
  }
  if (!out.converged) out.converged = (gamma * (A * mom.uu - mom.du)).norm() <= schedule.grad_tol;
  out.iterations = it;
  out.unit.local_jacobian = std::move(A);
  out.unit.trained = true;
  out.status = UnitStatus::Trained;
  return out;
}

NetworkTraining train_network(const UnitNetwork& network,
                              std::span<const LocalizedObservation> data,
                              const FitSchedule& schedule, GainMode mode) {
  network.validate();
  if (data.empty()) throw InvalidInput("train_network: empty dataset");
  NetworkTraining result{network, {}, {}};
  for (std::size_t l = 0; l < network.units.size(); ++l) {
    FitSchedule unit_schedule = schedule;
    if (mode == GainMode::PerUnitStable) {
      if (auto g = stable_gain_W(network.units[l], data, network.sigma, network.h_min)) {
        unit_schedule.gamma = *g;
      }
    }
    UnitTraining report =
        train_unit(network.units[l], data, network.sigma, network.h_min, unit_schedule);
    if (report.status == UnitStatus::EmptyBall) result.empty_units.push_back(l);
    result.network.units[l] = report.unit;
    result.reports.push_back(std::move(report));
  }
  return result;
}

std::size_t winner(const UnitNetwork& network, const Configuration& x) {
  if (network.units.empty()) throw InvalidInput("winner: empty network");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < network.units.size(); ++l) {
    if (network.units[l].anchor.size() != x.size()) {
      throw ContractError("winner: configuration dimension mismatch");
    }
    const double d = (network.units[l].anchor - x).norm();
    if (d < best_d) {
      best_d = d;
      best = l;
    }
  }
  return best;
}

JacobianEstimate query_jacobian(const UnitNetwork& network, const Configuration& x) {
  const std::size_t l = winner(network, x);
  if (!network.units[l].trained) {
    throw UntrainedRegion("query_jacobian: winning unit " + std::to_string(l) +
                          " has no training data in its neighbourhood");
  }
  return network.units[l].local_jacobian;
}

ComputingUnit refine_unit(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                          const ObservationDU& current_obs, double sigma, double gamma,
                          double h_min) {
  ComputingUnit out = unit;
  out.local_jacobian -=
      grad_V(unit.local_jacobian, current_obs, gamma) + grad_W(unit, data, sigma, gamma, h_min);
  return out;
}

void write_network(std::ostream& out, const UnitNetwork& network) {
  network.validate();
  out << kSnapshotHeader << '\n';
  out << network.units.size() << ' ' << network.n() << ' ' << network.m() << '\n';
  out << format_double(network.sigma) << ' ' << format_double(network.h_min) << '\n';
  for (const auto& unit : network.units) {
    out << (unit.trained ? 1 : 0);
    for (Eigen::Index i = 0; i < unit.anchor.size(); ++i) out << ' ' << format_double(unit.anchor(i));
    for (Eigen::Index r = 0; r < unit.local_jacobian.rows(); ++r) {
      for (Eigen::Index c = 0; c < unit.local_jacobian.cols(); ++c) {
        out << ' ' << format_double(unit.local_jacobian(r, c));
      }
    }
    out << '\n';
  }
}

UnitNetwork read_network(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSnapshotHeader) {
    throw InvalidInput("read_network: missing snapshot header");
  }
  std::size_t count = 0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::string sigma_tok;
  std::string hmin_tok;
  if (!(in >> count >> n >> m >> sigma_tok >> hmin_tok) || count == 0 || n < 1 || m < 1) {
    throw InvalidInput("read_network: malformed dimensions");
  }
  UnitNetwork net;
  net.sigma = parse_double(sigma_tok);
  net.h_min = parse_double(hmin_tok);
  std::string tok;
  auto next = [&]() {
    if (!(in >> tok)) throw InvalidInput("read_network: truncated unit data");
    return parse_double(tok);
  };
  for (std::size_t l = 0; l < count; ++l) {
    ComputingUnit unit{Configuration(n), JacobianEstimate(m, n), false};
    if (!(in >> tok) || (tok != "0" && tok != "1")) {
      throw InvalidInput("read_network: bad trained flag for unit " + std::to_string(l));
    }
    unit.trained = tok == "1";
    for (Eigen::Index i = 0; i < n; ++i) unit.anchor(i) = next();
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) unit.local_jacobian(r, c) = next();
    }
    net.units.push_back(std::move(unit));
  }
  if (in >> tok) throw InvalidInput("read_network: trailing data after the last unit");
  net.validate();
  return net;
}

void save_network(const std::string& path, const UnitNetwork& network) {
  std::ofstream out(path);
  if (!out) throw FileError(path, "cannot open network snapshot for writing");
  write_network(out, network);
  if (!out) throw FileError(path, "failed writing network snapshot");
}

UnitNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(path, "cannot open network snapshot");
  return read_network(in);
}

}  // namespace sensorimotor
