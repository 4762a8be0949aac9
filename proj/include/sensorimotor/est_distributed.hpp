#pragma once

// Distributed estimation over a network of computing units. Each unit owns a
// Jacobian fitted to observations near its anchor configuration, weighted by a
// Gaussian neighbourhood; control retrieves the nearest unit's Jacobian.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensorimotor/core.hpp"
#include "sensorimotor/est_instant.hpp"
#include "sensorimotor/est_structured.hpp"

namespace sensorimotor {

struct ComputingUnit {
  Configuration anchor;
  JacobianEstimate local_jacobian;
  bool trained = false;
};

/// Ball cutoff at 3 sigma.
inline const double kDefaultBallCutoff = std::exp(-4.5);

struct UnitNetwork {
  std::vector<ComputingUnit> units;
  double sigma = 1.0;
  double h_min = kDefaultBallCutoff;

  Eigen::Index n() const { return units.empty() ? 0 : units.front().anchor.size(); }
  Eigen::Index m() const { return units.empty() ? 0 : units.front().local_jacobian.rows(); }
  void validate() const;
};

/// A (delta, u) sample and the configuration it was taken from (before the
/// motion).
struct LocalizedObservation {
  Configuration x;
  ObservationDU obs;
};

enum class Placement { UniformGrid, Random, DataKMeans };

const char* to_string(Placement placement);
Placement parse_placement(const std::string& name);

// Anchor placement. All return units with zero Jacobians (m rows). When sigma
// is not given it defaults to half the smallest distance between anchors.
UnitNetwork allocate_grid(const Box& domain, std::span<const int> per_axis, Eigen::Index m,
                          std::optional<double> sigma = std::nullopt);
UnitNetwork allocate_random(const Box& domain, int count, Eigen::Index m, std::uint64_t seed,
                            std::optional<double> sigma = std::nullopt);
/// Lloyd's algorithm, 100 iterations, initialised from `count` distinct
/// samples chosen with `seed`.
UnitNetwork allocate_kmeans(std::span<const Configuration> samples, int count, Eigen::Index m,
                            std::uint64_t seed, std::optional<double> sigma = std::nullopt);

double neighborhood_weight(const Configuration& anchor, const Configuration& x, double sigma);

struct LocalCost {
  double value = 0.0;
  std::size_t ball_size = 0;
  bool empty_ball() const { return ball_size == 0; }
};

/// gamma/2 sum_{j in ball} h_j |A u_j - delta_j|^2; ball = {j : h_j >= h_min}.
LocalCost cost_W(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                 double sigma, double gamma, double h_min);

/// Entrywise gradient of cost_W with respect to the unit's Jacobian.
Matrix grad_W(const ComputingUnit& unit, std::span<const LocalizedObservation> data, double sigma,
              double gamma, double h_min);

/// V (current observation) + W (neighbourhood); an empty ball contributes 0.
LocalCost combined_cost_H(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                          const ObservationDU& current_obs, double sigma, double gamma,
                          double h_min);

/// 1 / lambda_max(sum h u u^T) over the unit's ball, or nullopt if the ball is
/// empty or carries no excitation.
std::optional<double> stable_gain_W(const ComputingUnit& unit,
                                    std::span<const LocalizedObservation> data, double sigma,
                                    double h_min);

enum class UnitStatus { Trained, EmptyBall };

struct UnitTraining {
  ComputingUnit unit;
  UnitStatus status = UnitStatus::Trained;
  std::size_t ball_size = 0;
  int iterations = 0;
  bool converged = false;
};

/// Gradient descent on cost_W with gamma = schedule.gamma. An empty ball
/// returns the unit unchanged with status EmptyBall.
UnitTraining train_unit(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                        double sigma, double h_min, const FitSchedule& schedule);

enum class GainMode {
  Fixed,          // schedule.gamma for every unit
  PerUnitStable,  // stable_gain_W of each unit's ball
};

struct NetworkTraining {
  UnitNetwork network;
  std::vector<std::size_t> empty_units;
  std::vector<UnitTraining> reports;
};

NetworkTraining train_network(const UnitNetwork& network,
                              std::span<const LocalizedObservation> data,
                              const FitSchedule& schedule, GainMode mode = GainMode::Fixed);

/// Index of the nearest anchor; ties go to the lowest index.
std::size_t winner(const UnitNetwork& network, const Configuration& x);

/// Winner's Jacobian. Throws UntrainedRegion when the winner was never trained.
JacobianEstimate query_jacobian(const UnitNetwork& network, const Configuration& x);

/// One gradient step on H = V + W for a single unit.
ComputingUnit refine_unit(const ComputingUnit& unit, std::span<const LocalizedObservation> data,
                          const ObservationDU& current_obs, double sigma, double gamma,
                          double h_min);

// Text snapshot: header, "N n m", "sigma h_min", then one line per unit with
// the trained flag, the anchor and the row-major Jacobian.
void write_network(std::ostream& out, const UnitNetwork& network);
UnitNetwork read_network(std::istream& in);
void save_network(const std::string& path, const UnitNetwork& network);
UnitNetwork load_network(const std::string& path);

}  // namespace sensorimotor
