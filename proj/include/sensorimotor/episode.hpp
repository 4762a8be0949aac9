#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sensorimotor/core.hpp"
#include "sensorimotor/estimators.hpp"
#include "sensorimotor/plants.hpp"

namespace sensorimotor {

enum class EpisodeStatus { Converged, MaxSteps, Stalled };

const char* to_string(EpisodeStatus status);
EpisodeStatus parse_status(const std::string& name);

struct LogRow {
  int step = 0;
  Configuration x;
  MotorCommand u;
  FeatureVector y;
  double err_norm = 0.0;
  double cost_J = 0.0;
  double diag = 0.0;
  JacobianEstimate A;  // estimate used to compute u
  bool boundary = false;
};

struct TrajectoryLog {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::vector<LogRow> rows;
  EpisodeStatus status = EpisodeStatus::MaxSteps;
  /// Commands applied before the episode ended.
  int steps = 0;
  std::string message;

  double final_error() const { return rows.empty() ? 0.0 : rows.back().err_norm; }
};

struct EpisodeSettings {
  FeatureVector target;
  GainSettings gains;
  double feature_tol = 1e-3;
  int max_steps = 400;
  int stall_window = 50;
  double stall_tol = 1e-12;

  void validate() const;
};

/// Set-point regulation loop. Each iteration: stop if |y - y*| <= tol, else
/// query the estimate, compute the servo command, step the plant and feed the
/// observed (delta, u) back to the source. Estimator failures end the episode
/// as Stalled with the error text in `message`.
TrajectoryLog run_episode(const Plant& plant, JacobianSource& source, const Configuration& x0,
                          const EpisodeSettings& settings);

// CSV: step, x0.., u0.., y0.., err_norm, cost_J, diag, a_r_c (row-major),
// boundary_flag. Numbers use the shortest round-trip representation.
void write_csv(std::ostream& out, const TrajectoryLog& log);
TrajectoryLog read_csv(std::istream& in);
void export_csv(const TrajectoryLog& log, const std::string& path);
TrajectoryLog import_csv(const std::string& path);

}  // namespace sensorimotor
