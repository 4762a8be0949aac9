#pragma once

// JSON experiment configuration and the scenario builders behind the CLI.
//
// {
//   "plant":     {"id": "camera-arm" | "beam" | "probe" | "linear", "noise_std": 0,
//                 "x0": [...], "matrix": [[...]], "offset": [...],
//                 "workspace": {"lower": [...], "upper": [...]},
//                 "operating_region": {"lower": [...], "upper": [...]}},
//   "estimator": {"id": "oracle" | "broyden" | "instant-gradient" | "structured" | "distributed",
//                 "fd_step", "Gamma", "gamma", "normalized_rate", "bootstrap",
//                 "bootstrap_amplitude", "sigma", "h_min", "placement", "grid", "N",
//                 "online", "max_iters", "grad_tol",
//                 "dataset": {"policy", "T", "amplitude", "lattice"}},
//   "gains":     {"lambda", "u_max", "damping", "dt"},
//   "target": [...]  or  "target_x": [...],
//   "stop":      {"feature_tol", "max_steps"},
//   "seed": 0,
//   "output": "log.csv"
// }
//
// Unknown keys anywhere are rejected. "matrix", "offset" and "workspace" are
// only accepted (and required) for the linear plant.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sensorimotor/dataset.hpp"
#include "sensorimotor/episode.hpp"
#include "sensorimotor/estimators.hpp"
#include "sensorimotor/plants.hpp"

namespace sensorimotor {

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct PlantConfig {
  std::string id = "camera-arm";
  double noise_std = 0.0;
  std::optional<Configuration> x0;
  // linear plant only
  std::optional<Matrix> matrix;
  std::optional<Vector> offset;
  std::optional<Box> workspace;
  std::optional<Box> operating_region;
};

struct DatasetConfig {
  std::optional<ExcitationPolicy> policy;
  std::optional<int> T;
  std::optional<double> amplitude;
  std::vector<int> lattice;
};

struct EstimatorConfig {
  std::string id = "oracle";
  double fd_step = 1e-6;
  double Gamma = 1.0;
  std::optional<double> gamma;
  double normalized_rate = 0.5;
  bool bootstrap = true;
  std::optional<double> bootstrap_amplitude;
  std::optional<double> sigma;
  double h_min = kDefaultBallCutoff;
  Placement placement = Placement::UniformGrid;
  std::vector<int> grid;
  int N = 27;
  bool online = false;
  int max_iters = 100000;
  double grad_tol = 1e-9;
  DatasetConfig dataset;
};

struct ExperimentConfig {
  PlantConfig plant;
  EstimatorConfig estimator;
  double lambda = 0.5;
  std::optional<double> u_max;
  double damping = 1e-8;
  double dt = 0.01;
  std::optional<FeatureVector> target;
  std::optional<Configuration> target_x;
  double feature_tol = 1e-3;
  int max_steps = 400;
  std::uint64_t seed = 0;
  std::string output;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

std::unique_ptr<Plant> make_plant(const PlantConfig& config, std::uint64_t seed);

/// Dataset request with per-plant defaults filled in for the estimator.
DatasetRequest dataset_request(const ExperimentConfig& config, const Plant& plant);

/// Servo settings: u_max defaults to 5% of the workspace scale and the target
/// to the plant's default goal pose.
EpisodeSettings episode_settings(const ExperimentConfig& config, const Plant& plant);

Configuration start_configuration(const ExperimentConfig& config, const Plant& plant);

FitResult train_structured(const ExperimentConfig& config, const Plant& plant, const Dataset& data);
NetworkTraining train_distributed(const ExperimentConfig& config, const Plant& plant,
                                  const Dataset& data);

/// Builds the configured estimator, collecting and training on a dataset
/// first where the estimator needs one.
std::unique_ptr<JacobianSource> make_source(const ExperimentConfig& config, const Plant& plant);

TrajectoryLog run_servo_episode(const ExperimentConfig& config);

struct CompareRow {
  std::string estimator;
  std::string status;  // episode status, or "unsupported"
  int steps = 0;
  double final_error = 0.0;
  std::string note;
};

inline const std::vector<std::string> kEstimatorIds = {"oracle", "broyden", "instant-gradient",
                                                       "structured", "distributed"};

/// Runs every estimator on the same plant, seed and target.
std::vector<CompareRow> compare_estimators(const ExperimentConfig& config);
std::string format_compare_table(const std::vector<CompareRow>& rows);

}  // namespace sensorimotor
