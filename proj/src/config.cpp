#include "sensorimotor/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace sensorimotor {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<int>();
}

bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a string");
  return v.get<std::string>();
}

Vector get_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = get_number(v[i], where);
  }
  return out;
}

std::vector<int> get_int_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array of integers");
  std::vector<int> out;
  for (const auto& e : v) out.push_back(get_int(e, where));
  return out;
}

Matrix get_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected an array of rows");
  const Vector first = get_vector(v[0], where);
  Matrix out(static_cast<Eigen::Index>(v.size()), first.size());
  for (std::size_t r = 0; r < v.size(); ++r) {
    const Vector row = get_vector(v[r], where);
    if (row.size() != first.size()) throw ConfigError(where + ": rows differ in length");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

Box get_box(const json& v, const std::string& where) {
  reject_unknown(v, {"lower", "upper"}, where);
  if (!v.contains("lower") || !v.contains("upper")) throw ConfigError(where + ": needs lower and upper");
  Box box{get_vector(v["lower"], where + ".lower"), get_vector(v["upper"], where + ".upper")};
  try {
    box.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return box;
}

PlantConfig parse_plant(const json& v) {
  reject_unknown(v, {"id", "noise_std", "x0", "matrix", "offset", "workspace", "operating_region"},
                 "plant");
  PlantConfig pc;
  if (v.contains("id")) pc.id = get_string(v["id"], "plant.id");
  if (pc.id != "camera-arm" && pc.id != "beam" && pc.id != "probe" && pc.id != "linear") {
    throw ConfigError("plant.id: unknown plant '" + pc.id + "'");
  }
  if (v.contains("noise_std")) pc.noise_std = get_number(v["noise_std"], "plant.noise_std");
  if (v.contains("x0")) pc.x0 = get_vector(v["x0"], "plant.x0");
  if (pc.id == "linear") {
    if (!v.contains("matrix") || !v.contains("workspace")) {
      throw ConfigError("plant: the linear plant needs 'matrix' and 'workspace'");
    }
    pc.matrix = get_matrix(v["matrix"], "plant.matrix");
    if (v.contains("offset")) pc.offset = get_vector(v["offset"], "plant.offset");
    pc.workspace = get_box(v["workspace"], "plant.workspace");
    if (v.contains("operating_region")) {
      pc.operating_region = get_box(v["operating_region"], "plant.operating_region");
    }
  } else {
    for (const char* key : {"matrix", "offset", "workspace", "operating_region"}) {
      if (v.contains(key)) throw ConfigError(std::string("plant.") + key + ": only valid for the linear plant");
    }
  }
  return pc;
}

DatasetConfig parse_dataset(const json& v) {
  reject_unknown(v, {"policy", "T", "amplitude", "lattice"}, "estimator.dataset");
  DatasetConfig dc;
  try {
    if (v.contains("policy")) dc.policy = parse_policy(get_string(v["policy"], "estimator.dataset.policy"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("estimator.dataset.policy: ") + e.what());
  }
  if (v.contains("T")) dc.T = get_int(v["T"], "estimator.dataset.T");
  if (v.contains("amplitude")) dc.amplitude = get_number(v["amplitude"], "estimator.dataset.amplitude");
  if (v.contains("lattice")) dc.lattice = get_int_list(v["lattice"], "estimator.dataset.lattice");
  return dc;
}

EstimatorConfig parse_estimator(const json& v) {
  reject_unknown(v,
                 {"id", "fd_step", "Gamma", "gamma", "normalized_rate", "bootstrap",
                  "bootstrap_amplitude", "sigma", "h_min", "placement", "grid", "N", "online",
                  "max_iters", "grad_tol", "dataset"},
                 "estimator");
  EstimatorConfig ec;
  if (v.contains("id")) ec.id = get_string(v["id"], "estimator.id");
  bool known = false;
  for (const auto& id : kEstimatorIds) known = known || id == ec.id;
  if (!known) throw ConfigError("estimator.id: unknown estimator '" + ec.id + "'");
  if (v.contains("fd_step")) ec.fd_step = get_number(v["fd_step"], "estimator.fd_step");
  if (v.contains("Gamma")) ec.Gamma = get_number(v["Gamma"], "estimator.Gamma");
  if (v.contains("gamma")) ec.gamma = get_number(v["gamma"], "estimator.gamma");
  if (v.contains("normalized_rate")) {
    ec.normalized_rate = get_number(v["normalized_rate"], "estimator.normalized_rate");
  }
  if (v.contains("bootstrap")) ec.bootstrap = get_bool(v["bootstrap"], "estimator.bootstrap");
  if (v.contains("bootstrap_amplitude")) {
    ec.bootstrap_amplitude = get_number(v["bootstrap_amplitude"], "estimator.bootstrap_amplitude");
  }
  if (v.contains("sigma")) ec.sigma = get_number(v["sigma"], "estimator.sigma");
  if (v.contains("h_min")) ec.h_min = get_number(v["h_min"], "estimator.h_min");
  if (v.contains("placement")) {
    try {
      ec.placement = parse_placement(get_string(v["placement"], "estimator.placement"));
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("estimator.placement: ") + e.what());
    }
  }
  if (v.contains("grid")) ec.grid = get_int_list(v["grid"], "estimator.grid");
  if (v.contains("N")) ec.N = get_int(v["N"], "estimator.N");
  if (v.contains("online")) ec.online = get_bool(v["online"], "estimator.online");
  if (v.contains("max_iters")) ec.max_iters = get_int(v["max_iters"], "estimator.max_iters");
  if (v.contains("grad_tol")) ec.grad_tol = get_number(v["grad_tol"], "estimator.grad_tol");
  if (v.contains("dataset")) ec.dataset = parse_dataset(v["dataset"]);
  return ec;
}

ExperimentConfig parse_json(const json& root) {
  reject_unknown(root,
                 {"plant", "estimator", "gains", "target", "target_x", "stop", "seed", "output"},
                 "config");
  ExperimentConfig cfg;
  if (root.contains("plant")) cfg.plant = parse_plant(root["plant"]);
  if (root.contains("estimator")) cfg.estimator = parse_estimator(root["estimator"]);
  if (root.contains("gains")) {
    const json& g = root["gains"];
    reject_unknown(g, {"lambda", "u_max", "damping", "dt"}, "gains");
    if (g.contains("lambda")) cfg.lambda = get_number(g["lambda"], "gains.lambda");
    if (g.contains("u_max")) cfg.u_max = get_number(g["u_max"], "gains.u_max");
    if (g.contains("damping")) cfg.damping = get_number(g["damping"], "gains.damping");
    if (g.contains("dt")) cfg.dt = get_number(g["dt"], "gains.dt");
  }
  if (root.contains("target") && root.contains("target_x")) {
    throw ConfigError("config: give either 'target' or 'target_x', not both");
  }
  if (root.contains("target")) cfg.target = get_vector(root["target"], "target");
  if (root.contains("target_x")) cfg.target_x = get_vector(root["target_x"], "target_x");
  if (root.contains("stop")) {
    const json& s = root["stop"];
    reject_unknown(s, {"feature_tol", "max_steps"}, "stop");
    if (s.contains("feature_tol")) cfg.feature_tol = get_number(s["feature_tol"], "stop.feature_tol");
    if (s.contains("max_steps")) cfg.max_steps = get_int(s["max_steps"], "stop.max_steps");
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("output")) cfg.output = get_string(root["output"], "output");
  if (!(cfg.feature_tol > 0.0)) throw ConfigError("stop.feature_tol must be > 0");
  if (cfg.max_steps < 1) throw ConfigError("stop.max_steps must be >= 1");
  return cfg;
}

Configuration default_goal(const std::string& id, const Plant& plant) {
  Configuration x(plant.n());
  if (id == "camera-arm") {
    x << 0.7, 1.2, 0.9;
  } else if (id == "beam") {
    const auto& beam = static_cast<const BeamPlant&>(plant);
    const Eigen::Vector3d& r = beam.params().rest_position;
    x << r(0) + 0.3, r(1) + 0.06, r(2), 0.25;
  } else if (id == "probe") {
    x << -0.01, 0.02, -0.02, -0.05, 0.06, 0.1;
  } else {
    const Box& region = plant.spec().operating_region;
    x = 0.5 * (region.lower + region.upper);
  }
  return x;
}

std::vector<int> default_grid(const std::string& id, Eigen::Index n) {
  int per_axis = 2;
  if (id == "camera-arm") per_axis = 5;
  if (id == "beam") per_axis = 3;
  return std::vector<int>(static_cast<std::size_t>(n), per_axis);
}

// Seed streams for the independent random consumers of one experiment.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed * 0x9e3779b97f4a7c15ULL + stream;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_json(root);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(path, "cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::unique_ptr<Plant> make_plant(const PlantConfig& config, std::uint64_t seed) {
  PlantSpec spec;
  if (config.id == "camera-arm") {
    spec = CameraArmPlant::default_spec();
  } else if (config.id == "beam") {
    spec = BeamPlant::default_spec();
  } else if (config.id == "probe") {
    spec = ProbePlant::default_spec();
  } else if (config.id == "linear") {
    const Matrix& A = *config.matrix;
    spec.n = A.cols();
    spec.m = A.rows();
    spec.workspace = *config.workspace;
    spec.operating_region = config.operating_region ? *config.operating_region : spec.workspace;
    spec.x0 = 0.5 * (spec.workspace.lower + spec.workspace.upper);
  } else {
    throw ConfigError("unknown plant '" + config.id + "'");
  }
  if (config.x0) spec.x0 = *config.x0;
  spec.noise_std = config.noise_std;
  spec.seed = stream_seed(seed, 1);

  if (config.id == "camera-arm") return std::make_unique<CameraArmPlant>(CameraArmParams::defaults(), spec);
  if (config.id == "beam") return std::make_unique<BeamPlant>(BeamParams{}, spec);
  if (config.id == "probe") return std::make_unique<ProbePlant>(ProbeParams::defaults(), spec);
  const Vector offset = config.offset ? *config.offset : Vector::Zero(config.matrix->rows());
  return std::make_unique<LinearPlant>(*config.matrix, offset, spec);
}

DatasetRequest dataset_request(const ExperimentConfig& config, const Plant& plant) {
  const EstimatorConfig& ec = config.estimator;
  const double scale = plant.spec().workspace.scale();
  DatasetRequest req;
  req.seed = stream_seed(config.seed, 2);
  if (ec.id == "distributed") {
    req.policy = ExcitationPolicy::GridSweep;
    req.amplitude = 0.004 * scale;
  } else {
    req.policy = ExcitationPolicy::RandomWalk;
    req.amplitude = 0.05 * scale;
    req.T = 200;
  }
  if (ec.dataset.policy) req.policy = *ec.dataset.policy;
  if (ec.dataset.amplitude) req.amplitude = *ec.dataset.amplitude;
  req.lattice = ec.dataset.lattice;
  if (req.policy == ExcitationPolicy::GridSweep && req.lattice.empty()) {
    req.lattice = ec.grid.empty() ? default_grid(config.plant.id, plant.n()) : ec.grid;
  }
  if (ec.dataset.T) {
    req.T = *ec.dataset.T;
  } else if (req.policy == ExcitationPolicy::GridSweep) {
    req.T = grid_sweep_length(plant.spec().operating_region, req.lattice, req.amplitude,
                              plant.spec().x0);
  }
  return req;
}

EpisodeSettings episode_settings(const ExperimentConfig& config, const Plant& plant) {
  EpisodeSettings s;
  s.gains.lambda = config.lambda;
  s.gains.u_max = config.u_max ? *config.u_max : 0.05 * plant.spec().workspace.scale();
  s.gains.damping = config.damping;
  s.gains.dt = config.dt;
  s.feature_tol = config.feature_tol;
  s.max_steps = config.max_steps;
  if (config.target) {
    s.target = *config.target;
  } else {
    const Configuration goal = config.target_x ? *config.target_x : default_goal(config.plant.id, plant);
    s.target = plant.feature_map(goal);
  }
  if (s.target.size() != plant.m()) throw ConfigError("target: length does not match the plant's m");
  s.validate();
  return s;
}

Configuration start_configuration(const ExperimentConfig&, const Plant& plant) {
  return plant.spec().x0;
}

FitResult train_structured(const ExperimentConfig& config, const Plant& plant, const Dataset& data) {
  const RegressorModel reg = regressor_for(plant);
  FitSchedule schedule;
  schedule.gamma = config.estimator.gamma ? *config.estimator.gamma : stable_gain_U(data.samples, reg);
  schedule.max_iters = config.estimator.max_iters;
  schedule.grad_tol = config.estimator.grad_tol;
  return fit(data.samples, ParameterVector::Zero(reg.p), schedule, reg);
}

NetworkTraining train_distributed(const ExperimentConfig& config, const Plant& plant,
                                  const Dataset& data) {
  const EstimatorConfig& ec = config.estimator;
  UnitNetwork net;
  switch (ec.placement) {
    case Placement::UniformGrid: {
      const std::vector<int> grid = ec.grid.empty() ? default_grid(config.plant.id, plant.n()) : ec.grid;
      net = allocate_grid(plant.spec().operating_region, grid, plant.m(), ec.sigma);
      break;
    }
    case Placement::Random:
      net = allocate_random(plant.spec().operating_region, ec.N, plant.m(),
                            stream_seed(config.seed, 3), ec.sigma);
      break;
    case Placement::DataKMeans: {
      std::vector<Configuration> visited;
      visited.reserve(data.transitions.size());
      for (const auto& t : data.transitions) visited.push_back(t.x);
      net = allocate_kmeans(visited, ec.N, plant.m(), stream_seed(config.seed, 3), ec.sigma);
      break;
    }
  }
  net.h_min = ec.h_min;
  FitSchedule schedule;
  schedule.gamma = ec.gamma ? *ec.gamma : 1.0;
  schedule.max_iters = ec.max_iters;
  schedule.grad_tol = ec.grad_tol;
  return train_network(net, data.transitions, schedule,
                       ec.gamma ? GainMode::Fixed : GainMode::PerUnitStable);
}

std::unique_ptr<JacobianSource> make_source(const ExperimentConfig& config, const Plant& plant) {
  const EstimatorConfig& ec = config.estimator;
  const Configuration x0 = start_configuration(config, plant);
  const double bootstrap_amp =
      ec.bootstrap_amplitude ? *ec.bootstrap_amplitude : 0.001 * plant.spec().workspace.scale();
  auto initial = [&]() -> JacobianEstimate {
    if (ec.bootstrap) return bootstrap_jacobian(plant, x0, bootstrap_amp);
    return JacobianEstimate::Zero(plant.m(), plant.n());
  };

  if (ec.id == "oracle") return std::make_unique<OracleSource>(plant, ec.fd_step);
  if (ec.id == "broyden") return std::make_unique<BroydenSource>(initial(), BroydenGain(ec.Gamma));
  if (ec.id == "instant-gradient") {
    return std::make_unique<InstantGradientSource>(initial(), ec.gamma, ec.normalized_rate);
  }
  if (ec.id == "structured") {
    const RegressorModel reg = regressor_for(plant);
    const Dataset data = collect_dataset(plant, dataset_request(config, plant));
    const FitResult fitted = train_structured(config, plant, data);
    const double gamma = config.estimator.gamma ? *config.estimator.gamma : 1.0;
    return std::make_unique<StructuredSource>(reg, fitted.params,
                                              cost_U(data.samples, fitted.params, gamma, reg));
  }
  if (ec.id == "distributed") {
    Dataset data = collect_dataset(plant, dataset_request(config, plant));
    NetworkTraining trained = train_distributed(config, plant, data);
    return std::make_unique<DistributedSource>(std::move(trained.network),
                                               std::move(data.transitions), ec.online);
  }
  throw ConfigError("unknown estimator '" + ec.id + "'");
}

TrajectoryLog run_servo_episode(const ExperimentConfig& config) {
  const std::unique_ptr<Plant> plant = make_plant(config.plant, config.seed);
  const EpisodeSettings settings = episode_settings(config, *plant);
  std::unique_ptr<JacobianSource> source = make_source(config, *plant);
  return run_episode(*plant, *source, start_configuration(config, *plant), settings);
}

std::vector<CompareRow> compare_estimators(const ExperimentConfig& config) {
  std::vector<CompareRow> rows;
  for (const auto& id : kEstimatorIds) {
    ExperimentConfig cell = config;
    cell.estimator.id = id;
    CompareRow row{id, "", 0, 0.0, ""};
    try {
      const TrajectoryLog log = run_servo_episode(cell);
      row.status = to_string(log.status);
      row.steps = log.steps;
      row.final_error = log.final_error();
      row.note = log.message;
    } catch (const UnsupportedStructure& e) {
      row.status = "unsupported";
      row.note = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_compare_table(const std::vector<CompareRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %-12s %7s %14s\n", "estimator", "status", "steps", "final_err");
  out += line;
  for (const auto& r : rows) {
    if (r.status == "unsupported") {
      std::snprintf(line, sizeof(line), "%-18s %-12s %7s %14s\n", r.estimator.c_str(),
                    r.status.c_str(), "-", "-");
    } else {
      std::snprintf(line, sizeof(line), "%-18s %-12s %7d %14.6e\n", r.estimator.c_str(),
                    r.status.c_str(), r.steps, r.final_error);
    }
    out += line;
  }
  return out;
}

}  // namespace sensorimotor
