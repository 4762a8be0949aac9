#include "sensorimotor/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "sensorimotor/text_io.hpp"

namespace sensorimotor {

namespace {

class Recorder {
 public:
  Recorder(const Plant& plant, Configuration start, Dataset& out)
      : plant_(plant), x_(std::move(start)), out_(out) {
    y_ = plant_.features(plant_.observe(x_, 0));
  }

  const Configuration& x() const { return x_; }
  bool full(int T) const { return static_cast<int>(out_.transitions.size()) >= T; }

  void apply(const MotorCommand& u) {
    const StepResult next = step(plant_, x_, u, ++index_);
    if (next.boundary) ++out_.boundary_hits;
    out_.transitions.push_back({x_, {next.y - y_, next.x - x_}});
    out_.samples.push_back({y_, x_});
    x_ = next.x;
    y_ = next.y;
  }

 private:
  const Plant& plant_;
  Configuration x_;
  FeatureVector y_;
  std::uint64_t index_ = 0;
  Dataset& out_;
};

std::vector<Configuration> sweep_lattice(const Box& region, const std::vector<int>& counts) {
  const Eigen::Index n = region.dim();
  std::vector<Configuration> nodes;
  std::vector<int> idx(n, 0);
  while (true) {
    Configuration p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = counts[i] == 1 ? 0.5 * (region.lower(i) + region.upper(i))
                            : region.lower(i) + (region.upper(i) - region.lower(i)) * idx[i] /
                                                    (counts[i] - 1);
    }
    nodes.push_back(std::move(p));
    Eigen::Index axis = n - 1;
    while (axis >= 0 && ++idx[axis] == counts[axis]) {
      idx[axis] = 0;
      --axis;
    }
    if (axis < 0) return nodes;
  }
}

void random_walk(const Plant& plant, const DatasetRequest& req, Recorder& rec) {
  const Box& region = plant.spec().operating_region;
  const Eigen::Index n = plant.n();
  std::mt19937_64 rng(req.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (!rec.full(req.T)) {
    Vector dir(n);
    for (Eigen::Index i = 0; i < n; ++i) dir(i) = normal(rng);
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    const double radius = req.amplitude * std::pow(unit(rng), 1.0 / static_cast<double>(n));
    MotorCommand u = dir * (radius / norm);
    // Reflect components that would leave the operating region.
    for (Eigen::Index i = 0; i < n; ++i) {
      const double next = rec.x()(i) + u(i);
      if (next < region.lower(i) || next > region.upper(i)) u(i) = -u(i);
    }
    rec.apply(u);
  }
}

void axis_probes(const Plant& plant, const DatasetRequest& req, Recorder& rec) {
  const Eigen::Index n = plant.n();
  for (int k = 0; !rec.full(req.T); ++k) {
    const Eigen::Index axis = (k / 2) % n;
    MotorCommand u = MotorCommand::Zero(n);
    u(axis) = (k % 2 == 0 ? 1.0 : -1.0) * req.amplitude;
    rec.apply(u);
  }
}

void grid_sweep(const Plant& plant, const DatasetRequest& req, Recorder& rec) {
  const Eigen::Index n = plant.n();
  std::vector<int> counts = req.lattice;
  if (counts.empty()) counts.assign(static_cast<std::size_t>(n), 3);
  if (static_cast<Eigen::Index>(counts.size()) != n) {
    throw InvalidInput("grid-sweep: lattice needs one count per configuration axis");
  }
  for (int c : counts) {
    if (c < 1) throw InvalidInput("grid-sweep: lattice counts must be >= 1");
  }
  const std::vector<Configuration> nodes = sweep_lattice(plant.spec().operating_region, counts);
  while (!rec.full(req.T)) {
    for (const auto& node : nodes) {
      // Transit in steps no longer than the amplitude.
      const Vector gap = node - rec.x();
      const int pieces = static_cast<int>(std::ceil(gap.norm() / req.amplitude));
      const Configuration from = rec.x();
      for (int k = 1; k <= pieces && !rec.full(req.T); ++k) {
        const Configuration waypoint = from + gap * (static_cast<double>(k) / pieces);
        rec.apply(waypoint - rec.x());
      }
      // +a, -a, -a, +a per axis: forward and backward secants around the node.
      for (Eigen::Index axis = 0; axis < n; ++axis) {
        for (double sign : {1.0, -1.0, -1.0, 1.0}) {
          if (rec.full(req.T)) return;
          MotorCommand u = MotorCommand::Zero(n);
          u(axis) = sign * req.amplitude;
          rec.apply(u);
        }
      }
      if (rec.full(req.T)) return;
    }
  }
}

}  // namespace

const char* to_string(ExcitationPolicy policy) {
  switch (policy) {
    case ExcitationPolicy::RandomWalk: return "random-walk";
    case ExcitationPolicy::AxisProbes: return "axis-probes";
    case ExcitationPolicy::GridSweep: return "grid-sweep";
  }
  return "?";
}

ExcitationPolicy parse_policy(const std::string& name) {
  if (name == "random-walk") return ExcitationPolicy::RandomWalk;
  if (name == "axis-probes") return ExcitationPolicy::AxisProbes;
  if (name == "grid-sweep") return ExcitationPolicy::GridSweep;
  throw InvalidInput("unknown excitation policy '" + name + "'");
}

Dataset collect_dataset(const Plant& plant, const DatasetRequest& request) {
  if (request.T < 1) throw InvalidInput("collect_dataset: T must be >= 1");
  if (!(request.amplitude > 0.0)) throw InvalidInput("collect_dataset: amplitude must be > 0");
  if (request.amplitude > plant.spec().workspace.scale()) {
    throw InvalidInput("collect_dataset: amplitude exceeds the workspace scale");
  }
  Dataset out;
  out.transitions.reserve(static_cast<std::size_t>(request.T));
  out.samples.reserve(static_cast<std::size_t>(request.T));
  Recorder rec(plant, request.start ? *request.start : plant.spec().x0, out);
  switch (request.policy) {
    case ExcitationPolicy::RandomWalk: random_walk(plant, request, rec); break;
    case ExcitationPolicy::AxisProbes: axis_probes(plant, request, rec); break;
    case ExcitationPolicy::GridSweep: grid_sweep(plant, request, rec); break;
  }
  return out;
}

int grid_sweep_length(const Box& region, const std::vector<int>& lattice, double amplitude,
                      const Configuration& start) {
  if (!(amplitude > 0.0)) throw InvalidInput("grid_sweep_length: amplitude must be > 0");
  if (static_cast<Eigen::Index>(lattice.size()) != region.dim()) {
    throw InvalidInput("grid_sweep_length: lattice needs one count per axis");
  }
  int total = 0;
  Configuration at = start;
  for (const auto& node : sweep_lattice(region, lattice)) {
    total += static_cast<int>(std::ceil((node - at).norm() / amplitude));
    total += 4 * static_cast<int>(region.dim());
    at = node;
  }
  return total;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  if (data.transitions.size() != data.samples.size()) {
    throw ContractError("write_dataset: transitions and samples differ in length");
  }
  if (data.transitions.empty()) throw InvalidInput("write_dataset: empty dataset");
  const Eigen::Index n = data.transitions.front().x.size();
  const Eigen::Index m = data.transitions.front().obs.delta.size();
  bool first = true;
  auto column = [&](char prefix, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) {
      out << (first ? "" : ",") << prefix << i;
      first = false;
    }
  };
  column('x', n);
  column('u', n);
  column('d', m);
  column('y', m);
  out << '\n';
  for (std::size_t k = 0; k < data.transitions.size(); ++k) {
    const auto& t = data.transitions[k];
    std::string sep;
    auto emit = [&](const Vector& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << sep << format_double(v(i));
        sep = ",";
      }
    };
    emit(t.x);
    emit(t.obs.u);
    emit(t.obs.delta);
    emit(data.samples[k].y);
    out << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("read_dataset: missing header");
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  for (auto name : split(line, ',')) {
    if (name.empty()) throw InvalidInput("read_dataset: empty column name");
    if (name[0] == 'x') ++n;
    else if (name[0] == 'd') ++m;
  }
  if (n == 0 || m == 0) throw InvalidInput("read_dataset: header lacks x or d columns");
  const std::size_t width = static_cast<std::size_t>(2 * n + 2 * m);
  Dataset data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != width) throw InvalidInput("read_dataset: row has the wrong number of cells");
    std::size_t c = 0;
    auto take = [&](Eigen::Index count) {
      Vector v(count);
      for (Eigen::Index i = 0; i < count; ++i) v(i) = parse_double(cells[c++]);
      return v;
    };
    Configuration x = take(n);
    MotorCommand u = take(n);
    Vector delta = take(m);
    FeatureVector y = take(m);
    data.samples.push_back({std::move(y), x});
    data.transitions.push_back({std::move(x), {std::move(delta), std::move(u)}});
  }
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FileError(path, "cannot open dataset for writing");
  write_dataset(out, data);
  if (!out) throw FileError(path, "failed writing dataset");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(path, "cannot open dataset");
  return read_dataset(in);
}

}  // namespace sensorimotor
