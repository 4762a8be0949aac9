#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sensorimotor/est_distributed.hpp"
#include "sensorimotor/est_structured.hpp"
#include "sensorimotor/plants.hpp"

namespace sensorimotor {

enum class ExcitationPolicy {
  RandomWalk,  // i.i.d. commands uniform in the ball |u| <= amplitude
  AxisProbes,  // +e1, -e1, +e2, -e2, ... scaled by amplitude
  GridSweep,   // lattice over the operating region, symmetric axis probes at each node
};

const char* to_string(ExcitationPolicy policy);
ExcitationPolicy parse_policy(const std::string& name);

struct DatasetRequest {
  ExcitationPolicy policy = ExcitationPolicy::RandomWalk;
  int T = 100;
  double amplitude = 0.01;
  std::uint64_t seed = 0;
  /// Starting configuration; the plant's x0 when empty.
  std::optional<Configuration> start;
  /// Grid-sweep nodes per axis; 3 per axis when empty.
  std::vector<int> lattice;
};

/// T transitions (delta_k, u_k, x_k) and the matching (y_k, x_k) samples,
/// both taken at the pre-motion configuration.
struct Dataset {
  std::vector<LocalizedObservation> transitions;
  std::vector<ObservationYX> samples;
  int boundary_hits = 0;
};

/// Executes T commands on the plant. The random walk reflects off the
/// operating region; recorded commands are the displacements actually
/// applied after workspace clamping. Noise sample k belongs to the state
/// after k commands.
Dataset collect_dataset(const Plant& plant, const DatasetRequest& request);

/// Number of commands in one complete grid sweep from `start`.
int grid_sweep_length(const Box& region, const std::vector<int>& lattice, double amplitude,
                      const Configuration& start);

/// CSV with columns x0.., u0.., d0.., y0.. (one row per transition).
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

}  // namespace sensorimotor
