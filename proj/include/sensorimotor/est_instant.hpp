#pragma once

// Structure-free instantaneous estimation from the latest (delta, u) pair.
// The observation (delta_t, u_t) turns A_{t-1} into A_t.

#include "sensorimotor/core.hpp"

namespace sensorimotor {

struct ObservationDU {
  Vector delta;  // y_{t+1} - y_t
  Vector u;      // command that produced it
};

/// Broyden tuning gain, 0 < Gamma <= 1.
struct BroydenGain {
  double value = 1.0;

  explicit BroydenGain(double gamma = 1.0);
};

/// Commands with |u|^2 below this leave the estimate untouched.
inline constexpr double kDegenerateCommandSq = 1e-18;

struct BroydenResult {
  JacobianEstimate jacobian;
  bool skipped = false;  // degenerate command; jacobian == A_prev
};

BroydenResult broyden_update(const JacobianEstimate& A_prev, const ObservationDU& obs,
                             BroydenGain gain);

/// gamma/2 |A u - delta|^2
double cost_V(const JacobianEstimate& A_hat, const ObservationDU& obs, double gamma);

/// Entrywise gradient of cost_V: gamma (A u - delta) u^T.
Matrix grad_V(const JacobianEstimate& A_hat, const ObservationDU& obs, double gamma);

JacobianEstimate gradient_update_V(const JacobianEstimate& A_hat, const ObservationDU& obs,
                                   double gamma);

}  // namespace sensorimotor
