#include "sensorimotor/est_instant.hpp"

#include <string>

namespace sensorimotor {

namespace {

void check_shapes(const JacobianEstimate& A, const ObservationDU& obs, const char* op) {
  if (obs.delta.size() != A.rows() || obs.u.size() != A.cols()) {
    throw ContractError(std::string(op) + ": observation (" + std::to_string(obs.delta.size()) +
                        ", " + std::to_string(obs.u.size()) + ") does not match a " +
                        std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + " estimate");
  }
  if (!obs.delta.allFinite() || !obs.u.allFinite()) {
    throw InvalidInput(std::string(op) + ": non-finite observation");
  }
}

}  // namespace

BroydenGain::BroydenGain(double gamma) : value(gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("BroydenGain: Gamma must be in (0, 1]");
}

BroydenResult broyden_update(const JacobianEstimate& A_prev, const ObservationDU& obs,
                             BroydenGain gain) {
  check_shapes(A_prev, obs, "broyden_update");
  const double uu = obs.u.squaredNorm();
  if (uu < kDegenerateCommandSq) return {A_prev, true};
  const Vector residual = obs.delta - A_prev * obs.u;
  return {A_prev + (gain.value / uu) * residual * obs.u.transpose(), false};
}

double cost_V(const JacobianEstimate& A_hat, const ObservationDU& obs, double gamma) {
  check_shapes(A_hat, obs, "cost_V");
  return 0.5 * gamma * (A_hat * obs.u - obs.delta).squaredNorm();
}

Matrix grad_V(const JacobianEstimate& A_hat, const ObservationDU& obs, double gamma) {
  check_shapes(A_hat, obs, "grad_V");
  return gamma * (A_hat * obs.u - obs.delta) * obs.u.transpose();
}

JacobianEstimate gradient_update_V(const JacobianEstimate& A_hat, const ObservationDU& obs,
                                   double gamma) {
  return A_hat - grad_V(A_hat, obs, gamma);
}

}  // namespace sensorimotor
