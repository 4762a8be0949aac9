#include "sensorimotor/core.hpp"

#include <cmath>
#include <string>

namespace sensorimotor {

namespace {

void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw ContractError(std::string(what) + ": expected length " + std::to_string(a) +
                        ", got " + std::to_string(b));
  }
}

// Tikhonov term relative to the mean diagonal of the Gram matrix, so the same
// coefficient behaves alike for Jacobians of very different magnitude.
double scaled_damping(const Matrix& gram, double damping) {
  if (damping <= 0.0) return 0.0;
  const double scale = gram.trace() / static_cast<double>(gram.rows());
  return scale > 0.0 ? damping * scale : damping;
}

// Solves (G + eps I) z = rhs. With eps == 0 a rank-deficient G is reported as
// a singularity of `branch`.
Vector solve_gram(Matrix gram, const Vector& rhs, double damping, ServoBranch branch) {
  const double eps = scaled_damping(gram, damping);
  gram.diagonal().array() += eps;
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) {
    throw SingularityError(to_string(branch),
                           std::string("servo_command: Gram matrix of the ") + to_string(branch) +
                               " branch is singular (rank " + std::to_string(lu.rank()) + " of " +
                               std::to_string(gram.rows()) + "); increase damping");
  }
  return lu.solve(rhs);
}

}  // namespace

bool Box::contains(const Vector& x) const {
  if (x.size() != dim()) throw ContractError("Box::contains: dimension mismatch");
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vector Box::clamp(const Vector& x) const {
  if (x.size() != dim()) throw ContractError("Box::clamp: dimension mismatch");
  return x.cwiseMax(lower).cwiseMin(upper);
}

double Box::scale() const { return (upper - lower).maxCoeff(); }

void Box::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) throw InvalidInput("Box: bad dimensions");
  if (!lower.allFinite() || !upper.allFinite()) throw InvalidInput("Box: non-finite bounds");
  if ((upper.array() < lower.array()).any()) throw InvalidInput("Box: upper < lower");
}

void GainSettings::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("gains: lambda must be > 0");
  if (!(u_max > 0.0) || !std::isfinite(u_max)) throw InvalidInput("gains: u_max must be > 0");
  if (!(damping >= 0.0) || !std::isfinite(damping)) throw InvalidInput("gains: damping must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("gains: dt must be > 0");
}

const char* to_string(ServoBranch branch) {
  switch (branch) {
    case ServoBranch::Right: return "right";
    case ServoBranch::Left: return "left";
    case ServoBranch::Square: return "square";
  }
  return "?";
}

ServoBranch select_branch(Eigen::Index rows, Eigen::Index cols) {
  if (cols > rows) return ServoBranch::Right;
  if (rows > cols) return ServoBranch::Left;
  return ServoBranch::Square;
}


Vector saturate(const Vector& e, double bound) {
  if (!(bound > 0.0)) throw InvalidInput("saturate: bound must be > 0");
  if (!e.allFinite()) throw InvalidInput("saturate: non-finite input");
  const double norm = e.norm();
  if (norm <= bound) return e;
  return e * (bound / norm);
}

Configuration apply_command(const Configuration& x, const MotorCommand& u) {
  require_same_size(x.size(), u.size(), "apply_command");
  return x + u;
}

Vector to_velocity(const MotorCommand& u, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("to_velocity: dt must be > 0");
  return u / dt;
}

FeatureVector predict_feature(const FeatureVector& y, const JacobianEstimate& A,
                              const MotorCommand& u) {
  require_same_size(A.rows(), y.size(), "predict_feature (feature)");
  require_same_size(A.cols(), u.size(), "predict_feature (command)");
  return y + A * u;
}

double cost_J(const JacobianEstimate& A, const MotorCommand& u, const FeatureVector& y,
              const FeatureVector& y_star, const GainSettings& gains) {
  require_same_size(A.rows(), y.size(), "cost_J (feature)");
  require_same_size(y.size(), y_star.size(), "cost_J (target)");
  require_same_size(A.cols(), u.size(), "cost_J (command)");
  const Vector residual = A * u + gains.lambda * saturate(y - y_star, gains.u_max);
  return residual.squaredNorm();
}

MotorCommand right_pseudo_inverse_command(const JacobianEstimate& A, const Vector& e_sat,
                                          double lambda, double damping) {
  require_same_size(A.rows(), e_sat.size(), "right_pseudo_inverse_command");
  const Matrix gram = A * A.transpose();
  const ServoBranch branch = A.rows() == A.cols() ? ServoBranch::Square : ServoBranch::Right;
  return -lambda * (A.transpose() * solve_gram(gram, e_sat, damping, branch));
}

MotorCommand left_pseudo_inverse_command(const JacobianEstimate& A, const Vector& e_sat,
                                         double lambda, double damping) {
  require_same_size(A.rows(), e_sat.size(), "left_pseudo_inverse_command");
  const Matrix gram = A.transpose() * A;
  const Vector rhs = A.transpose() * e_sat;
  const ServoBranch branch = A.rows() == A.cols() ? ServoBranch::Square : ServoBranch::Left;
  return -lambda * solve_gram(gram, rhs, damping, branch);
}

MotorCommand inverse_command(const JacobianEstimate& A, const Vector& e_sat, double lambda) {
  if (A.rows() != A.cols()) throw ContractError("inverse_command: A must be square");
  require_same_size(A.rows(), e_sat.size(), "inverse_command");
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) {
    throw SingularityError("square", "servo_command: square Jacobian is singular");
  }
  return -lambda * lu.solve(e_sat);
}

MotorCommand servo_command_unsaturated(const JacobianEstimate& A, const FeatureVector& y,
                                       const FeatureVector& y_star, const GainSettings& gains) {
  gains.validate();
  require_same_size(A.rows(), y.size(), "servo_command (feature)");
  require_same_size(y.size(), y_star.size(), "servo_command (target)");
  if (!A.allFinite()) throw InvalidInput("servo_command: non-finite Jacobian");
  const Vector e_sat = saturate(y - y_star, gains.u_max);
  switch (select_branch(A.rows(), A.cols())) {
    case ServoBranch::Left:
      return left_pseudo_inverse_command(A, e_sat, gains.lambda, gains.damping);
    case ServoBranch::Right:
    case ServoBranch::Square:
      // The square case is the degenerate form of the right pseudo-inverse,
      // which reduces to A^{-1} when damping is zero.
      return right_pseudo_inverse_command(A, e_sat, gains.lambda, gains.damping);
  }
  return MotorCommand::Zero(A.cols());
}

MotorCommand servo_command(const JacobianEstimate& A, const FeatureVector& y,
                           const FeatureVector& y_star, const GainSettings& gains) {
  return saturate(servo_command_unsaturated(A, y, y_star, gains), gains.u_max);
}

}  // namespace sensorimotor
