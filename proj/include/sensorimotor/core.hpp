#pragma once

// Shared domain types, kinematic bookkeeping and the set-point servo laws.
//
// Commands are differential displacements: x_{t+1} = x_t + u_t. The servo
// command minimises ||A u + lambda sat(y - y*)||^2 with one of three branches
// selected by the relative sizes of the feature (m) and configuration (n)
// spaces.

#include <Eigen/Dense>

#include "sensorimotor/errors.hpp"

namespace sensorimotor {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Robot configuration x_t (length n).
using Configuration = Eigen::VectorXd;
/// Differential displacement command u_t (length n).
using MotorCommand = Eigen::VectorXd;
/// Task feature vector y_t (length m).
using FeatureVector = Eigen::VectorXd;
/// m x n estimate of the sensorimotor Jacobian.
using JacobianEstimate = Eigen::MatrixXd;

/// Axis-aligned box of configurations.
struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vector& x) const;
  Vector clamp(const Vector& x) const;
  /// Longest side length.
  double scale() const;
  void validate() const;
};

struct GainSettings {
  double lambda = 0.5;
  double u_max = 0.05;
  /// Tikhonov coefficient, scaled by the mean diagonal of the Gram matrix.
  double damping = 1e-8;
  double dt = 0.01;

  void validate() const;
};

enum class ServoBranch { Right, Left, Square };

const char* to_string(ServoBranch branch);

/// Branch chosen for an m x n Jacobian: Right for n > m, Left for m > n.
ServoBranch select_branch(Eigen::Index rows, Eigen::Index cols);

/// Norm-preserving saturation: returns e scaled down to norm `bound` if it is
/// longer, e itself otherwise.
Vector saturate(const Vector& e, double bound);

Configuration apply_command(const Configuration& x, const MotorCommand& u);

Vector to_velocity(const MotorCommand& u, double dt);

/// First-order difference model y + A u.
FeatureVector predict_feature(const FeatureVector& y, const JacobianEstimate& A,
                              const MotorCommand& u);

double cost_J(const JacobianEstimate& A, const MotorCommand& u, const FeatureVector& y,
              const FeatureVector& y_star, const GainSettings& gains);

// Individual branches. `e_sat` is the already saturated error; the result is
// -lambda * (generalised inverse) * e_sat with no final saturation applied.
// `damping` is the raw Tikhonov coefficient (0 disables it).
MotorCommand right_pseudo_inverse_command(const JacobianEstimate& A, const Vector& e_sat,
                                          double lambda, double damping);
MotorCommand left_pseudo_inverse_command(const JacobianEstimate& A, const Vector& e_sat,
                                         double lambda, double damping);
/// Plain -lambda A^{-1} e_sat via LU; A must be square.
MotorCommand inverse_command(const JacobianEstimate& A, const Vector& e_sat, double lambda);

/// Command before the final saturation to u_max.
MotorCommand servo_command_unsaturated(const JacobianEstimate& A, const FeatureVector& y,
                                       const FeatureVector& y_star, const GainSettings& gains);

MotorCommand servo_command(const JacobianEstimate& A, const FeatureVector& y,
                           const FeatureVector& y_star, const GainSettings& gains);

}  // namespace sensorimotor
