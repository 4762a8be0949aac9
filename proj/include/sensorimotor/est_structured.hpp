#pragma once

// Structure-based adaptation: gradient descent on the parameters of a model
// y = L(x) pi that is linear in pi, and the Jacobian d{L(x) pi}/dx it implies.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sensorimotor/core.hpp"

namespace sensorimotor {

using ParameterVector = Eigen::VectorXd;

/// Known regressor L(x) in R^{m x p}. `evaluate_dx` returns d{L(x) pi}/dx
/// (m x n); without it the Jacobian falls back to central differences.
struct RegressorModel {
  Eigen::Index p = 0;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  std::function<Matrix(const Configuration&)> evaluate;
  std::function<Matrix(const Configuration&, const ParameterVector&)> evaluate_dx;

  Matrix regressor(const Configuration& x) const;
};

struct ObservationYX {
  FeatureVector y;
  Configuration x;
};

struct FitSchedule {
  double gamma = 1e-2;
  int max_iters = 100000;
  double grad_tol = 1e-9;

  void validate() const;
};

struct FitResult {
  ParameterVector params;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

double cost_U(std::span<const ObservationYX> data, const ParameterVector& pi_hat, double gamma,
              const RegressorModel& reg);

Vector grad_U(std::span<const ObservationYX> data, const ParameterVector& pi_hat, double gamma,
              const RegressorModel& reg);

/// One descent step pi - grad U; the step size is carried by gamma.
ParameterVector update_parameters(const ParameterVector& pi_hat,
                                  std::span<const ObservationYX> data, double gamma,
                                  const RegressorModel& reg);

/// Repeats update_parameters until ||grad U|| <= grad_tol or max_iters.
/// Throws StepSizeError when U grows for 10 consecutive iterations.
FitResult fit(std::span<const ObservationYX> data, const ParameterVector& pi0,
              const FitSchedule& schedule, const RegressorModel& reg);

/// Largest gain for which the descent is a contraction with margin:
/// 1 / lambda_max(sum_k L_k^T L_k).
double stable_gain_U(std::span<const ObservationYX> data, const RegressorModel& reg);

JacobianEstimate jacobian_from_parameters(const RegressorModel& reg, const Configuration& x,
                                          const ParameterVector& pi_hat);

}  // namespace sensorimotor
