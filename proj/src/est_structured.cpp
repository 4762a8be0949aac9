#include "sensorimotor/est_structured.hpp"

#include <cmath>
#include <string>

namespace sensorimotor {

namespace {

void check_inputs(std::span<const ObservationYX> data, const ParameterVector& pi_hat,
                  const RegressorModel& reg, const char* op) {
  if (data.empty()) throw InvalidInput(std::string(op) + ": empty dataset");
  if (pi_hat.size() != reg.p) {
    throw ContractError(std::string(op) + ": parameter vector has length " +
                        std::to_string(pi_hat.size()) + ", regressor expects " +
                        std::to_string(reg.p));
  }
  if (!pi_hat.allFinite()) throw InvalidInput(std::string(op) + ": non-finite parameters");
  for (const auto& obs : data) {
    if (obs.y.size() != reg.m || obs.x.size() != reg.n) {
      throw ContractError(std::string(op) + ": observation dimensions do not match the regressor");
    }
  }
}

// Sufficient statistics of U: G = sum L^T L, b = sum L^T y, c = sum |y|^2.
// U(pi) = gamma/2 (pi^T G pi - 2 b^T pi + c), grad U = gamma (G pi - b).
struct NormalEquations {
  Matrix gram;
  Vector rhs;
  double energy = 0.0;
};

NormalEquations accumulate(std::span<const ObservationYX> data, const RegressorModel& reg) {
  NormalEquations eq{Matrix::Zero(reg.p, reg.p), Vector::Zero(reg.p), 0.0};
  for (const auto& obs : data) {
    const Matrix L = reg.regressor(obs.x);
    eq.gram.noalias() += L.transpose() * L;
    eq.rhs.noalias() += L.transpose() * obs.y;
    eq.energy += obs.y.squaredNorm();
  }
  return eq;
}

}  // namespace

Matrix RegressorModel::regressor(const Configuration& x) const {
  if (x.size() != n) throw ContractError("regressor: configuration length mismatch");
  Matrix L = evaluate(x);
  if (L.rows() != m || L.cols() != p) {
    throw ContractError("regressor: evaluate returned " + std::to_string(L.rows()) + "x" +
                        std::to_string(L.cols()) + ", expected " + std::to_string(m) + "x" +
                        std::to_string(p));
  }
  return L;
}

void FitSchedule::validate() const {
  if (!(gamma > 0.0)) throw InvalidInput("fit: gamma must be > 0");
  if (max_iters <= 0) throw InvalidInput("fit: max_iters must be > 0");
  if (!(grad_tol > 0.0)) throw InvalidInput("fit: grad_tol must be > 0");
}

double cost_U(std::span<const ObservationYX> data, const ParameterVector& pi_hat, double gamma,
              const RegressorModel& reg) {
  check_inputs(data, pi_hat, reg, "cost_U");
  double sum = 0.0;
  for (const auto& obs : data) sum += (reg.regressor(obs.x) * pi_hat - obs.y).squaredNorm();
  return 0.5 * gamma * sum;
}

Vector grad_U(std::span<const ObservationYX> data, const ParameterVector& pi_hat, double gamma,
              const RegressorModel& reg) {
  check_inputs(data, pi_hat, reg, "grad_U");
  Vector grad = Vector::Zero(reg.p);
  for (const auto& obs : data) {
    const Matrix L = reg.regressor(obs.x);
    grad.noalias() += L.transpose() * (L * pi_hat - obs.y);
  }
  return gamma * grad;
}

ParameterVector update_parameters(const ParameterVector& pi_hat,
                                  std::span<const ObservationYX> data, double gamma,
                                  const RegressorModel& reg) {
  return pi_hat - grad_U(data, pi_hat, gamma, reg);
}

FitResult fit(std::span<const ObservationYX> data, const ParameterVector& pi0,
              const FitSchedule& schedule, const RegressorModel& reg) {
  schedule.validate();
  check_inputs(data, pi0, reg, "fit");
  const NormalEquations eq = accumulate(data, reg);
  const double gamma = schedule.gamma;
  auto cost = [&](const Vector& pi) {
    return 0.5 * gamma * (pi.dot(eq.gram * pi) - 2.0 * eq.rhs.dot(pi) + eq.energy);
  };
  // Rounding in the expanded quadratic form; increases below this are noise.
  const double cost_noise = 1e-12 * 0.5 * gamma * (eq.energy + 1.0);

  FitResult result{pi0, 0, 0.0, false};
  double previous = cost(pi0);
  int increases = 0;
  for (int it = 0; it < schedule.max_iters; ++it) {
    const Vector grad = gamma * (eq.gram * result.params - eq.rhs);
    result.grad_norm = grad.norm();
    result.iterations = it;
    if (result.grad_norm <= schedule.grad_tol) {
      result.converged = true;
      return result;
    }
    result.params -= grad;
    const double current = cost(result.params);
    if (!std::isfinite(current)) {
      throw StepSizeError("fit: cost became non-finite; use a smaller gamma");
    }
    increases = current > previous + cost_noise ? increases + 1 : 0;
    if (increases >= 10) {
      throw StepSizeError("fit: cost increased for 10 consecutive iterations; use a smaller gamma");
    }
    previous = current;
  }
  const Vector grad = gamma * (eq.gram * result.params - eq.rhs);
  result.grad_norm = grad.norm();
  result.iterations = schedule.max_iters;
  result.converged = result.grad_norm <= schedule.grad_tol;
  return result;
}

double stable_gain_U(std::span<const ObservationYX> data, const RegressorModel& reg) {
  if (data.empty()) throw InvalidInput("stable_gain_U: empty dataset");
  const NormalEquations eq = accumulate(data, reg);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(eq.gram, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0)) throw InvalidInput("stable_gain_U: regressor is identically zero on the data");
  return 1.0 / top;
}

JacobianEstimate jacobian_from_parameters(const RegressorModel& reg, const Configuration& x,
                                          const ParameterVector& pi_hat) {
  if (x.size() != reg.n) throw ContractError("jacobian_from_parameters: configuration length mismatch");
  if (pi_hat.size() != reg.p) throw ContractError("jacobian_from_parameters: parameter length mismatch");
  if (reg.evaluate_dx) {
    Matrix J = reg.evaluate_dx(x, pi_hat);
    if (J.rows() != reg.m || J.cols() != reg.n) {
      throw ContractError("jacobian_from_parameters: evaluate_dx returned the wrong shape");
    }
    return J;
  }
  JacobianEstimate J(reg.m, reg.n);
  for (Eigen::Index i = 0; i < reg.n; ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x(i)));
    Configuration xp = x;
    Configuration xm = x;
    xp(i) += h;
    xm(i) -= h;
    J.col(i) = (reg.regressor(xp) * pi_hat - reg.regressor(xm) * pi_hat) / (xp(i) - xm(i));
  }
  return J;
}

}  // namespace sensorimotor
