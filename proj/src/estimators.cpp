#include "sensorimotor/estimators.hpp"

namespace sensorimotor {

OracleSource::OracleSource(const Plant& plant, double h) : plant_(plant), h_(h) {
  if (!(h > 0.0)) throw InvalidInput("OracleSource: h must be > 0");
}

JacobianEstimate OracleSource::jacobian(const Configuration& x) {
  last_ = finite_difference_jacobian(plant_, x, h_);
  return last_;
}

void OracleSource::observe(const Configuration&, const ObservationDU& obs) {
  if (last_.size() > 0) residual_ = (last_ * obs.u - obs.delta).norm();
}

JacobianEstimate bootstrap_jacobian(const Plant& plant, const Configuration& x, double amplitude) {
  if (!(amplitude > 0.0)) throw InvalidInput("bootstrap_jacobian: amplitude must be > 0");
  const Box& ws = plant.spec().workspace;
  const FeatureVector y = plant.feature_map(x);
  JacobianEstimate J(plant.m(), plant.n());
  for (Eigen::Index i = 0; i < plant.n(); ++i) {
    Configuration probe = x;
    const double step = x(i) + amplitude <= ws.upper(i) ? amplitude : -amplitude;
    probe(i) += step;
    J.col(i) = (plant.feature_map(probe) - y) / step;
  }
  return J;
}

BroydenSource::BroydenSource(JacobianEstimate initial, BroydenGain gain)
    : estimate_(std::move(initial)), gain_(gain) {}

void BroydenSource::observe(const Configuration&, const ObservationDU& obs) {
  BroydenResult r = broyden_update(estimate_, obs, gain_);
  if (r.skipped) ++skipped_;
  estimate_ = std::move(r.jacobian);
  residual_ = (estimate_ * obs.u - obs.delta).norm();
}

InstantGradientSource::InstantGradientSource(JacobianEstimate initial, std::optional<double> gamma,
                                             double normalized_rate)
    : estimate_(std::move(initial)), gamma_(gamma), normalized_rate_(normalized_rate) {
  if (gamma_ && !(*gamma_ > 0.0)) throw InvalidInput("InstantGradientSource: gamma must be > 0");
  if (!(normalized_rate_ > 0.0 && normalized_rate_ <= 1.0)) {
    throw InvalidInput("InstantGradientSource: normalized rate must be in (0, 1]");
  }
}

void InstantGradientSource::observe(const Configuration&, const ObservationDU& obs) {
  const double uu = obs.u.squaredNorm();
  if (uu < kDegenerateCommandSq) return;
  const double gamma = gamma_ ? *gamma_ : normalized_rate_ / uu;
  estimate_ = gradient_update_V(estimate_, obs, gamma);
  cost_ = cost_V(estimate_, obs, 1.0);
}

StructuredSource::StructuredSource(RegressorModel model, ParameterVector params, double fit_cost)
    : model_(std::move(model)), params_(std::move(params)), fit_cost_(fit_cost) {}

JacobianEstimate StructuredSource::jacobian(const Configuration& x) {
  return jacobian_from_parameters(model_, x, params_);
}

DistributedSource::DistributedSource(UnitNetwork network, std::vector<LocalizedObservation> data,
                                     bool online)
    : network_(std::move(network)), data_(std::move(data)), online_(online) {
  network_.validate();
}

JacobianEstimate DistributedSource::jacobian(const Configuration& x) {
  last_winner_ = winner(network_, x);
  return query_jacobian(network_, x);
}

void DistributedSource::observe(const Configuration& x_before, const ObservationDU& obs) {
  if (!online_) return;
  const double uu = obs.u.squaredNorm();
  if (uu < kDegenerateCommandSq) return;
  const std::size_t l = winner(network_, x_before);
  ComputingUnit& unit = network_.units[l];
  // 1 / (lambda_max(sum h u u^T) + u^T u) bounds the curvature of H.
  const std::optional<double> w_gain = stable_gain_W(unit, data_, network_.sigma, network_.h_min);
  const double gamma = 1.0 / ((w_gain ? 1.0 / *w_gain : 0.0) + uu);
  unit = refine_unit(unit, data_, obs, network_.sigma, gamma, network_.h_min);
  unit.trained = true;
}

}  // namespace sensorimotor
