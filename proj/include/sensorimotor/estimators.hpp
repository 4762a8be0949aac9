#pragma once

// Adapters that give the servo loop a Jacobian estimate each step.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensorimotor/dataset.hpp"
#include "sensorimotor/est_distributed.hpp"
#include "sensorimotor/est_instant.hpp"
#include "sensorimotor/est_structured.hpp"
#include "sensorimotor/plants.hpp"

namespace sensorimotor {

class JacobianSource {
 public:
  virtual ~JacobianSource() = default;
  virtual std::string name() const = 0;
  /// Estimate used to compute the command at configuration x.
  virtual JacobianEstimate jacobian(const Configuration& x) = 0;
  /// Called after each step with the pre-motion configuration and the
  /// observed (delta, u).
  virtual void observe(const Configuration& /*x_before*/, const ObservationDU& /*obs*/) {}
  /// Estimator-specific scalar logged with every row.
  virtual double diagnostic() const { return 0.0; }
};

/// Central-difference Jacobian of the true plant at every step.
class OracleSource final : public JacobianSource {
 public:
  OracleSource(const Plant& plant, double h);
  std::string name() const override { return "oracle"; }
  JacobianEstimate jacobian(const Configuration& x) override;
  void observe(const Configuration& x_before, const ObservationDU& obs) override;
  /// |A u - delta| of the last step.
  double diagnostic() const override { return residual_; }

 private:
  const Plant& plant_;
  double h_;
  JacobianEstimate last_;
  double residual_ = 0.0;
};

/// Forward differences from n axis-aligned probes of amplitude a around x.
/// Probes that would leave the workspace are taken in the negative direction.
JacobianEstimate bootstrap_jacobian(const Plant& plant, const Configuration& x, double amplitude);

class BroydenSource final : public JacobianSource {
 public:
  BroydenSource(JacobianEstimate initial, BroydenGain gain);
  std::string name() const override { return "broyden"; }
  JacobianEstimate jacobian(const Configuration&) override { return estimate_; }
  void observe(const Configuration& x_before, const ObservationDU& obs) override;
  /// Secant residual |A_t u_t - delta_t| after the update.
  double diagnostic() const override { return residual_; }
  int skipped_updates() const { return skipped_; }

 private:
  JacobianEstimate estimate_;
  BroydenGain gain_;
  double residual_ = 0.0;
  int skipped_ = 0;
};

/// Gradient descent on V. With a fixed gain the step is gamma (A u - delta) u^T;
/// without one the gain is normalised to `normalized_rate / (u^T u)`.
class InstantGradientSource final : public JacobianSource {
 public:
  InstantGradientSource(JacobianEstimate initial, std::optional<double> gamma,
                        double normalized_rate = 0.5);
  std::string name() const override { return "instant-gradient"; }
  JacobianEstimate jacobian(const Configuration&) override { return estimate_; }
  void observe(const Configuration& x_before, const ObservationDU& obs) override;
  /// cost V after the update, evaluated with unit gain.
  double diagnostic() const override { return cost_; }

 private:
  JacobianEstimate estimate_;
  std::optional<double> gamma_;
  double normalized_rate_;
  double cost_ = 0.0;
};

class StructuredSource final : public JacobianSource {
 public:
  StructuredSource(RegressorModel model, ParameterVector params, double fit_cost);
  std::string name() const override { return "structured"; }
  JacobianEstimate jacobian(const Configuration& x) override;
  /// cost U of the offline fit.
  double diagnostic() const override { return fit_cost_; }
  const ParameterVector& parameters() const { return params_; }

 private:
  RegressorModel model_;
  ParameterVector params_;
  double fit_cost_;
};

/// Retrieves the winner's Jacobian. With `online` set each step refines the
/// winner by one gradient step on H = V + W over the training data.
class DistributedSource final : public JacobianSource {
 public:
  DistributedSource(UnitNetwork network, std::vector<LocalizedObservation> data, bool online);
  std::string name() const override { return "distributed"; }
  JacobianEstimate jacobian(const Configuration& x) override;
  void observe(const Configuration& x_before, const ObservationDU& obs) override;
  /// Winner index at the last query.
  double diagnostic() const override { return static_cast<double>(last_winner_); }
  const UnitNetwork& network() const { return network_; }

 private:
  UnitNetwork network_;
  std::vector<LocalizedObservation> data_;
  bool online_;
  std::size_t last_winner_ = 0;
};

}  // namespace sensorimotor
