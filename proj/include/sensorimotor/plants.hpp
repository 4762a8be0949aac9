#pragma once

// Synthetic plants with known sensor models y = f(g(x)). Each plant exposes the
// raw reading g(x), the feature map f, and ground truth for testing.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "sensorimotor/core.hpp"
#include "sensorimotor/est_structured.hpp"

namespace sensorimotor {

/// Concatenated raw sensor signals s = [s^1; ...; s^r].
using SensorReading = Eigen::VectorXd;

struct PlantSpec {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Configuration x0;
  Box workspace;
  /// Sub-box where the feature map is smooth and full rank; excitation and
  /// servo targets stay inside it.
  Box operating_region;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

class Plant {
 public:
  explicit Plant(PlantSpec spec);
  virtual ~Plant() = default;

  const PlantSpec& spec() const { return spec_; }
  Eigen::Index n() const { return spec_.n; }
  Eigen::Index m() const { return spec_.m; }

  virtual std::string name() const = 0;
  virtual Eigen::Index reading_size() const = 0;

  /// g(x) plus Gaussian noise drawn from (seed, sample_index) when
  /// noise_std > 0. Throws OutOfWorkspace.
  SensorReading observe(const Configuration& x, std::uint64_t sample_index = 0) const;

  /// f(s).
  virtual FeatureVector features(const SensorReading& s) const = 0;

  /// Noise-free f(g(x)).
  FeatureVector feature_map(const Configuration& x) const;

  /// Exact Jacobian where the plant knows one.
  virtual std::optional<JacobianEstimate> analytic_jacobian(const Configuration&) const {
    return std::nullopt;
  }

  /// Linear-in-parameters model; throws UnsupportedStructure by default.
  virtual RegressorModel regressor() const;
  /// Parameters for which regressor() reproduces the noise-free features.
  virtual ParameterVector true_parameters() const;

 protected:
  virtual SensorReading sense(const Configuration& x) const = 0;

 private:
  PlantSpec spec_;
};

struct StepResult {
  Configuration x;
  SensorReading reading;
  FeatureVector y;
  bool boundary = false;  // x + u was clamped to the workspace
};

/// Applies u, clamping to the workspace, and observes the new state.
StepResult step(const Plant& plant, const Configuration& x, const MotorCommand& u,
                std::uint64_t sample_index = 0);

/// Central differences of the noise-free features. When a probe leaves the
/// workspace h is shrunk once by 10x before giving up.
JacobianEstimate finite_difference_jacobian(const Plant& plant, const Configuration& x, double h);

RegressorModel regressor_for(const Plant& plant);

// --- concrete plants -------------------------------------------------------

/// y = A x (+ y_offset); the Jacobian is A everywhere.
class LinearPlant final : public Plant {
 public:
  LinearPlant(Matrix A, Vector offset, PlantSpec spec);
  std::string name() const override { return "linear"; }
  Eigen::Index reading_size() const override { return spec().m; }
  FeatureVector features(const SensorReading& s) const override { return s; }
  std::optional<JacobianEstimate> analytic_jacobian(const Configuration&) const override {
    return A_;
  }
  const Matrix& matrix() const { return A_; }

 protected:
  SensorReading sense(const Configuration& x) const override { return A_ * x + offset_; }

 private:
  Matrix A_;
  Vector offset_;
};

struct CameraArmParams {
  Eigen::Vector3d link_lengths{1.0, 1.0, 1.0};
  Eigen::Matrix2d camera;  // unknown projection P
  Eigen::Vector2d offset;  // unknown image offset b
  static CameraArmParams defaults();
};

/// Planar 3-link arm seen by an uncalibrated camera: y = P c(x) + b with c the
/// end-effector position. Kinematics are known, P and b are not.
class CameraArmPlant final : public Plant {
 public:
  CameraArmPlant(CameraArmParams params, PlantSpec spec);
  static PlantSpec default_spec();

  std::string name() const override { return "camera-arm"; }
  Eigen::Index reading_size() const override { return 2; }
  FeatureVector features(const SensorReading& s) const override { return s; }
  std::optional<JacobianEstimate> analytic_jacobian(const Configuration& x) const override;
  RegressorModel regressor() const override;
  /// [P00, P01, P10, P11, b0, b1]
  ParameterVector true_parameters() const override;

  Eigen::Vector2d end_effector(const Configuration& x) const;
  Eigen::Matrix<double, 2, 3> kinematic_jacobian(const Configuration& x) const;
  const CameraArmParams& params() const { return params_; }

 protected:
  SensorReading sense(const Configuration& x) const override;

 private:
  CameraArmParams params_;
};

struct BeamParams {
  Eigen::Vector3d rest_position{0.4, 0.0, 0.2};
  double c1 = 2.0;  // curvature per unit displacement (1/m^2)
  double c2 = 0.3;
  double c3 = 0.5;
  double backbone_length = 0.3;
  int backbone_points = 10;
};

/// Elastic beam grasped at pose x = (px, py, pz, psi). Features are the
/// curvature and bending angle:
///   kappa = c1 |d| (1 + c2 sin^2 psi),  theta = atan2(d_y, d_x) + c3 psi,
/// with d the planar displacement from the rest grasp position. The reading
/// is [kappa, theta, backbone samples (x, y, z)...].
class BeamPlant final : public Plant {
 public:
  BeamPlant(BeamParams params, PlantSpec spec);
  static PlantSpec default_spec(const BeamParams& params = {});

  std::string name() const override { return "beam"; }
  Eigen::Index reading_size() const override { return 2 + 3 * params_.backbone_points; }
  FeatureVector features(const SensorReading& s) const override { return s.head(2); }
  std::optional<JacobianEstimate> analytic_jacobian(const Configuration& x) const override;

  Configuration rest_pose() const;
  const BeamParams& params() const { return params_; }

 protected:
  SensorReading sense(const Configuration& x) const override;

 private:
  BeamParams params_;
};

struct ProbeParams {
  double stiffness = 50.0;    // k (N/m)
  double contact_height = 0.0;  // z0 (m)
  Eigen::Matrix2d image_gain;   // M
  Eigen::Vector2d image_offset;  // c
  Eigen::Vector2d tilt_gain;     // per-axis orientation scale
  Eigen::Vector2d tilt_offset;   // orientation bias
  static ProbeParams defaults();
};

/// Ultrasound probe on a 6-DOF arm, x = (px, py, pz, rx, ry, rz). Features
/// y = [mu (2), phi, omega (2)]:
///   mu = M (px, py) + c,  phi = k max(0, z0 - pz),  omega = diag(g) (rx, ry) + o.
/// The reading is [mu, wrench (3), omega] with the normal force on the last
/// wrench axis.
class ProbePlant final : public Plant {
 public:
  ProbePlant(ProbeParams params, PlantSpec spec);
  static PlantSpec default_spec();

  std::string name() const override { return "probe"; }
  Eigen::Index reading_size() const override { return 7; }
  FeatureVector features(const SensorReading& s) const override;
  std::optional<JacobianEstimate> analytic_jacobian(const Configuration& x) const override;
  RegressorModel regressor() const override;
  /// [k, k z0, M00, M01, M10, M11, c0, c1, g0, g1, o0, o1]
  ParameterVector true_parameters() const override;
  const ProbeParams& params() const { return params_; }

 protected:
  SensorReading sense(const Configuration& x) const override;

 private:
  ProbeParams params_;
};

}  // namespace sensorimotor
