#include "sensorimotor/plants.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace sensorimotor {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Box make_box(std::initializer_list<double> lower, std::initializer_list<double> upper) {
  Box box{Vector(static_cast<Eigen::Index>(lower.size())),
          Vector(static_cast<Eigen::Index>(upper.size()))};
  Eigen::Index i = 0;
  for (double v : lower) box.lower(i++) = v;
  i = 0;
  for (double v : upper) box.upper(i++) = v;
  return box;
}

Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

void require_config(const Plant& plant, const Configuration& x, const char* op) {
  if (x.size() != plant.n()) {
    throw ContractError(std::string(op) + ": configuration has length " + std::to_string(x.size()) +
                        ", plant expects " + std::to_string(plant.n()));
  }
  if (!x.allFinite()) throw InvalidInput(std::string(op) + ": non-finite configuration");
}

Eigen::Vector2d planar_end_effector(const Eigen::Vector3d& links, const Configuration& x) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  double angle = 0.0;
  for (int k = 0; k < 3; ++k) {
    angle += x(k);
    c += links(k) * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  return c;
}

Eigen::Matrix<double, 2, 3> planar_jacobian(const Eigen::Vector3d& links, const Configuration& x) {
  Eigen::Matrix<double, 2, 3> J = Eigen::Matrix<double, 2, 3>::Zero();
  double angle = 0.0;
  for (int k = 0; k < 3; ++k) {
    angle += x(k);
    const Eigen::Vector2d dlink = links(k) * Eigen::Vector2d(-std::sin(angle), std::cos(angle));
    // Joint j moves every link k >= j.
    for (int j = 0; j <= k; ++j) J.col(j) += dlink;
  }
  return J;
}

}  // namespace

void PlantSpec::validate() const {
  if (n < 1 || m < 1) throw InvalidInput("PlantSpec: n and m must be >= 1");
  workspace.validate();
  operating_region.validate();
  if (workspace.dim() != n || operating_region.dim() != n || x0.size() != n) {
    throw InvalidInput("PlantSpec: box or x0 dimension differs from n");
  }
  if (!workspace.contains(x0)) throw InvalidInput("PlantSpec: x0 lies outside the workspace");
  if (!workspace.contains(operating_region.lower) || !workspace.contains(operating_region.upper)) {
    throw InvalidInput("PlantSpec: operating region must lie inside the workspace");
  }
  if (!(noise_std >= 0.0)) throw InvalidInput("PlantSpec: noise_std must be >= 0");
}

// --- Plant -----------------------------------------------------------------

Plant::Plant(PlantSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

SensorReading Plant::observe(const Configuration& x, std::uint64_t sample_index) const {
  require_config(*this, x, "observe");
  if (!spec_.workspace.contains(x)) throw OutOfWorkspace("observe: configuration outside the workspace");
  SensorReading s = sense(x);
  if (spec_.noise_std > 0.0) {
    std::mt19937_64 rng(splitmix64(spec_.seed ^ splitmix64(sample_index)));
    std::normal_distribution<double> noise(0.0, spec_.noise_std);
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) += noise(rng);
  }
  return s;
}

FeatureVector Plant::feature_map(const Configuration& x) const {
  require_config(*this, x, "feature_map");
  if (!spec_.workspace.contains(x)) {
    throw OutOfWorkspace("feature_map: configuration outside the workspace");
  }
  return features(sense(x));
}

RegressorModel Plant::regressor() const {
  throw UnsupportedStructure("plant '" + name() + "' has no linear-in-parameters model");
}

ParameterVector Plant::true_parameters() const {
  throw UnsupportedStructure("plant '" + name() + "' has no linear-in-parameters model");
}

StepResult step(const Plant& plant, const Configuration& x, const MotorCommand& u,
                std::uint64_t sample_index) {
  const Configuration target = apply_command(x, u);
  StepResult out;
  out.x = plant.spec().workspace.clamp(target);
  out.boundary = (out.x.array() != target.array()).any();
  out.reading = plant.observe(out.x, sample_index);
  out.y = plant.features(out.reading);
  return out;
}

JacobianEstimate finite_difference_jacobian(const Plant& plant, const Configuration& x, double h) {
  require_config(plant, x, "finite_difference_jacobian");
  if (!(h > 0.0)) throw InvalidInput("finite_difference_jacobian: h must be > 0");
  const Box& ws = plant.spec().workspace;
  auto probes_fit = [&](double step) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) - step < ws.lower(i) || x(i) + step > ws.upper(i)) return false;
    }
    return true;
  };
  if (!probes_fit(h)) {
    h /= 10.0;
    if (!probes_fit(h)) {
      throw OutOfWorkspace("finite_difference_jacobian: probes leave the workspace even at h = " +
                           std::to_string(h));
    }
  }
  JacobianEstimate J(plant.m(), plant.n());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Configuration xp = x;
    Configuration xm = x;
    xp(i) += h;
    xm(i) -= h;
    J.col(i) = (plant.feature_map(xp) - plant.feature_map(xm)) / (2.0 * h);
  }
  return J;
}

RegressorModel regressor_for(const Plant& plant) { return plant.regressor(); }

// --- LinearPlant -----------------------------------------------------------

LinearPlant::LinearPlant(Matrix A, Vector offset, PlantSpec spec)
    : Plant(std::move(spec)), A_(std::move(A)), offset_(std::move(offset)) {
  if (A_.rows() != this->spec().m || A_.cols() != this->spec().n || offset_.size() != A_.rows()) {
    throw InvalidInput("LinearPlant: matrix shape does not match the spec");
  }
}

// --- CameraArmPlant --------------------------------------------------------

CameraArmParams CameraArmParams::defaults() {
  CameraArmParams p;
  p.camera << 0.9, 0.15, -0.1, 1.1;
  p.offset << 0.2, -0.3;
  return p;
}

PlantSpec CameraArmPlant::default_spec() {
  PlantSpec spec;
  spec.n = 3;
  spec.m = 2;
  spec.x0 = make_vector({0.2, 0.8, 0.6});
  spec.workspace = make_box({-std::numbers::pi / 2, -0.2, -0.2}, {std::numbers::pi / 2, 2.4, 2.4});
  spec.operating_region = make_box({-1.2, 0.3, 0.3}, {1.2, 2.0, 2.0});
  return spec;
}

CameraArmPlant::CameraArmPlant(CameraArmParams params, PlantSpec spec)
    : Plant(std::move(spec)), params_(std::move(params)) {
  if (this->spec().n != 3 || this->spec().m != 2) {
    throw InvalidInput("CameraArmPlant: expects n = 3, m = 2");
  }
}

Eigen::Vector2d CameraArmPlant::end_effector(const Configuration& x) const {
  return planar_end_effector(params_.link_lengths, x);
}

Eigen::Matrix<double, 2, 3> CameraArmPlant::kinematic_jacobian(const Configuration& x) const {
  return planar_jacobian(params_.link_lengths, x);
}

SensorReading CameraArmPlant::sense(const Configuration& x) const {
  return params_.camera * end_effector(x) + params_.offset;
}

std::optional<JacobianEstimate> CameraArmPlant::analytic_jacobian(const Configuration& x) const {
  return JacobianEstimate(params_.camera * kinematic_jacobian(x));
}

RegressorModel CameraArmPlant::regressor() const {
  RegressorModel reg;
  reg.p = 6;
  reg.m = 2;
  reg.n = 3;
  const Eigen::Vector3d links = params_.link_lengths;
  reg.evaluate = [links](const Configuration& x) {
    const Eigen::Vector2d c = planar_end_effector(links, x);
    Matrix L = Matrix::Zero(2, 6);
    L(0, 0) = c(0);
    L(0, 1) = c(1);
    L(1, 2) = c(0);
    L(1, 3) = c(1);
    L(0, 4) = 1.0;
    L(1, 5) = 1.0;
    return L;
  };
  reg.evaluate_dx = [links](const Configuration& x, const ParameterVector& pi) {
    Eigen::Matrix2d P;
    P << pi(0), pi(1), pi(2), pi(3);
    return Matrix(P * planar_jacobian(links, x));
  };
  return reg;
}

ParameterVector CameraArmPlant::true_parameters() const {
  ParameterVector pi(6);
  pi << params_.camera(0, 0), params_.camera(0, 1), params_.camera(1, 0), params_.camera(1, 1),
      params_.offset(0), params_.offset(1);
  return pi;
}

// --- BeamPlant -------------------------------------------------------------

PlantSpec BeamPlant::default_spec(const BeamParams& params) {
  const Eigen::Vector3d& r = params.rest_position;
  PlantSpec spec;
  spec.n = 4;
  spec.m = 2;
  spec.x0 = make_vector({r(0) + 0.2, r(1) - 0.05, r(2), -0.2});
  spec.workspace = make_box({r(0) - 0.1, r(1) - 0.3, r(2) - 0.1, -0.6},
                            {r(0) + 0.4, r(1) + 0.3, r(2) + 0.1, 0.6});
  // Keeps |d| >= 0.15, away from the bending-angle singularity at rest.
  spec.operating_region = make_box({r(0) + 0.15, r(1) - 0.1, r(2) - 0.05, -0.4},
                                   {r(0) + 0.35, r(1) + 0.1, r(2) + 0.05, 0.4});
  return spec;
}

BeamPlant::BeamPlant(BeamParams params, PlantSpec spec)
    : Plant(std::move(spec)), params_(std::move(params)) {
  if (this->spec().n != 4 || this->spec().m != 2) throw InvalidInput("BeamPlant: expects n = 4, m = 2");
  if (params_.backbone_points < 2) throw InvalidInput("BeamPlant: need >= 2 backbone points");
}

Configuration BeamPlant::rest_pose() const {
  Configuration x(4);
  x << params_.rest_position(0), params_.rest_position(1), params_.rest_position(2), 0.0;
  return x;
}

SensorReading BeamPlant::sense(const Configuration& x) const {
  const double dx = x(0) - params_.rest_position(0);
  const double dy = x(1) - params_.rest_position(1);
  const double psi = x(3);
  const double sin_psi = std::sin(psi);
  const double kappa = params_.c1 * std::hypot(dx, dy) * (1.0 + params_.c2 * sin_psi * sin_psi);
  const double theta = std::atan2(dy, dx) + params_.c3 * psi;

  SensorReading s(reading_size());
  s(0) = kappa;
  s(1) = theta;
  // Constant-curvature backbone leaving the clamp along +x, bent towards theta.
  const int points = params_.backbone_points;
  for (int k = 0; k < points; ++k) {
    const double arc = params_.backbone_length * k / (points - 1);
    double along = arc;
    double across = 0.0;
    if (kappa > 0.0) {
      along = std::sin(kappa * arc) / kappa;
      across = (1.0 - std::cos(kappa * arc)) / kappa;
    }
    s(2 + 3 * k) = along;
    s(3 + 3 * k) = across * std::cos(theta);
    s(4 + 3 * k) = across * std::sin(theta);
  }
  return s;
}

std::optional<JacobianEstimate> BeamPlant::analytic_jacobian(const Configuration& x) const {
  const double dx = x(0) - params_.rest_position(0);
  const double dy = x(1) - params_.rest_position(1);
  const double r2 = dx * dx + dy * dy;
  if (r2 == 0.0) return std::nullopt;
  const double r = std::sqrt(r2);
  const double psi = x(3);
  const double scale = 1.0 + params_.c2 * std::sin(psi) * std::sin(psi);
  JacobianEstimate J = JacobianEstimate::Zero(2, 4);
  J(0, 0) = params_.c1 * scale * dx / r;
  J(0, 1) = params_.c1 * scale * dy / r;
  J(0, 3) = params_.c1 * r * params_.c2 * std::sin(2.0 * psi);
  J(1, 0) = -dy / r2;
  J(1, 1) = dx / r2;
  J(1, 3) = params_.c3;
  return J;
}

// --- ProbePlant ------------------------------------------------------------

ProbeParams ProbeParams::defaults() {
  ProbeParams p;
  p.image_gain << 8.0, 0.5, -0.4, 7.0;
  p.image_offset << 0.05, -0.02;
  p.tilt_gain << 0.95, 1.05;
  p.tilt_offset << 0.02, -0.03;
  return p;
}

PlantSpec ProbePlant::default_spec() {
  PlantSpec spec;
  spec.n = 6;
  spec.m = 5;
  spec.x0 = make_vector({0.02, -0.015, -0.01, 0.1, -0.08, 0.0});
  spec.workspace = make_box({-0.06, -0.06, -0.04, -0.3, -0.3, -0.3}, {0.06, 0.06, 0.01, 0.3, 0.3, 0.3});
  // Always in contact: pz stays below the contact height.
  spec.operating_region =
      make_box({-0.05, -0.05, -0.035, -0.25, -0.25, -0.25}, {0.05, 0.05, -0.005, 0.25, 0.25, 0.25});
  return spec;
}

ProbePlant::ProbePlant(ProbeParams params, PlantSpec spec)
    : Plant(std::move(spec)), params_(std::move(params)) {
  if (this->spec().n != 6 || this->spec().m != 5) throw InvalidInput("ProbePlant: expects n = 6, m = 5");
  if (!(params_.stiffness > 0.0)) throw InvalidInput("ProbePlant: stiffness must be > 0");
}

SensorReading ProbePlant::sense(const Configuration& x) const {
  const Eigen::Vector2d mu = params_.image_gain * x.head<2>() + params_.image_offset;
  const double penetration = std::max(0.0, params_.contact_height - x(2));
  const Eigen::Vector2d omega =
      params_.tilt_gain.cwiseProduct(x.segment<2>(3)) + params_.tilt_offset;
  SensorReading s(7);
  s << mu(0), mu(1), 0.0, 0.0, params_.stiffness * penetration, omega(0), omega(1);
  return s;
}

FeatureVector ProbePlant::features(const SensorReading& s) const {
  if (s.size() != 7) throw ContractError("ProbePlant::features: reading must have 7 channels");
  FeatureVector y(5);
  y << s(0), s(1), s(4), s(5), s(6);
  return y;
}

std::optional<JacobianEstimate> ProbePlant::analytic_jacobian(const Configuration& x) const {
  JacobianEstimate J = JacobianEstimate::Zero(5, 6);
  J.block<2, 2>(0, 0) = params_.image_gain;
  if (x(2) < params_.contact_height) J(2, 2) = -params_.stiffness;
  J(3, 3) = params_.tilt_gain(0);
  J(4, 4) = params_.tilt_gain(1);
  return J;
}

RegressorModel ProbePlant::regressor() const {
  RegressorModel reg;
  reg.p = 12;
  reg.m = 5;
  reg.n = 6;
  reg.evaluate = [](const Configuration& x) {
    Matrix L = Matrix::Zero(5, 12);
    L(0, 2) = x(0);
    L(0, 3) = x(1);
    L(0, 6) = 1.0;
    L(1, 4) = x(0);
    L(1, 5) = x(1);
    L(1, 7) = 1.0;
    // phi = k z0 - k pz
    L(2, 0) = -x(2);
    L(2, 1) = 1.0;
    L(3, 8) = x(3);
    L(3, 10) = 1.0;
    L(4, 9) = x(4);
    L(4, 11) = 1.0;
    return L;
  };
  reg.evaluate_dx = [](const Configuration&, const ParameterVector& pi) {
    Matrix J = Matrix::Zero(5, 6);
    J(0, 0) = pi(2);
    J(0, 1) = pi(3);
    J(1, 0) = pi(4);
    J(1, 1) = pi(5);
    J(2, 2) = -pi(0);
    J(3, 3) = pi(8);
    J(4, 4) = pi(9);
    return J;
  };
  return reg;
}

ParameterVector ProbePlant::true_parameters() const {
  ParameterVector pi(12);
  pi << params_.stiffness, params_.stiffness * params_.contact_height, params_.image_gain(0, 0),
      params_.image_gain(0, 1), params_.image_gain(1, 0), params_.image_gain(1, 1),
      params_.image_offset(0), params_.image_offset(1), params_.tilt_gain(0), params_.tilt_gain(1),
      params_.tilt_offset(0), params_.tilt_offset(1);
  return pi;
}

}  // namespace sensorimotor
