#include "sensorimotor/episode.hpp"

namespace sensorimotor {

const char* to_string(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::Converged: return "converged";
    case EpisodeStatus::MaxSteps: return "max-steps";
    case EpisodeStatus::Stalled: return "stalled";
  }
  return "?";
}

EpisodeStatus parse_status(const std::string& name) {
  if (name == "converged") return EpisodeStatus::Converged;
  if (name == "max-steps") return EpisodeStatus::MaxSteps;
  if (name == "stalled") return EpisodeStatus::Stalled;
  throw InvalidInput("unknown episode status '" + name + "'");
}

void EpisodeSettings::validate() const {
  gains.validate();
  if (!(feature_tol > 0.0)) throw InvalidInput("episode: feature_tol must be > 0");
  if (max_steps < 1) throw InvalidInput("episode: max_steps must be >= 1");
  if (stall_window < 1) throw InvalidInput("episode: stall_window must be >= 1");
  if (!target.allFinite()) throw InvalidInput("episode: non-finite target");
}

TrajectoryLog run_episode(const Plant& plant, JacobianSource& source, const Configuration& x0,
                          const EpisodeSettings& settings) {
  settings.validate();
  if (settings.target.size() != plant.m()) {
    throw ContractError("run_episode: target has length " + std::to_string(settings.target.size()) +
                        ", plant has m = " + std::to_string(plant.m()));
  }
  TrajectoryLog log;
  log.n = plant.n();
  log.m = plant.m();

  Configuration x = x0;
  FeatureVector y = plant.features(plant.observe(x, 0));
  bool boundary = false;
  JacobianEstimate last_A = JacobianEstimate::Zero(plant.m(), plant.n());
  std::vector<double> history;

  auto terminal_row = [&](int t, double err, EpisodeStatus status) {
    const MotorCommand zero = MotorCommand::Zero(plant.n());
    log.rows.push_back({t, x, zero, y, err, cost_J(last_A, zero, y, settings.target, settings.gains),
                        source.diagnostic(), last_A, boundary});
    log.status = status;
    log.steps = t;
  };

  for (int t = 0;; ++t) {
    const double err = (y - settings.target).norm();
    history.push_back(err);
    if (err <= settings.feature_tol) {
      terminal_row(t, err, EpisodeStatus::Converged);
      break;
    }
    if (t >= settings.max_steps) {
      terminal_row(t, err, EpisodeStatus::MaxSteps);
      break;
    }
    if (t >= settings.stall_window &&
        history[static_cast<std::size_t>(t - settings.stall_window)] - err < settings.stall_tol) {
      log.message = "error decreased by less than the stall tolerance over the stall window";
      terminal_row(t, err, EpisodeStatus::Stalled);
      break;
    }

    MotorCommand u;
    try {
      last_A = source.jacobian(x);
      u = servo_command(last_A, y, settings.target, settings.gains);
    } catch (const Error& e) {
      log.message = e.what();
      terminal_row(t, err, EpisodeStatus::Stalled);
      break;
    }
    log.rows.push_back({t, x, u, y, err, cost_J(last_A, u, y, settings.target, settings.gains),
                        source.diagnostic(), last_A, boundary});

    const StepResult next = step(plant, x, u, static_cast<std::uint64_t>(t) + 1);
    const ObservationDU obs{next.y - y, next.x - x};
    try {
      source.observe(x, obs);
    } catch (const Error& e) {
      x = next.x;
      y = next.y;
      boundary = next.boundary;
      log.message = e.what();
      terminal_row(t + 1, (y - settings.target).norm(), EpisodeStatus::Stalled);
      break;
    }
    x = next.x;
    y = next.y;
    boundary = next.boundary;
  }
  return log;
}

}  // namespace sensorimotor
