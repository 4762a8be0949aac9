#include "sensorimotor/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "sensorimotor/config.hpp"
#include "sensorimotor/text_io.hpp"

namespace sensorimotor {

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config, "JSON experiment configuration")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", flags.seed, "Overrides the configuration seed");
  sub->add_option("--out", flags.out, "Output path");
}

ExperimentConfig resolve(const CommonFlags& flags) {
  ExperimentConfig cfg = load_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out.empty()) cfg.output = flags.out;
  return cfg;
}

std::string output_or(const ExperimentConfig& cfg, const char* fallback) {
  return cfg.output.empty() ? std::string(fallback) : cfg.output;
}

void save_parameters(const std::string& path, const ParameterVector& params) {
  std::ofstream file(path);
  if (!file) throw FileError(path, "cannot open parameter file for writing");
  file << "structured-parameters 1\n" << params.size() << '\n';
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    file << (i ? " " : "") << format_double(params(i));
  }
  file << '\n';
  if (!file) throw FileError(path, "failed writing parameter file");
}

std::string summary(const TrajectoryLog& log) {
  char line[128];
  std::snprintf(line, sizeof(line), "%s steps=%d err=%.6e", to_string(log.status), log.steps,
                log.final_error());
  return line;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive sensorimotor servo experiments", "smctl"};
  app.require_subcommand(1);

  CommonFlags collect_flags;
  CLI::App* collect = app.add_subcommand("collect", "Collect an excitation dataset to CSV");
  add_common(collect, collect_flags);
  std::string policy;
  std::optional<int> T;
  std::optional<double> amplitude;
  collect->add_option("--policy", policy, "random-walk, axis-probes or grid-sweep");
  collect->add_option("--T", T, "Number of commands")->check(CLI::PositiveNumber);
  collect->add_option("--amplitude", amplitude, "Command amplitude")->check(CLI::PositiveNumber);

  CommonFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "Train an offline estimator and write a snapshot");
  add_common(train, train_flags);
  std::string data_path;
  train->add_option("--data", data_path, "Dataset CSV from `collect`; collected afresh when absent")
      ->check(CLI::ExistingFile);

  CommonFlags servo_flags;
  CLI::App* servo = app.add_subcommand("servo", "Run one closed-loop episode and write its CSV log");
  add_common(servo, servo_flags);
  bool servo_online = false;
  servo->add_flag("--online", servo_online, "Refine the winning unit every step (distributed)");

  CommonFlags compare_flags;
  CLI::App* compare = app.add_subcommand("compare", "Run every estimator on one scenario");
  add_common(compare, compare_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (collect->parsed()) {
      ExperimentConfig cfg = resolve(collect_flags);
      const auto plant = make_plant(cfg.plant, cfg.seed);
      DatasetRequest req = dataset_request(cfg, *plant);
      if (!policy.empty()) req.policy = parse_policy(policy);
      if (T) req.T = *T;
      if (amplitude) req.amplitude = *amplitude;
      if (req.policy == ExcitationPolicy::GridSweep && req.lattice.empty()) {
        req.lattice.assign(static_cast<std::size_t>(plant->n()), 3);
      }
      const Dataset data = collect_dataset(*plant, req);
      const std::string path = output_or(cfg, "dataset.csv");
      save_dataset(path, data);
      out << "collected " << data.transitions.size() << " transitions (" << data.boundary_hits
          << " boundary hits) -> " << path << '\n';
    } else if (train->parsed()) {
      ExperimentConfig cfg = resolve(train_flags);
      const auto plant = make_plant(cfg.plant, cfg.seed);
      const Dataset data =
          data_path.empty() ? collect_dataset(*plant, dataset_request(cfg, *plant)) : load_dataset(data_path);
      if (cfg.estimator.id == "distributed") {
        const NetworkTraining trained = train_distributed(cfg, *plant, data);
        const std::string path = output_or(cfg, "network.txt");
        save_network(path, trained.network);
        out << "trained " << trained.network.units.size() << " units ("
            << trained.empty_units.size() << " with empty neighbourhoods) -> " << path << '\n';
      } else if (cfg.estimator.id == "structured") {
        const FitResult fitted = train_structured(cfg, *plant, data);
        const std::string path = output_or(cfg, "parameters.txt");
        save_parameters(path, fitted.params);
        out << "fitted " << fitted.params.size() << " parameters in " << fitted.iterations
            << " iterations (grad " << format_double(fitted.grad_norm) << ") -> " << path << '\n';
      } else {
        throw InvalidInput("estimator '" + cfg.estimator.id + "' has no offline training stage");
      }
    } else if (servo->parsed()) {
      ExperimentConfig cfg = resolve(servo_flags);
      if (servo_online) cfg.estimator.online = true;
      const TrajectoryLog log = run_servo_episode(cfg);
      export_csv(log, output_or(cfg, "trajectory.csv"));
      out << summary(log) << '\n';
      if (!log.message.empty()) err << "note: " << log.message << '\n';
    } else if (compare->parsed()) {
      const ExperimentConfig cfg = resolve(compare_flags);
      const std::string table = format_compare_table(compare_estimators(cfg));
      out << table;
      if (!cfg.output.empty()) {
        std::ofstream file(cfg.output, std::ios::binary);
        if (!file) throw FileError(cfg.output, "cannot open table for writing");
        file << table;
        if (!file) throw FileError(cfg.output, "failed writing table");
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace sensorimotor
