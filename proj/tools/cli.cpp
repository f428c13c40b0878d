#include "cli.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cab/config.hpp"
#include "cab/errors.hpp"
#include "cab/harness.hpp"

namespace cab {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<std::string> policies;
  std::vector<std::string> overrides;
  bool no_per_round = false;
  bool per_round = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Base seed; run s uses seed + s");
  cmd->add_option("--seeds", flags.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  cmd->add_option("--out", flags.out, "Output directory for CSV files");
  cmd->add_option("--jobs", flags.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  cmd->add_option("--policies", flags.policies,
                  "Comma-separated policy kinds to run (default: all eight)");
  cmd->add_option("--set", flags.overrides, "Config override section.key=value (repeatable)");
  cmd->add_flag("--per-round", flags.per_round, "Write per_round.csv");
  cmd->add_flag("--no-per-round", flags.no_per_round, "Skip per_round.csv");
}

void apply_common_flags(ExperimentConfig& config, const CommonFlags& flags) {
  if (flags.policies) {
    config.policies.clear();
    std::string_view rest = *flags.policies;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string name(rest.substr(0, comma));
      try {
        config.policies.push_back(PolicySettings::of(parse_policy_kind(name)));
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  for (const std::string& o : flags.overrides) apply_override(config, o);
  if (flags.seed) config.env.seed = *flags.seed;
  if (flags.seeds) config.n_seeds = *flags.seeds;
  if (flags.out) config.output_dir = *flags.out;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (flags.per_round) config.emit_per_round = true;
  if (flags.no_per_round) config.emit_per_round = false;
  if (config.output_dir.empty()) config.output_dir = "results";
}

void print_summary(const SuiteResult& result, const ExperimentConfig& config) {
  for (const AggregateRecord& agg : result.aggregates) {
    std::cout << agg.policy;
    if (agg.sweep_value) {
      std::cout << " [" << to_string(*result.sweep_parameter) << "=" << *agg.sweep_value << "]";
    }
    std::cout << "  satisfaction " << agg.cum_satisfaction.mean << " (norm "
              << agg.normalized_satisfaction.mean << ")  matches " << agg.cum_matches.mean
              << " (norm " << agg.normalized_matches.mean << ")\n";
  }
  std::cout << "wrote results to " << config.output_dir.string() << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Combinatorial allocation bandit experiments"};
  app.require_subcommand(1);

  CommonFlags flags;

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Experiment config file")->required();
  add_common_flags(run, flags);

  std::string sweep_param;
  std::string sweep_values;
  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over a list of values");
  sweep->add_option("--param", sweep_param, "beta, lambda, K or gamma")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--config", sweep_config, "Base config file (default settings otherwise)");
  add_common_flags(sweep, flags);

  std::string panel;
  auto* figure = app.add_subcommand("figure", "Run a canned figure experiment");
  figure->add_option("panel", panel, "2a, 2b, 2c, 2d or 2e")->required();
  add_common_flags(figure, flags);

  std::string instance_path;
  std::string replay_config;
  auto* replay = app.add_subcommand("replay", "Run policies on a saved environment instance");
  replay->add_option("--instance", instance_path, "Instance JSON file")->required();
  replay->add_option("--config", replay_config, "Config file for policies and seeds");
  add_common_flags(replay, flags);

  std::string export_path;
  std::string export_config;
  auto* export_cmd =
      app.add_subcommand("export-instance", "Write the generated instance for --seed as JSON");
  export_cmd->add_option("--file", export_path, "Destination JSON file")->required();
  export_cmd->add_option("--config", export_config, "Config file for the environment");
  add_common_flags(export_cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  ExperimentConfig config;
  EnvironmentInstance replayed;
  const EnvironmentInstance* fixed = nullptr;
  try {
    if (*run) {
      config = load_config(config_path);
    } else if (*sweep) {
      config = sweep_config.empty() ? ExperimentConfig::defaults() : load_config(sweep_config);
      config.sweep = Sweep{parse_sweep_parameter(sweep_param), parse_number_list(sweep_values)};
      if (sweep_config.empty()) config.emit_per_round = false;
    } else if (*figure) {
      config = figure_config(panel);
    } else if (*replay) {
      config = replay_config.empty() ? ExperimentConfig::defaults() : load_config(replay_config);
      replayed = load_instance(instance_path);
      config.env = replayed.spec;
      config.sweep.reset();
      fixed = &replayed;
    } else if (*export_cmd) {
      config = export_config.empty() ? ExperimentConfig::defaults() : load_config(export_config);
    }
    apply_common_flags(config, flags);
    config.validate();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*export_cmd) {
      Rng rng = make_stream(config.env.seed, "environment");
      save_instance(generate_instance(config.env, rng), export_path);
      std::cout << "wrote instance for seed " << config.env.seed << " to " << export_path << "\n";
      return kExitOk;
    }
    const SuiteResult result = run_suite(config, fixed);
    print_summary(result, config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace cab
