#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cab/env.hpp"
#include "cab/policies.hpp"

namespace cab {

enum class SweepParameter { Beta, Popularity, Arms, Gamma };

/// "beta", "lambda", "K", "gamma".
std::string_view to_string(SweepParameter parameter) noexcept;
SweepParameter parse_sweep_parameter(std::string_view name);

struct Sweep {
  SweepParameter parameter = SweepParameter::Beta;
  std::vector<double> values;
};

/// One policy entry of an experiment. Unset lambda0 / c1 / a take the
/// experimental defaults for the environment they run in.
struct PolicySettings {
  std::string label;
  PolicyKind kind = PolicyKind::CabUcb;
  std::optional<double> lambda0;
  std::optional<double> c1;
  std::optional<double> a;
  double gamma = 0.1;
  double delta = 0.05;
  int fairx_samples = 50;
  bool use_theorem_constants = false;
  bool stale_hessian = false;
  bool randomized_greedy_order = false;

  static PolicySettings of(PolicyKind kind);
  PolicyConfig resolve(const SyntheticSpec& spec) const;
};

struct ExperimentConfig {
  SyntheticSpec env;
  std::vector<PolicySettings> policies;
  int n_seeds = 10;
  std::optional<Sweep> sweep;
  std::filesystem::path output_dir;
  bool emit_per_round = true;
  int jobs = 1;

  /// Default environment, all eight policies.
  static ExperimentConfig defaults();

  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

struct Stat {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Mean and standard error (sample standard deviation / sqrt(n)); the
/// standard error is 0 for a single sample.
Stat summarize(const std::vector<double>& samples);

struct RunResult {
  std::string policy;
  std::uint64_t seed = 0;
  std::optional<double> sweep_value;
  std::vector<RoundRecord> records;
};

struct AggregateRecord {
  std::optional<double> sweep_value;
  std::string policy;
  int n_seeds = 0;
  Stat cum_satisfaction;
  Stat cum_matches;
  Stat normalized_satisfaction;  // / satisfaction-oracle, paired by seed
  Stat normalized_matches;       // / match-oracle, paired by seed
  std::vector<double> selection_probability;
  std::vector<double> last10_expected_match_sum;
};

struct SuiteResult {
  std::optional<SweepParameter> sweep_parameter;
  std::vector<AggregateRecord> aggregates;
  /// Runs of the configured policies in (sweep value, seed, policy) order.
  std::vector<RunResult> runs;
};

/// Contexts, feedback and policy randomness for one seed come from
/// independent substreams keyed by role ("environment", "policy/<label>",
/// "feedback/<label>").
std::vector<RoundRecord> run_on_instance(const EnvironmentInstance& instance,
                                         const PolicySettings& policy, std::uint64_t seed);

/// Generates the instance for `seed` from config.env and plays `policy`
/// for config.env.rounds rounds. Failures are rethrown as RunError with the
/// round index.
std::vector<RoundRecord> run_single(const ExperimentConfig& config, const PolicySettings& policy,
                                    std::uint64_t seed);

/// Environment and policies of one sweep cell.
struct ExperimentCell {
  std::optional<double> sweep_value;
  SyntheticSpec env;
  std::vector<PolicySettings> policies;
};
std::vector<ExperimentCell> expand_cells(const ExperimentConfig& config);

/// Runs every (cell, seed, policy) combination plus the two oracle
/// references per (cell, seed), aggregates, and writes per_round.csv
/// (if emit_per_round), aggregate.csv and selection.csv into
/// config.output_dir when it is non-empty. Nothing is written if any run
/// fails. `fixed_instance`, when given, replaces instance generation.
SuiteResult run_suite(const ExperimentConfig& config,
                      const EnvironmentInstance* fixed_instance = nullptr);

void write_per_round_csv(const SuiteResult& result, std::ostream& out);
void write_aggregate_csv(const SuiteResult& result, std::ostream& out);
void write_selection_csv(const SuiteResult& result, std::ostream& out);
void write_suite_outputs(const ExperimentConfig& config, const SuiteResult& result,
                         const std::filesystem::path& dir);

}  // namespace cab
