#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cab/harness.hpp"

namespace cab {

/// Reads an INI-style experiment file:
///
///   [experiment]   seeds, seed, output_dir, emit_per_round, jobs,
///                  sweep, sweep_values
///   [environment]  users, arms, dim, rounds, popularity, beta, family,
///                  normalize_features, static_contexts, certified_radius
///   [policy.<label>]  kind (defaults to <label>), lambda0, c1, a, gamma,
///                     delta, fairx_samples, use_theorem_constants,
///                     stale_hessian, randomized_greedy_order
///
/// Sections and keys are optional; an absent policy list means all eight
/// policies. Unknown sections or keys are rejected with ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one "section.key=value" override, e.g. "environment.beta=2",
/// "experiment.seeds=3", "policy.cab_ucb.c1=1.5" or "policies.lambda0=2"
/// (every policy).
void apply_override(ExperimentConfig& config, std::string_view assignment);

/// Canned experiment for panel "2a" .. "2e".
ExperimentConfig figure_config(std::string_view panel);

std::vector<double> parse_number_list(std::string_view text);

}  // namespace cab
