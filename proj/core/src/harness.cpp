#include "cab/harness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "cab/csv.hpp"
#include "cab/errors.hpp"

namespace cab {

std::string_view to_string(SweepParameter parameter) noexcept {
  switch (parameter) {
    case SweepParameter::Beta:
      return "beta";
    case SweepParameter::Popularity:
      return "lambda";
    case SweepParameter::Arms:
      return "K";
    case SweepParameter::Gamma:
      return "gamma";
  }
  return "unknown";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  for (SweepParameter p : {SweepParameter::Beta, SweepParameter::Popularity, SweepParameter::Arms,
                           SweepParameter::Gamma}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown sweep parameter '" + std::string(name) +
                    "' (expected beta, lambda, K or gamma)");
}

PolicySettings PolicySettings::of(PolicyKind kind) {
  PolicySettings settings;
  settings.kind = kind;
  settings.label = std::string(to_string(kind));
  return settings;
}

PolicyConfig PolicySettings::resolve(const SyntheticSpec& spec) const {
  PolicyConfig config = PolicyConfig::experimental_defaults(spec.dim, spec.users);
  if (lambda0) config.lambda0 = *lambda0;
  if (c1) config.c1 = *c1;
  if (a) config.a = *a;
  config.gamma = gamma;
  config.delta = delta;
  config.fairx_samples = fairx_samples;
  config.use_theorem_constants = use_theorem_constants;
  config.stale_hessian = stale_hessian;
  config.randomized_greedy_order = randomized_greedy_order;
  if (use_theorem_constants) {
    config = with_theorem_constants(config, spec.model(), spec.satisfaction(), spec.radius(),
                                    spec.dim, spec.users, spec.rounds);
  }
  config.validate();
  return config;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig config;
  for (PolicyKind kind : all_policy_kinds()) config.policies.push_back(PolicySettings::of(kind));
  return config;
}

void ExperimentConfig::validate() const {
  if (n_seeds < 1) throw ConfigError("number of seeds must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (policies.empty()) throw ConfigError("no policies configured");
  for (std::size_t p = 0; p < policies.size(); ++p) {
    if (policies[p].label.empty()) throw ConfigError("policy label must be non-empty");
    for (std::size_t q = 0; q < p; ++q) {
      if (policies[p].label == policies[q].label) {
        throw ConfigError("duplicate policy label '" + policies[p].label + "'");
      }
    }
  }
  if (sweep) {
    if (sweep->values.empty()) throw ConfigError("sweep has no values");
    for (double v : sweep->values) {
      if (sweep->parameter == SweepParameter::Arms && (v < 1.0 || v != std::floor(v))) {
        throw ConfigError("K sweep values must be positive integers");
      }
    }
  }
  try {
    for (const ExperimentCell& cell : expand_cells(*this)) {
      cell.env.validate();
      for (const PolicySettings& p : cell.policies) p.resolve(cell.env);
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

Stat summarize(const std::vector<double>& samples) {
  Stat stat;
  if (samples.empty()) return stat;
  double total = 0.0;
  for (double v : samples) total += v;
  stat.mean = total / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - stat.mean) * (v - stat.mean);
    const double n = static_cast<double>(samples.size());
    stat.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return stat;
}

std::vector<RoundRecord> run_on_instance(const EnvironmentInstance& instance,
                                         const PolicySettings& policy, std::uint64_t seed) {
  const SyntheticSpec& spec = instance.spec;
  const GlmModel model = spec.model();
  const SatisfactionFunction sat = spec.satisfaction();
  auto learner =
      make_policy(policy.kind, policy.resolve(spec), model, sat, spec.dim, instance.theta_star);
  Rng policy_rng = make_stream(seed, "policy/" + policy.label);
  Rng feedback_rng = make_stream(seed, "feedback/" + policy.label);

  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(spec.rounds));
  for (Index t = 1; t <= spec.rounds; ++t) {
    const int round = static_cast<int>(t);
    try {
      const ContextSlate& slate = instance.slate(t);
      const Allocation alloc = learner->select(slate, policy_rng);
      const Feedback feedback =
          sample_feedback(slate, alloc, instance.theta_star, model, feedback_rng);
      learner->update(slate, alloc, feedback);
      records.push_back(
          score_round(round, policy.label, slate, alloc, feedback, instance.theta_star, model, sat));
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError("policy '" + policy.label + "' seed " + std::to_string(seed) + " round " +
                         std::to_string(round) + ": " + e.what(),
                     round);
    }
  }
  return records;
}

std::vector<RoundRecord> run_single(const ExperimentConfig& config, const PolicySettings& policy,
                                    std::uint64_t seed) {
  Rng env_rng = make_stream(seed, "environment");
  const EnvironmentInstance instance = generate_instance(config.env, env_rng);
  return run_on_instance(instance, policy, seed);
}

std::vector<ExperimentCell> expand_cells(const ExperimentConfig& config) {
  if (!config.sweep) return {ExperimentCell{std::nullopt, config.env, config.policies}};
  std::vector<ExperimentCell> cells;
  for (double v : config.sweep->values) {
    ExperimentCell cell{v, config.env, config.policies};
    switch (config.sweep->parameter) {
      case SweepParameter::Beta:
        cell.env.beta = v;
        break;
      case SweepParameter::Popularity:
        cell.env.popularity = v;
        break;
      case SweepParameter::Arms:
        cell.env.arms = static_cast<Index>(v);
        break;
      case SweepParameter::Gamma:
        for (PolicySettings& p : cell.policies) p.gamma = v;
        break;
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

namespace {

struct TaskOutput {
  std::vector<RunResult> runs;  // configured policies
  RunResult satisfaction_reference;
  RunResult match_reference;
};

double cumulative(const std::vector<RoundRecord>& records, double RoundRecord::*field) {
  double total = 0.0;
  for (const RoundRecord& r : records) total += r.*field;
  return total;
}

AggregateRecord aggregate(const std::vector<const TaskOutput*>& seeds, std::size_t policy_index) {
  AggregateRecord agg;
  const RunResult& first = seeds.front()->runs[policy_index];
  agg.sweep_value = first.sweep_value;
  agg.policy = first.policy;
  agg.n_seeds = static_cast<int>(seeds.size());

  const std::size_t arms = first.records.front().selection_counts.size();
  std::vector<double> sat, matches, norm_sat, norm_matches;
  std::vector<double> counts(arms, 0.0);
  std::vector<double> last10(arms, 0.0);
  double assignments = 0.0;
  double last10_rounds = 0.0;
  for (const TaskOutput* task : seeds) {
    const RunResult& run = task->runs[policy_index];
    const double s = cumulative(run.records, &RoundRecord::satisfaction);
    const double m = cumulative(run.records, &RoundRecord::matches);
    sat.push_back(s);
    matches.push_back(m);
    norm_sat.push_back(s / cumulative(task->satisfaction_reference.records,
                                      &RoundRecord::satisfaction));
    norm_matches.push_back(m / cumulative(task->match_reference.records, &RoundRecord::matches));
    for (const RoundRecord& r : run.records) {
      for (std::size_t a = 0; a < arms; ++a) {
        counts[a] += r.selection_counts[a];
        assignments += r.selection_counts[a];
      }
    }
    const std::size_t tail = std::min<std::size_t>(10, run.records.size());
    for (std::size_t k = run.records.size() - tail; k < run.records.size(); ++k) {
      for (std::size_t a = 0; a < arms; ++a) {
        last10[a] += run.records[k].per_arm_expected_match_sum[a];
      }
      last10_rounds += 1.0;
    }
  }
  agg.cum_satisfaction = summarize(sat);
  agg.cum_matches = summarize(matches);
  agg.normalized_satisfaction = summarize(norm_sat);
  agg.normalized_matches = summarize(norm_matches);
  agg.selection_probability.resize(arms);
  agg.last10_expected_match_sum.resize(arms);
  for (std::size_t a = 0; a < arms; ++a) {
    agg.selection_probability[a] = counts[a] / assignments;
    agg.last10_expected_match_sum[a] = last10[a] / last10_rounds;
  }
  return agg;
}

void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error("output directory '" + dir.string() + "' cannot be created");
  }
  const auto probe = dir / ".cab_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error("output directory '" + dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

std::string sweep_text(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

}  // namespace

SuiteResult run_suite(const ExperimentConfig& config, const EnvironmentInstance* fixed_instance) {
  config.validate();
  if (fixed_instance && config.sweep) {
    throw ConfigError("a replayed instance cannot be combined with a sweep");
  }
  if (!config.output_dir.empty()) ensure_writable_dir(config.output_dir);

  std::vector<ExperimentCell> cells;
  if (fixed_instance) {
    cells.push_back(ExperimentCell{std::nullopt, fixed_instance->spec, config.policies});
  } else {
    cells = expand_cells(config);
  }

  const std::size_t n_seeds = static_cast<std::size_t>(config.n_seeds);
  const std::size_t n_tasks = cells.size() * n_seeds;
  std::vector<TaskOutput> outputs(n_tasks);
  const PolicySettings sat_reference = PolicySettings::of(PolicyKind::OracleSatisfaction);
  const PolicySettings match_reference = PolicySettings::of(PolicyKind::OracleMatch);

  auto run_task = [&](std::size_t task) {
    const ExperimentCell& cell = cells[task / n_seeds];
    const std::uint64_t seed = config.env.seed + task % n_seeds;
    EnvironmentInstance generated;
    const EnvironmentInstance* instance = fixed_instance;
    if (!instance) {
      Rng env_rng = make_stream(seed, "environment");
      generated = generate_instance(cell.env, env_rng);
      instance = &generated;
    }
    TaskOutput& out = outputs[task];
    for (const PolicySettings& policy : cell.policies) {
      out.runs.push_back(
          RunResult{policy.label, seed, cell.sweep_value, run_on_instance(*instance, policy, seed)});
    }
    out.satisfaction_reference = RunResult{sat_reference.label, seed, cell.sweep_value,
                                           run_on_instance(*instance, sat_reference, seed)};
    out.match_reference = RunResult{match_reference.label, seed, cell.sweep_value,
                                    run_on_instance(*instance, match_reference, seed)};
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_tasks) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        run_task(task);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), n_tasks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t k = 0; k < n_threads; ++k) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  SuiteResult result;
  if (config.sweep) result.sweep_parameter = config.sweep->parameter;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<const TaskOutput*> seeds;
    for (std::size_t s = 0; s < n_seeds; ++s) seeds.push_back(&outputs[c * n_seeds + s]);
    for (std::size_t p = 0; p < cells[c].policies.size(); ++p) {
      result.aggregates.push_back(aggregate(seeds, p));
    }
    for (const TaskOutput* task : seeds) {
      for (const RunResult& run : task->runs) result.runs.push_back(run);
    }
  }

  if (!config.output_dir.empty()) write_suite_outputs(config, result, config.output_dir);
  return result;
}

void write_per_round_csv(const SuiteResult& result, std::ostream& out) {
  CsvWriter csv(out);
  for (auto h : {"run_id", "seed", "policy", "sweep_value", "round", "satisfaction",
                 "cum_satisfaction", "matches", "cum_matches"}) {
    csv.field(std::string_view(h));
  }
  csv.end_row();
  std::int64_t run_id = 0;
  for (const RunResult& run : result.runs) {
    double cum_sat = 0.0;
    double cum_matches = 0.0;
    const std::string sweep = sweep_text(run.sweep_value);
    for (const RoundRecord& r : run.records) {
      cum_sat += r.satisfaction;
      cum_matches += r.matches;
      csv.field(run_id)
          .field(run.seed)
          .field(std::string_view(run.policy))
          .field(std::string_view(sweep))
          .field(r.round)
          .field(r.satisfaction)
          .field(cum_sat)
          .field(r.matches)
          .field(cum_matches);
      csv.end_row();
    }
    ++run_id;
  }
}

void write_aggregate_csv(const SuiteResult& result, std::ostream& out) {
  CsvWriter csv(out);
  for (auto h : {"sweep_param", "sweep_value", "policy", "n_seeds", "cum_satisfaction_mean",
                 "cum_satisfaction_se", "cum_matches_mean", "cum_matches_se",
                 "normalized_satisfaction_mean", "normalized_satisfaction_se",
                 "normalized_matches_mean", "normalized_matches_se"}) {
    csv.field(std::string_view(h));
  }
  csv.end_row();
  const std::string_view param =
      result.sweep_parameter ? to_string(*result.sweep_parameter) : std::string_view("none");
  for (const AggregateRecord& agg : result.aggregates) {
    const std::string sweep = sweep_text(agg.sweep_value);
    csv.field(param)
        .field(std::string_view(sweep))
        .field(std::string_view(agg.policy))
        .field(agg.n_seeds)
        .field(agg.cum_satisfaction.mean)
        .field(agg.cum_satisfaction.standard_error)
        .field(agg.cum_matches.mean)
        .field(agg.cum_matches.standard_error)
        .field(agg.normalized_satisfaction.mean)
        .field(agg.normalized_satisfaction.standard_error)
        .field(agg.normalized_matches.mean)
        .field(agg.normalized_matches.standard_error);
    csv.end_row();
  }
}

void write_selection_csv(const SuiteResult& result, std::ostream& out) {
  CsvWriter csv(out);
  for (auto h : {"sweep_value", "policy", "arm", "probability", "last10_expected_match_sum"}) {
    csv.field(std::string_view(h));
  }
  csv.end_row();
  for (const AggregateRecord& agg : result.aggregates) {
    const std::string sweep = sweep_text(agg.sweep_value);
    for (std::size_t a = 0; a < agg.selection_probability.size(); ++a) {
      csv.field(std::string_view(sweep))
          .field(std::string_view(agg.policy))
          .field(static_cast<std::int64_t>(a))
          .field(agg.selection_probability[a])
          .field(agg.last10_expected_match_sum[a]);
      csv.end_row();
    }
  }
}

void write_suite_outputs(const ExperimentConfig& config, const SuiteResult& result,
                         const std::filesystem::path& dir) {
  ensure_writable_dir(dir);
  auto write = [&](const char* name, auto&& writer) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    writer(result, out);
    if (!out) throw Error("failed writing '" + path.string() + "'");
  };
  if (config.emit_per_round) write("per_round.csv", write_per_round_csv);
  write("aggregate.csv", write_aggregate_csv);
  write("selection.csv", write_selection_csv);
}

}  // namespace cab
