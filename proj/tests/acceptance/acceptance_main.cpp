// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/LU>

#include "cab/config.hpp"
#include "cab/errors.hpp"
#include "cab/harness.hpp"
#include "cab/oracle.hpp"
#include "test_oracles.hpp"

namespace fs = std::filesystem;
using namespace cab;

namespace {

// Tolerances and thresholds.
constexpr int kSeeds = 10;
constexpr double kMinNormalizedUcb = 0.85;
constexpr double kMonotoneSlack = 0.02;
constexpr double kConcentrationFactor = 1.5;
constexpr double kBeta = 5.0;
constexpr int kOracleInstances = 200;
constexpr int kLinearDatasets = 50;
constexpr double kClosedFormTol = 1e-8;
constexpr double kGradientTol = 1e-8;
constexpr double kConsistencyTol = 0.3;
constexpr int kPdMatrices = 100;
constexpr double kMahalanobisTol = 1e-10;
constexpr int kSamplerDraws = 100000;
constexpr double kCovarianceRelTol = 0.05;
constexpr double kFigureBudgetSeconds = 30 * 60;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const AggregateRecord& agg(const SuiteResult& r, const std::string& policy,
                           std::optional<double> sweep = std::nullopt) {
  for (const auto& a : r.aggregates)
    if (a.policy == policy && a.sweep_value == sweep) return a;
  throw std::runtime_error("missing aggregate for " + policy);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentConfig figure(const std::string& panel, std::vector<PolicyKind> kinds = {}) {
  ExperimentConfig config = figure_config(panel);
  config.n_seeds = kSeeds;
  config.jobs = jobs();
  if (!kinds.empty()) {
    config.policies.clear();
    for (PolicyKind k : kinds) config.policies.push_back(PolicySettings::of(k));
  }
  return config;
}

Outcome figure_2a_satisfaction(const SuiteResult& r, double elapsed) {
  const double ucb = agg(r, "cab_ucb").cum_satisfaction.mean;
  const double fairx = agg(r, "fairx").cum_satisfaction.mean;
  const double mm = agg(r, "max_match").cum_satisfaction.mean;
  const double rnd = agg(r, "random").cum_satisfaction.mean;
  const bool ok = ucb > fairx && ucb > mm && mm < rnd && elapsed <= kFigureBudgetSeconds;
  return {ok, "cab_ucb=" + fmt(ucb) + " fairx=" + fmt(fairx) + " max_match=" + fmt(mm) +
                  " random=" + fmt(rnd) + " elapsed=" + fmt(elapsed) + "s"};
}

Outcome figure_2a_matches(const SuiteResult& r) {
  const double mm = agg(r, "max_match").cum_matches.mean;
  std::string best_other;
  double best = -1.0;
  for (const auto& a : r.aggregates) {
    if (a.policy == "max_match" || is_oracle(parse_policy_kind(a.policy))) continue;
    if (a.cum_matches.mean > best) {
      best = a.cum_matches.mean;
      best_other = a.policy;
    }
  }
  return {mm > best, "max_match=" + fmt(mm) + " best other=" + best_other + " " + fmt(best)};
}

Outcome figure_2b(const SuiteResult& r, const std::vector<double>& betas) {
  bool ok = true;
  std::string detail = "ucb/mm:";
  std::vector<double> mm;
  for (double b : betas) {
    const double u = agg(r, "cab_ucb", b).normalized_satisfaction.mean;
    const double m = agg(r, "max_match", b).normalized_satisfaction.mean;
    mm.push_back(m);
    ok = ok && u >= kMinNormalizedUcb;
    detail += " b=" + fmt(b) + ":" + fmt(u) + "/" + fmt(m);
  }
  int violations = 0;
  double worst = 0.0;
  for (std::size_t k = 1; k < mm.size(); ++k) {
    if (mm[k] < mm[k - 1]) {
      ++violations;
      worst = std::max(worst, mm[k - 1] - mm[k]);
    }
  }
  ok = ok && (violations == 0 || (violations == 1 && worst <= kMonotoneSlack));
  return {ok, detail + " mm_violations=" + std::to_string(violations)};
}

Outcome figure_2c(const SuiteResult& r) {
  auto gap = [&](double lam) {
    return agg(r, "cab_ucb", lam).normalized_satisfaction.mean -
           agg(r, "max_match", lam).normalized_satisfaction.mean;
  };
  const double g0 = gap(0.0);
  const double g1 = gap(1.0);
  return {g1 > g0, "gap(lambda=0)=" + fmt(g0) + " gap(lambda=1)=" + fmt(g1)};
}

Outcome figure_2de(const SuiteResult& r) {
  const auto& mm = agg(r, "max_match");
  const auto& ucb = agg(r, "cab_ucb");
  const auto top = static_cast<std::size_t>(
      std::max_element(mm.selection_probability.begin(), mm.selection_probability.end()) -
      mm.selection_probability.begin());
  const double p_mm = mm.selection_probability[top];
  const double p_ucb = *std::max_element(ucb.selection_probability.begin(), ucb.selection_probability.end());
  const double mm_sum = mm.last10_expected_match_sum[top];
  const double ucb_max =
      *std::max_element(ucb.last10_expected_match_sum.begin(), ucb.last10_expected_match_sum.end());
  const bool ok = p_mm >= kConcentrationFactor * p_ucb && mm_sum > kBeta && ucb_max <= kBeta + 1.0;
  return {ok, "max_match arm " + std::to_string(top) + " p=" + fmt(p_mm) + " last10 sum=" + fmt(mm_sum) +
                  "; cab_ucb max p=" + fmt(p_ucb) + " max last10 sum=" + fmt(ucb_max)};
}

Outcome oracle_property() {
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int identity_cases = 0;
  int below_half = 0;
  int identity_mismatch = 0;
  double worst_ratio = 1e300;
  for (int trial = 0; trial < kOracleInstances; ++trial) {
    const Index n = 1 + static_cast<Index>(gen() % 6);
    const Index k = 1 + static_cast<Index>(gen() % 3);
    Matrix v(n, k);
    for (Index i = 0; i < n; ++i)
      for (Index a = 0; a < k; ++a) v(i, a) = unif(gen);
    const bool identity = trial % 2 == 1;
    const auto sat = identity ? SatisfactionFunction::identity()
                              : SatisfactionFunction::capped_linear(0.25 + 2.0 * unif(gen));
    const WelfareInstance inst(v, sat);
    const double greedy = greedy_allocate(inst).objective;
    const double best = brute_force_allocate(inst).objective;
    if (best > 0) worst_ratio = std::min(worst_ratio, greedy / best);
    if (!(greedy >= 0.5 * best)) ++below_half;
    if (identity) {
      ++identity_cases;
      if (greedy != best) ++identity_mismatch;
    }
  }
  return {below_half == 0 && identity_mismatch == 0,
          std::to_string(kOracleInstances) + " instances, worst ratio " + fmt(worst_ratio) +
              ", below half " + std::to_string(below_half) + ", identity mismatches " +
              std::to_string(identity_mismatch) + "/" + std::to_string(identity_cases)};
}

Outcome mle_checks() {
  std::mt19937_64 gen(777);
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  double worst_closed = 0.0;
  for (int trial = 0; trial < kLinearDatasets; ++trial) {
    const Index d = 1 + trial % 5;
    const int n = 1 + (trial * 7) % 30;
    ObservationLog log(d);
    for (int k = 0; k < n; ++k) log.append(testing::random_vector(d, gen), testing::random_vector(1, gen)(0));
    const double lambda = unif(gen);
    const Vector theta = fit_regularized_mle(log, GlmModel::linear(), lambda);
    // Closed form (X^T X + lambda I)^{-1} X^T y through a Gauss-Jordan inverse.
    testing::Grid gram(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
    std::vector<double> xty(static_cast<std::size_t>(d), 0.0);
    for (Index s = 0; s < n; ++s)
      for (Index r = 0; r < d; ++r) {
        xty[static_cast<std::size_t>(r)] += log.features()(s, r) * log.outcomes()(s);
        for (Index c = 0; c < d; ++c)
          gram[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] += log.features()(s, r) * log.features()(s, c);
      }
    for (Index r = 0; r < d; ++r) gram[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] += lambda;
    const auto inv = testing::gauss_jordan_inverse(gram);
    for (Index r = 0; r < d; ++r) {
      double expected = 0.0;
      for (Index c = 0; c < d; ++c)
        expected += inv[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] * xty[static_cast<std::size_t>(c)];
      worst_closed = std::max(worst_closed, std::abs(theta(r) - expected));
    }
  }

  // Logistic: stationarity on varied datasets and consistency at n = 200.
  double worst_gradient = 0.0;
  const GlmModel model = GlmModel::logistic();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + trial % 6;
    const Vector theta_star = testing::random_vector(d, gen);
    ObservationLog log(d);
    for (int k = 0; k < 20 + 40 * trial; ++k) {
      const Vector x = testing::random_vector(d, gen);
      log.append(x, u01(gen) < testing::sigmoid(x.dot(theta_star)) ? 1.0 : 0.0);
    }
    const double ridge = 0.05 + 0.1 * trial;
    const Vector est = fit_regularized_mle(log, model, ridge);
    worst_gradient = std::max(worst_gradient, regularized_nll_gradient(log, model, est, ridge).norm());
  }
  const Index d = 2;
  std::mt19937_64 cgen(77);
  const Vector theta_star = testing::random_vector(d, cgen).normalized();
  ObservationLog log(d);
  for (int k = 0; k < 200; ++k) {
    const Vector x = testing::random_vector(d, cgen, 2.0);
    log.append(x, u01(cgen) < testing::sigmoid(x.dot(theta_star)) ? 1.0 : 0.0);
  }
  const double ridge = model.curvature_floor() * static_cast<double>(d);
  const Vector est = fit_regularized_mle(log, model, ridge);
  worst_gradient = std::max(worst_gradient, regularized_nll_gradient(log, model, est, ridge).norm());
  const double err = (est - theta_star).norm();
  const bool ok = worst_closed <= kClosedFormTol && worst_gradient <= kGradientTol && err <= kConsistencyTol;
  return {ok, "closed-form max error " + fmt(worst_closed) + ", max gradient " + fmt(worst_gradient) +
                  ", consistency error " + fmt(err)};
}

Outcome numerics_checks() {
  std::mt19937_64 gen(31337);
  double worst = 0.0;
  for (int trial = 0; trial < kPdMatrices; ++trial) {
    const Index d = 1 + trial % 8;
    const Matrix m = testing::random_pd_matrix(d, static_cast<double>(d), gen);
    const Vector x = testing::random_vector(d, gen);
    const double expected =
        std::sqrt(testing::quadratic_form(testing::gauss_jordan_inverse(testing::to_grid(m)), testing::to_std(x)));
    worst = std::max(worst, std::abs(mahalanobis_inv_norm(PsdMatrix(m), x) - expected));
  }
  Matrix hm = Matrix::Zero(2, 2);
  hm.diagonal() << 4.0, 1.0;
  const PsdMatrix h(hm);
  const double a = 2.0;
  Rng rng(99);
  Vector sum = Vector::Zero(2);
  Matrix outer = Matrix::Zero(2, 2);
  for (int n = 0; n < kSamplerDraws; ++n) {
    const Vector z = sample_scaled_inverse_gaussian(h, a, rng);
    sum += z;
    outer += z * z.transpose();
  }
  const Vector mean = sum / kSamplerDraws;
  const Matrix cov = (outer - kSamplerDraws * mean * mean.transpose()) / (kSamplerDraws - 1);
  const Matrix target = a * a * hm.inverse();
  const double rel = (cov - target).norm() / target.norm();
  return {worst <= kMahalanobisTol && rel <= kCovarianceRelTol,
          "mahalanobis max error " + fmt(worst) + ", covariance relative error " + fmt(rel)};
}

Outcome regret_trend(const SuiteResult& r) {
  // Per seed: satisfaction-oracle f minus CAB-UCB f, round by round.
  std::map<std::uint64_t, const RunResult*> ucb;
  std::map<std::uint64_t, const RunResult*> ref;
  for (const RunResult& run : r.runs) {
    if (run.policy == "cab_ucb") ucb[run.seed] = &run;
    if (run.policy == "oracle_satisfaction") ref[run.seed] = &run;
  }
  double early = 0.0, late = 0.0;
  int early_n = 0, late_n = 0;
  for (const auto& [seed, run] : ucb) {
    const RunResult* oracle = ref.at(seed);
    for (std::size_t t = 0; t < run->records.size(); ++t) {
      const double gap = oracle->records[t].satisfaction - run->records[t].satisfaction;
      const int round = run->records[t].round;
      if (round >= 1 && round <= 100) {
        early += gap;
        ++early_n;
      } else if (round >= 401 && round <= 500) {
        late += gap;
        ++late_n;
      }
    }
  }
  early /= std::max(early_n, 1);
  late /= std::max(late_n, 1);
  return {late_n > 0 && early_n > 0 && late < early,
          "mean gap rounds 1-100 " + fmt(early) + ", rounds 401-500 " + fmt(late)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& cli, const fs::path& workdir) {
  std::vector<fs::path> outs = {workdir / "det_a", workdir / "det_b"};
  for (const fs::path& out : outs) {
    fs::remove_all(out);
    const std::string cmd = "\"" + cli + "\" figure 2a --seeds 3 --out \"" + out.string() + "\" > \"" +
                            (out.string() + ".log") + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {false, "command failed (" + std::to_string(rc) + "): " + cmd};
  }
  std::string detail;
  bool ok = true;
  for (const char* name : {"per_round.csv", "aggregate.csv", "selection.csv"}) {
    const std::string a = slurp(outs[0] / name);
    const std::string b = slurp(outs[1] / name);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += std::string(name) + (same ? " identical (" + std::to_string(a.size()) + " bytes) " : " DIFFERS ");
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli;
  std::string workdir = "acceptance_work";
  app.add_option("--cli", cli, "Path to the cab executable")->required();
  app.add_option("--workdir", workdir, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  try {
    auto start = std::chrono::steady_clock::now();
    const SuiteResult fig2a = run_suite(figure("2a"));
    const double elapsed_2a = seconds_since(start);
    report(1, "figure 2a satisfaction ordering", figure_2a_satisfaction(fig2a, elapsed_2a));
    report(2, "figure 2a matches ordering", figure_2a_matches(fig2a));

    const ExperimentConfig b = figure("2b", {PolicyKind::CabUcb, PolicyKind::MaxMatch});
    report(3, "figure 2b beta sweep", figure_2b(run_suite(b), b.sweep->values));

    report(4, "figure 2c popularity sweep",
           figure_2c(run_suite(figure("2c", {PolicyKind::CabUcb, PolicyKind::MaxMatch}))));

    report(5, "figures 2d/2e concentration at lambda=1",
           figure_2de(run_suite(figure("2d", {PolicyKind::CabUcb, PolicyKind::MaxMatch}))));

    report(6, "greedy oracle approximation", oracle_property());
    report(7, "regularized MLE", mle_checks());
    report(8, "numerics", numerics_checks());
    report(9, "regret trend", regret_trend(fig2a));
    report(10, "determinism of figure 2a CSVs", determinism(cli, workdir));
  } catch (const std::exception& e) {
    std::cout << "FAIL aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
