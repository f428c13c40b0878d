#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "cab/glm.hpp"
#include "cab/oracle.hpp"

namespace cab {

enum class PolicyKind {
  CabUcb,
  CabTsEpsilon,
  CabTsTheta,
  MaxMatch,
  FairX,
  Random,
  OracleSatisfaction,
  OracleMatch,
};

std::string_view to_string(PolicyKind kind) noexcept;
PolicyKind parse_policy_kind(std::string_view name);

/// Every kind, in canonical reporting order.
std::span<const PolicyKind> all_policy_kinds() noexcept;

/// Kinds that fit a GLM and keep a PolicyState.
bool is_learning(PolicyKind kind) noexcept;
/// Kinds that sample from the Laplace precision H.
bool uses_laplace_precision(PolicyKind kind) noexcept;
/// Kinds that need the true parameter.
bool is_oracle(PolicyKind kind) noexcept;

struct PolicyConfig {
  double lambda0 = 5.0;       // ridge seed of V
  double c1 = 2.2360679774997896;  // UCB width (CAB-UCB, Max-match, theorem mode)
  double a = 15.811388300841896;   // TS perturbation scale
  double gamma = 0.1;         // FairX confidence radius^2
  double delta = 0.05;        // theorem-mode confidence level
  int fairx_samples = 50;
  bool use_theorem_constants = false;
  /// Update H incrementally with the estimate current at insertion time
  /// instead of recomputing it over the whole log.
  bool stale_hessian = false;
  bool randomized_greedy_order = false;

  /// lambda0 = d, c1 = sqrt(d), a = sqrt(d N).
  static PolicyConfig experimental_defaults(Index dim, Index users);

  /// Throws ParameterError unless lambda0, gamma > 0; c1, a >= 0;
  /// fairx_samples >= 1 and delta in (0, 1).
  void validate() const;
};

/// Replaces c1 by the high-probability width and a by c1 sqrt(L_mu N).
PolicyConfig with_theorem_constants(PolicyConfig config, const GlmModel& model,
                                    const SatisfactionFunction& sat, double radius, Index dim,
                                    Index users, Index rounds);

/// Sufficient statistics of a GLM-based policy at the start of round t.
struct PolicyState {
  PolicyState(PolicyConfig config, GlmModel model, SatisfactionFunction sat, Index dim,
              bool tracks_precision);

  /// kappa_mu * lambda0.
  double ridge() const noexcept { return model.curvature_floor() * config.lambda0; }
  Index dim() const noexcept { return log.dim(); }

  PolicyConfig config;
  GlmModel model;
  SatisfactionFunction sat;
  PsdMatrix design;     // V_t
  PsdMatrix precision;  // H_t, only maintained when tracks_precision
  Vector theta_bar;
  ObservationLog log;
  std::int64_t round = 1;
  bool tracks_precision;

  // Incremental H accumulators (stale_hessian): sum mu' x x^T and sum mu'.
  Matrix stale_outer;
  double stale_curvature_sum = 0.0;
};

/// v_i(a) = mu(phi^T theta_bar), w_i(a) = c1 |phi|_{V^{-1}}.
WelfareInstance ucb_instance(const PolicyState& state, const ContextSlate& slate);
Allocation ucb_select(const PolicyState& state, const ContextSlate& slate, Rng* rng = nullptr);

/// v as in UCB; w_i(a) = phi(i, a)^T eps(i) with eps(i) ~ N(0, a^2 H^{-1}) i.i.d.
WelfareInstance ts_eps_instance(const PolicyState& state, const ContextSlate& slate, Rng& rng);
Allocation ts_eps_select(const PolicyState& state, const ContextSlate& slate, Rng& rng);

/// N i.i.d. draws theta(i) ~ N(theta_bar, a^2 H^{-1}).
std::vector<Vector> ts_theta_draws(const PolicyState& state, Index users, Rng& rng);
/// v_i(a) = mu(phi(i, a)^T theta(i)), w = 0.
WelfareInstance ts_theta_instance(const ContextSlate& slate, std::span<const Vector> thetas,
                                  const GlmModel& model, const SatisfactionFunction& sat);
Allocation ts_theta_select(const PolicyState& state, const ContextSlate& slate, Rng& rng);

/// Per-user argmax of mu(phi^T theta_bar) + c1 |phi|_{V^{-1}}; ties to the
/// smallest arm.
Allocation max_match_select(const PolicyState& state, const ContextSlate& slate);

/// P(i, a) = mu(phi(i, a)^T theta) / sum_a' mu(phi(i, a')^T theta).
/// Throws DistributionError on a non-positive row sum.
Matrix fairx_policy_matrix(const ContextSlate& slate, const Eigen::Ref<const Vector>& theta,
                           const GlmModel& model);
/// sum_i sum_a P(i, a) mu(phi(i, a)^T theta).
double fairx_score(const ContextSlate& slate, const Eigen::Ref<const Vector>& theta,
                   const GlmModel& model);
/// theta_bar followed by fairx_samples points theta_bar + sqrt(gamma) L^{-T} u,
/// u uniform on the unit sphere (the surface of the V-ellipsoid).
std::vector<Vector> fairx_candidates(const PolicyState& state, Rng& rng);
/// Highest-scoring candidate; the first wins ties.
Vector fairx_choose_parameter(const ContextSlate& slate, std::span<const Vector> candidates,
                              const GlmModel& model);
/// Draws each user's arm independently from its row of `policy`.
Allocation sample_from_policy_matrix(const Matrix& policy, Rng& rng);
Allocation fairx_select(const PolicyState& state, const ContextSlate& slate, Rng& rng);

Allocation random_select(const ContextSlate& slate, Rng& rng);

/// Greedy allocation on the true affinities (w = 0).
Allocation oracle_satisfaction_select(const ContextSlate& slate,
                                      const Eigen::Ref<const Vector>& theta_star,
                                      const GlmModel& model, const SatisfactionFunction& sat);
/// Exact per-user argmax of the true affinities.
Allocation oracle_match_select(const ContextSlate& slate,
                               const Eigen::Ref<const Vector>& theta_star, const GlmModel& model);

/// H = sum mu'(x^T theta_bar) (x x^T + lambda0 / |D| I) over the whole log;
/// L_mu lambda0 I when the log is empty.
void recompute_laplace_precision(PolicyState& state);

/// Logs (phi(i, pi(i)), y(i)), grows V, refits theta_bar (warm-started),
/// refreshes H for TS policies and advances the round counter.
void policy_update(PolicyState& state, const ContextSlate& slate, const Allocation& alloc,
                   const Feedback& feedback);

/// Uniform interface over every policy kind.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyKind kind() const noexcept = 0;
  virtual Allocation select(const ContextSlate& slate, Rng& rng) = 0;
  virtual void update(const ContextSlate& slate, const Allocation& alloc,
                      const Feedback& feedback) = 0;

  /// Learning state, or nullptr for Random and the oracles.
  virtual const PolicyState* state() const noexcept { return nullptr; }
};

/// `theta_star` is required (and only used) for the oracle kinds.
std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& config,
                                    const GlmModel& model, const SatisfactionFunction& sat,
                                    Index dim, const Vector& theta_star = Vector());

}  // namespace cab
