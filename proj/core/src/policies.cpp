#include "cab/policies.hpp"

#include <array>
#include <cmath>
#include <string>

#include <boost/random/uniform_int_distribution.hpp>

#include "cab/errors.hpp"

namespace cab {

namespace {

constexpr std::array<PolicyKind, 8> kAllKinds = {
    PolicyKind::CabUcb,   PolicyKind::CabTsEpsilon, PolicyKind::CabTsTheta,
    PolicyKind::MaxMatch, PolicyKind::FairX,        PolicyKind::Random,
    PolicyKind::OracleSatisfaction, PolicyKind::OracleMatch,
};

void check_slate(const PolicyState& state, const ContextSlate& slate) {
  if (slate.dim() != state.dim()) {
    throw DimensionError("policy state has dimension " + std::to_string(state.dim()) +
                         ", slate has " + std::to_string(slate.dim()));
  }
}

GreedyOptions greedy_options(const PolicyConfig& config) {
  GreedyOptions options;
  options.randomized_order = config.randomized_greedy_order;
  return options;
}

Matrix bonus_matrix(const PolicyState& state, const ContextSlate& slate) {
  Matrix bonus(slate.users(), slate.arms());
  if (state.config.c1 == 0.0) {
    bonus.setZero();
    return bonus;
  }
  for (Index i = 0; i < slate.users(); ++i) {
    for (Index a = 0; a < slate.arms(); ++a) {
      bonus(i, a) = state.config.c1 * mahalanobis_inv_norm(state.design, slate.feature(i, a));
    }
  }
  return bonus;
}

Allocation per_user_argmax(const Matrix& scores) {
  Allocation alloc = Allocation::constant(scores.rows(), 0);
  for (Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Index a = 1; a < scores.cols(); ++a) {
      if (scores(i, a) > scores(i, best)) best = static_cast<int>(a);
    }
    alloc[i] = best;
  }
  return alloc;
}

}  // namespace

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::CabUcb:
      return "cab_ucb";
    case PolicyKind::CabTsEpsilon:
      return "cab_ts_eps";
    case PolicyKind::CabTsTheta:
      return "cab_ts_theta";
    case PolicyKind::MaxMatch:
      return "max_match";
    case PolicyKind::FairX:
      return "fairx";
    case PolicyKind::Random:
      return "random";
    case PolicyKind::OracleSatisfaction:
      return "oracle_satisfaction";
    case PolicyKind::OracleMatch:
      return "oracle_match";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (PolicyKind kind : kAllKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw ParameterError("unknown policy '" + std::string(name) + "'");
}

std::span<const PolicyKind> all_policy_kinds() noexcept { return kAllKinds; }

bool is_learning(PolicyKind kind) noexcept {
  return kind != PolicyKind::Random && !is_oracle(kind);
}

bool uses_laplace_precision(PolicyKind kind) noexcept {
  return kind == PolicyKind::CabTsEpsilon || kind == PolicyKind::CabTsTheta;
}

bool is_oracle(PolicyKind kind) noexcept {
  return kind == PolicyKind::OracleSatisfaction || kind == PolicyKind::OracleMatch;
}

PolicyConfig PolicyConfig::experimental_defaults(Index dim, Index users) {
  PolicyConfig config;
  const double d = static_cast<double>(dim);
  config.lambda0 = d;
  config.c1 = std::sqrt(d);
  config.a = std::sqrt(d * static_cast<double>(users));
  return config;
}

void PolicyConfig::validate() const {
  if (!(lambda0 > 0.0)) throw ParameterError("lambda0 must be > 0");
  if (!(c1 >= 0.0)) throw ParameterError("c1 must be >= 0");
  if (!(a >= 0.0)) throw ParameterError("a must be >= 0");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  if (fairx_samples < 1) throw ParameterError("fairx_samples must be >= 1");
}

PolicyConfig with_theorem_constants(PolicyConfig config, const GlmModel& model,
                                    const SatisfactionFunction& sat, double radius, Index dim,
                                    Index users, Index rounds) {
  config.c1 = compute_theoretical_c1(model, sat, radius, config.lambda0, config.delta, dim, users,
                                     rounds);
  config.a = config.c1 * std::sqrt(model.lipschitz() * static_cast<double>(users));
  return config;
}

PolicyState::PolicyState(PolicyConfig config_in, GlmModel model_in, SatisfactionFunction sat_in,
                         Index dim, bool tracks_precision_in)
    : config(config_in),
      model(model_in),
      sat(sat_in),
      design(dim, config_in.lambda0),
      precision(dim, model_in.lipschitz() * config_in.lambda0),
      theta_bar(Vector::Zero(dim)),
      log(dim),
      tracks_precision(tracks_precision_in),
      stale_outer(Matrix::Zero(dim, dim)) {
  config.validate();
}

WelfareInstance ucb_instance(const PolicyState& state, const ContextSlate& slate) {
  check_slate(state, slate);
  return WelfareInstance(expected_match_matrix(slate, state.theta_bar, state.model),
                         bonus_matrix(state, slate), state.sat);
}

Allocation ucb_select(const PolicyState& state, const ContextSlate& slate, Rng* rng) {
  return greedy_allocate(ucb_instance(state, slate), greedy_options(state.config), rng).allocation;
}

WelfareInstance ts_eps_instance(const PolicyState& state, const ContextSlate& slate, Rng& rng) {
  check_slate(state, slate);
  Matrix perturbation(slate.users(), slate.arms());
  for (Index i = 0; i < slate.users(); ++i) {
    const Vector eps = sample_scaled_inverse_gaussian(state.precision, state.config.a, rng);
    perturbation.row(i) = (slate.user_block(i) * eps).transpose();
  }
  return WelfareInstance(expected_match_matrix(slate, state.theta_bar, state.model),
                         std::move(perturbation), state.sat);
}

Allocation ts_eps_select(const PolicyState& state, const ContextSlate& slate, Rng& rng) {
  WelfareInstance inst = ts_eps_instance(state, slate, rng);
  return greedy_allocate(inst, greedy_options(state.config), &rng).allocation;
}

std::vector<Vector> ts_theta_draws(const PolicyState& state, Index users, Rng& rng) {
  std::vector<Vector> thetas;
  thetas.reserve(static_cast<std::size_t>(users));
  for (Index i = 0; i < users; ++i) {
    thetas.push_back(state.theta_bar +
                     sample_scaled_inverse_gaussian(state.precision, state.config.a, rng));
  }
  return thetas;
}

WelfareInstance ts_theta_instance(const ContextSlate& slate, std::span<const Vector> thetas,
                                  const GlmModel& model, const SatisfactionFunction& sat) {
  if (static_cast<Index>(thetas.size()) != slate.users()) {
    throw DimensionError("ts_theta_instance: need one parameter draw per user");
  }
  Matrix values(slate.users(), slate.arms());
  for (Index i = 0; i < slate.users(); ++i) {
    const Vector& theta = thetas[static_cast<std::size_t>(i)];
    if (theta.size() != slate.dim()) throw DimensionError("ts_theta_instance: draw dimension");
    const Vector scores = slate.user_block(i) * theta;
    for (Index a = 0; a < slate.arms(); ++a) values(i, a) = model.mean(scores[a]);
  }
  return WelfareInstance(std::move(values), sat);
}

Allocation ts_theta_select(const PolicyState& state, const ContextSlate& slate, Rng& rng) {
  check_slate(state, slate);
  const std::vector<Vector> thetas = ts_theta_draws(state, slate.users(), rng);
  WelfareInstance inst = ts_theta_instance(slate, thetas, state.model, state.sat);
  return greedy_allocate(inst, greedy_options(state.config), &rng).allocation;
}

Allocation max_match_select(const PolicyState& state, const ContextSlate& slate) {
  check_slate(state, slate);
  return per_user_argmax(expected_match_matrix(slate, state.theta_bar, state.model) +
                         bonus_matrix(state, slate));
}

Matrix fairx_policy_matrix(const ContextSlate& slate, const Eigen::Ref<const Vector>& theta,
                           const GlmModel& model) {
  Matrix p = expected_match_matrix(slate, theta, model);
  for (Index i = 0; i < p.rows(); ++i) {
    const double total = p.row(i).sum();
    if (!(total > 0.0)) {
      throw DistributionError("FairX: user " + std::to_string(i) +
                              " has zero total affinity; exposure policy undefined");
    }
    p.row(i) /= total;
  }
  return p;
}

double fairx_score(const ContextSlate& slate, const Eigen::Ref<const Vector>& theta,
                   const GlmModel& model) {
  const Matrix affinity = expected_match_matrix(slate, theta, model);
  double score = 0.0;
  for (Index i = 0; i < affinity.rows(); ++i) {
    const double total = affinity.row(i).sum();
    if (!(total > 0.0)) {
      throw DistributionError("FairX: user " + std::to_string(i) + " has zero total affinity");
    }
    score += affinity.row(i).squaredNorm() / total;
  }
  return score;
}

std::vector<Vector> fairx_candidates(const PolicyState& state, Rng& rng) {
  std::vector<Vector> candidates;
  candidates.reserve(static_cast<std::size_t>(state.config.fairx_samples) + 1);
  candidates.push_back(state.theta_bar);
  const double radius = std::sqrt(state.config.gamma);
  for (int s = 0; s < state.config.fairx_samples; ++s) {
    const Vector u = uniform_on_sphere(state.dim(), rng);
    candidates.push_back(state.theta_bar + radius * solve_factor_transpose(state.design, u));
  }
  return candidates;
}

Vector fairx_choose_parameter(const ContextSlate& slate, std::span<const Vector> candidates,
                              const GlmModel& model) {
  if (candidates.empty()) throw ParameterError("FairX: no candidate parameters");
  std::size_t best = 0;
  double best_score = fairx_score(slate, candidates[0], model);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const double score = fairx_score(slate, candidates[c], model);
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return candidates[best];
}

Allocation sample_from_policy_matrix(const Matrix& policy, Rng& rng) {
  Allocation alloc = Allocation::constant(policy.rows(), 0);
  for (Index i = 0; i < policy.rows(); ++i) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    int arm = static_cast<int>(policy.cols()) - 1;
    for (Index a = 0; a < policy.cols(); ++a) {
      cumulative += policy(i, a);
      if (u < cumulative) {
        arm = static_cast<int>(a);
        break;
      }
    }
    alloc[i] = arm;
  }
  return alloc;
}

Allocation fairx_select(const PolicyState& state, const ContextSlate& slate, Rng& rng) {
  check_slate(state, slate);
  const std::vector<Vector> candidates = fairx_candidates(state, rng);
  const Vector theta = fairx_choose_parameter(slate, candidates, state.model);
  return sample_from_policy_matrix(fairx_policy_matrix(slate, theta, state.model), rng);
}

Allocation random_select(const ContextSlate& slate, Rng& rng) {
  Allocation alloc = Allocation::constant(slate.users(), 0);
  boost::random::uniform_int_distribution<int> pick(0, static_cast<int>(slate.arms()) - 1);
  for (Index i = 0; i < slate.users(); ++i) alloc[i] = pick(rng);
  return alloc;
}

Allocation oracle_satisfaction_select(const ContextSlate& slate,
                                      const Eigen::Ref<const Vector>& theta_star,
                                      const GlmModel& model, const SatisfactionFunction& sat) {
  return greedy_allocate(WelfareInstance(expected_match_matrix(slate, theta_star, model), sat))
      .allocation;
}

Allocation oracle_match_select(const ContextSlate& slate,
                               const Eigen::Ref<const Vector>& theta_star, const GlmModel& model) {
  return per_user_argmax(expected_match_matrix(slate, theta_star, model));
}

void recompute_laplace_precision(PolicyState& state) {
  const Index d = state.dim();
  if (state.log.empty()) {
    state.precision = PsdMatrix(d, state.model.lipschitz() * state.config.lambda0);
    return;
  }
  const auto x = state.log.features();
  const Vector eta = x * state.theta_bar;
  Vector curvature(eta.size());
  for (Index k = 0; k < eta.size(); ++k) curvature[k] = state.model.mean_derivative(eta[k]);
  Matrix h = x.transpose() * curvature.asDiagonal() * x;
  h.diagonal().array() +=
      state.config.lambda0 / static_cast<double>(state.log.size()) * curvature.sum();
  // Symmetrize away rounding in the product.
  state.precision.assign(0.5 * (h + h.transpose()));
}

void policy_update(PolicyState& state, const ContextSlate& slate, const Allocation& alloc,
                   const Feedback& feedback) {
  check_slate(state, slate);
  alloc.validate(slate.users(), slate.arms());
  if (feedback.outcomes.size() != slate.users()) {
    throw DimensionError("policy_update: feedback has " +
                         std::to_string(feedback.outcomes.size()) + " outcomes for " +
                         std::to_string(slate.users()) + " users");
  }
  for (Index i = 0; i < slate.users(); ++i) {
    const auto x = slate.feature(i, alloc[i]);
    state.log.append(x, feedback.outcomes[i]);
    state.design.rank_one_add(x);
  }
  state.log.end_round();
  state.theta_bar = fit_regularized_mle(state.log, state.model, state.ridge(), state.theta_bar);

  if (state.tracks_precision) {
    if (state.config.stale_hessian) {
      for (Index i = 0; i < slate.users(); ++i) {
        const auto x = slate.feature(i, alloc[i]);
        const double w = state.model.mean_derivative(x.dot(state.theta_bar));
        state.stale_outer.noalias() += w * x * x.transpose();
        state.stale_curvature_sum += w;
      }
      Matrix h = state.stale_outer;
      h.diagonal().array() += state.config.lambda0 / static_cast<double>(state.log.size()) *
                              state.stale_curvature_sum;
      state.precision.assign(0.5 * (h + h.transpose()));
    } else {
      recompute_laplace_precision(state);
    }
  }
  ++state.round;
}

namespace {

class GlmPolicy final : public Policy {
 public:
  GlmPolicy(PolicyKind kind, const PolicyConfig& config, const GlmModel& model,
            const SatisfactionFunction& sat, Index dim)
      : kind_(kind), state_(config, model, sat, dim, uses_laplace_precision(kind)) {}

  PolicyKind kind() const noexcept override { return kind_; }

  Allocation select(const ContextSlate& slate, Rng& rng) override {
    switch (kind_) {
      case PolicyKind::CabUcb:
        return ucb_select(state_, slate, &rng);
      case PolicyKind::CabTsEpsilon:
        return ts_eps_select(state_, slate, rng);
      case PolicyKind::CabTsTheta:
        return ts_theta_select(state_, slate, rng);
      case PolicyKind::MaxMatch:
        return max_match_select(state_, slate);
      case PolicyKind::FairX:
        return fairx_select(state_, slate, rng);
      default:
        throw ParameterError("GlmPolicy: not a learning policy");
    }
  }

  void update(const ContextSlate& slate, const Allocation& alloc,
              const Feedback& feedback) override {
    policy_update(state_, slate, alloc, feedback);
  }

  const PolicyState* state() const noexcept override { return &state_; }

 private:
  PolicyKind kind_;
  PolicyState state_;
};

class RandomPolicy final : public Policy {
 public:
  PolicyKind kind() const noexcept override { return PolicyKind::Random; }
  Allocation select(const ContextSlate& slate, Rng& rng) override {
    return random_select(slate, rng);
  }
  void update(const ContextSlate&, const Allocation&, const Feedback&) override {}
};

class OraclePolicy final : public Policy {
 public:
  OraclePolicy(PolicyKind kind, const GlmModel& model, const SatisfactionFunction& sat,
               Vector theta_star)
      : kind_(kind), model_(model), sat_(sat), theta_star_(std::move(theta_star)) {}

  PolicyKind kind() const noexcept override { return kind_; }

  Allocation select(const ContextSlate& slate, Rng&) override {
    if (kind_ == PolicyKind::OracleSatisfaction) {
      return oracle_satisfaction_select(slate, theta_star_, model_, sat_);
    }
    return oracle_match_select(slate, theta_star_, model_);
  }
  void update(const ContextSlate&, const Allocation&, const Feedback&) override {}

 private:
  PolicyKind kind_;
  GlmModel model_;
  SatisfactionFunction sat_;
  Vector theta_star_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& config,
                                    const GlmModel& model, const SatisfactionFunction& sat,
                                    Index dim, const Vector& theta_star) {
  if (kind == PolicyKind::Random) return std::make_unique<RandomPolicy>();
  if (is_oracle(kind)) {
    if (theta_star.size() != dim) {
      throw DimensionError("oracle policy needs the true parameter of dimension " +
                           std::to_string(dim));
    }
    return std::make_unique<OraclePolicy>(kind, model, sat, theta_star);
  }
  return std::make_unique<GlmPolicy>(kind, config, model, sat, dim);
}

}  // namespace cab
