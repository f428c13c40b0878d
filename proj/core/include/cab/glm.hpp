#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "cab/numerics.hpp"

namespace cab {

enum class LinkFamily { Logistic, Linear };

std::string_view to_string(LinkFamily family) noexcept;
LinkFamily parse_link_family(std::string_view name);

/// Exponential-family feedback model: mean mu = m', its derivative, the
/// cumulant m, and the constants L_mu, kappa_mu and sigma used by the
/// confidence widths.
class GlmModel {
 public:
  /// Bernoulli feedback. kappa_mu is mu'(2D + 1), the smallest slope on
  /// |z| <= 2D + 1 (unit-norm features, |theta| <= 2D + 1).
  static GlmModel logistic(double certified_radius = 1.0);

  /// Gaussian feedback with identity link; noise_sigma is the sub-Gaussian
  /// scale (1 by default).
  static GlmModel linear(double noise_sigma = 1.0);

  static GlmModel of_family(LinkFamily family, double certified_radius);

  LinkFamily family() const noexcept { return family_; }

  double mean(double z) const noexcept;
  double mean_derivative(double z) const noexcept;
  double cumulant(double z) const noexcept;

  double lipschitz() const noexcept { return lipschitz_; }
  double curvature_floor() const noexcept { return curvature_floor_; }
  double subgaussian() const noexcept { return subgaussian_; }
  double certified_radius() const noexcept { return certified_radius_; }

  GlmModel with_subgaussian(double sigma) const;

 private:
  GlmModel(LinkFamily family, double lipschitz, double curvature_floor, double subgaussian,
           double certified_radius)
      : family_(family),
        lipschitz_(lipschitz),
        curvature_floor_(curvature_floor),
        subgaussian_(subgaussian),
        certified_radius_(certified_radius) {}

  LinkFamily family_;
  double lipschitz_;
  double curvature_floor_;
  double subgaussian_;
  double certified_radius_;
};

/// Arm satisfaction r: concave, nondecreasing, r(0) = 0.
///
/// CappedLinear is min(x, beta) and is bounded by beta. Identity exists for
/// oracle tests only; it is unbounded, so bound() returns +infinity.
class SatisfactionFunction {
 public:
  enum class Kind { CappedLinear, Identity };

  static SatisfactionFunction capped_linear(double beta);
  static SatisfactionFunction identity() noexcept { return SatisfactionFunction(Kind::Identity, 0.0); }

  double operator()(double x) const noexcept {
    return kind_ == Kind::CappedLinear ? (x < beta_ ? x : beta_) : x;
  }

  Kind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }
  double bound() const noexcept {
    return kind_ == Kind::CappedLinear ? beta_ : std::numeric_limits<double>::infinity();
  }
  double lipschitz() const noexcept { return 1.0; }

 private:
  SatisfactionFunction(Kind kind, double beta) noexcept : kind_(kind), beta_(beta) {}

  Kind kind_;
  double beta_;
};

/// The N x K grid of d-dimensional contexts phi(i, a) for one round,
/// stored user-major, then arm, then coordinate.
class ContextSlate {
 public:
  ContextSlate() = default;
  ContextSlate(Index users, Index arms, Index dim);
  ContextSlate(Index users, Index arms, Index dim, std::vector<double> flat);

  Index users() const noexcept { return users_; }
  Index arms() const noexcept { return arms_; }
  Index dim() const noexcept { return dim_; }

  Eigen::Map<const Vector> feature(Index user, Index arm) const {
    return Eigen::Map<const Vector>(data_.data() + offset(user, arm), dim_);
  }
  Eigen::Map<Vector> feature(Index user, Index arm) {
    return Eigen::Map<Vector>(data_.data() + offset(user, arm), dim_);
  }

  /// K x d block of user i's contexts, one arm per row.
  Eigen::Map<const RowMatrix> user_block(Index user) const {
    return Eigen::Map<const RowMatrix>(data_.data() + offset(user, 0), arms_, dim_);
  }

  std::span<const double> flat() const noexcept { return data_; }

  bool all_finite() const noexcept;
  double max_norm() const noexcept;

  /// Rescales every nonzero phi(i, a) to unit Euclidean norm.
  void normalize();

  bool operator==(const ContextSlate&) const = default;

 private:
  std::size_t offset(Index user, Index arm) const noexcept {
    return static_cast<std::size_t>((user * arms_ + arm) * dim_);
  }

  Index users_ = 0;
  Index arms_ = 0;
  Index dim_ = 0;
  std::vector<double> data_;
};

/// pi: [N] -> [K]. Arms are 0-based.
class Allocation {
 public:
  Allocation() = default;
  explicit Allocation(std::vector<int> assignment) : assignment_(std::move(assignment)) {}

  static Allocation constant(Index users, int arm) {
    return Allocation(std::vector<int>(static_cast<std::size_t>(users), arm));
  }

  Index users() const noexcept { return static_cast<Index>(assignment_.size()); }
  int operator[](Index user) const { return assignment_[static_cast<std::size_t>(user)]; }
  int& operator[](Index user) { return assignment_[static_cast<std::size_t>(user)]; }
  const std::vector<int>& assignment() const noexcept { return assignment_; }

  /// pi^{-1}(a) for every arm.
  std::vector<std::vector<Index>> preimages(Index arms) const;

  std::vector<int> counts(Index arms) const;

  /// Throws DimensionError unless there are `users` entries, all in [0, arms).
  void validate(Index users, Index arms) const;

  bool operator==(const Allocation&) const = default;

 private:
  std::vector<int> assignment_;
};

/// One round's outcomes y_t(i).
struct Feedback {
  Vector outcomes;
};

/// D_t: every (x_s(i), y_s(i)) observed so far, features stored row-major.
class ObservationLog {
 public:
  ObservationLog() = default;
  explicit ObservationLog(Index dim) : dim_(dim) {}

  void append(const Eigen::Ref<const Vector>& x, double y);
  void end_round() noexcept { ++rounds_seen_; }

  Index dim() const noexcept { return dim_; }
  Index size() const noexcept { return static_cast<Index>(outcomes_.size()); }
  bool empty() const noexcept { return outcomes_.empty(); }
  std::int64_t rounds_seen() const noexcept { return rounds_seen_; }

  Eigen::Map<const RowMatrix> features() const {
    return Eigen::Map<const RowMatrix>(features_.data(), size(), dim_);
  }
  Eigen::Map<const Vector> outcomes() const {
    return Eigen::Map<const Vector>(outcomes_.data(), size());
  }

 private:
  Index dim_ = 0;
  std::int64_t rounds_seen_ = 0;
  std::vector<double> features_;
  std::vector<double> outcomes_;
};

/// (i, a) -> mu(phi(i, a)^T theta).
Matrix expected_match_matrix(const ContextSlate& slate, const Eigen::Ref<const Vector>& theta,
                             const GlmModel& model);

/// sum_a r(sum_{i in pi^{-1}(a)} mu(phi(i, a)^T theta)); empty arms add r(0).
double f_value(const ContextSlate& slate, const Allocation& alloc,
               const Eigen::Ref<const Vector>& theta, const GlmModel& model,
               const SatisfactionFunction& sat);

/// sum [m(x^T theta) - y x^T theta] + (ridge / 2) |theta|^2.
double regularized_nll(const ObservationLog& log, const GlmModel& model,
                       const Eigen::Ref<const Vector>& theta, double ridge);

/// sum [mu(x^T theta) - y] x + ridge * theta.
Vector regularized_nll_gradient(const ObservationLog& log, const GlmModel& model,
                                const Eigen::Ref<const Vector>& theta, double ridge);

struct MleOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

/// Ridge-regularized maximum-likelihood estimate by damped Newton.
///
/// The Hessian is sum mu'(x^T theta) x x^T + ridge * I. Each Newton step is
/// halved until the objective does not increase. `warm_start`, when
/// non-empty, is the initial iterate; otherwise the zero vector is used.
/// An empty log returns zero. Throws ConvergenceError (carrying the final
/// gradient norm) if the tolerance is not met within max_iterations.
Vector fit_regularized_mle(const ObservationLog& log, const GlmModel& model, double ridge,
                           const Vector& warm_start = Vector(), const MleOptions& options = {});

/// Exploration width from the high-probability confidence bound:
///   (L_r L_mu / kappa_mu) * (sigma sqrt(d log(1 + N T / (d lambda0)) + 2 log(1/delta))
///                            + kappa_mu D sqrt(lambda0)).
double compute_theoretical_c1(const GlmModel& model, const SatisfactionFunction& sat,
                              double radius, double lambda0, double delta, Index dim,
                              Index users, Index rounds);

}  // namespace cab
