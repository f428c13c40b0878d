#include "cab/glm.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "cab/errors.hpp"

namespace cab {

namespace {

double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_theta(const ContextSlate& slate, const Eigen::Ref<const Vector>& theta,
                 const char* where) {
  if (theta.size() != slate.dim()) {
    throw DimensionError(std::string(where) + ": theta has dimension " +
                         std::to_string(theta.size()) + ", slate has " +
                         std::to_string(slate.dim()));
  }
}

}  // namespace

std::string_view to_string(LinkFamily family) noexcept {
  switch (family) {
    case LinkFamily::Logistic:
      return "logistic";
    case LinkFamily::Linear:
      return "linear";
  }
  return "unknown";
}

LinkFamily parse_link_family(std::string_view name) {
  if (name == "logistic") return LinkFamily::Logistic;
  if (name == "linear") return LinkFamily::Linear;
  throw ParameterError("unknown link family '" + std::string(name) + "'");
}

GlmModel GlmModel::logistic(double certified_radius) {
  if (!(certified_radius >= 0.0)) throw ParameterError("certified radius must be >= 0");
  const double edge = 2.0 * certified_radius + 1.0;
  const double p = cab::logistic(edge);
  // Bernoulli noise is 1/2-sub-Gaussian.
  return GlmModel(LinkFamily::Logistic, 0.25, p * (1.0 - p), 0.5, certified_radius);
}

GlmModel GlmModel::linear(double noise_sigma) {
  if (!(noise_sigma >= 0.0)) throw ParameterError("noise sigma must be >= 0");
  return GlmModel(LinkFamily::Linear, 1.0, 1.0, noise_sigma, 1.0);
}

GlmModel GlmModel::of_family(LinkFamily family, double certified_radius) {
  return family == LinkFamily::Logistic ? logistic(certified_radius) : linear();
}

GlmModel GlmModel::with_subgaussian(double sigma) const {
  if (!(sigma >= 0.0)) throw ParameterError("sub-Gaussian scale must be >= 0");
  GlmModel copy = *this;
  copy.subgaussian_ = sigma;
  return copy;
}

double GlmModel::mean(double z) const noexcept {
  return family_ == LinkFamily::Logistic ? cab::logistic(z) : z;
}

double GlmModel::mean_derivative(double z) const noexcept {
  if (family_ == LinkFamily::Linear) return 1.0;
  const double p = cab::logistic(z);
  return p * (1.0 - p);
}

double GlmModel::cumulant(double z) const noexcept {
  if (family_ == LinkFamily::Linear) return 0.5 * z * z;
  // log(1 + e^z) without overflow.
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

SatisfactionFunction SatisfactionFunction::capped_linear(double beta) {
  if (!(beta > 0.0)) throw ParameterError("capped-linear satisfaction needs beta > 0");
  return SatisfactionFunction(Kind::CappedLinear, beta);
}

ContextSlate::ContextSlate(Index users, Index arms, Index dim)
    : users_(users),
      arms_(arms),
      dim_(dim),
      data_(static_cast<std::size_t>(users * arms * dim), 0.0) {}

ContextSlate::ContextSlate(Index users, Index arms, Index dim, std::vector<double> flat)
    : users_(users), arms_(arms), dim_(dim), data_(std::move(flat)) {
  if (data_.size() != static_cast<std::size_t>(users * arms * dim)) {
    throw DimensionError("ContextSlate: expected " + std::to_string(users * arms * dim) +
                         " values, got " + std::to_string(data_.size()));
  }
}

bool ContextSlate::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double ContextSlate::max_norm() const noexcept {
  double best = 0.0;
  for (Index i = 0; i < users_; ++i) {
    for (Index a = 0; a < arms_; ++a) best = std::max(best, feature(i, a).norm());
  }
  return best;
}

void ContextSlate::normalize() {
  for (Index i = 0; i < users_; ++i) {
    for (Index a = 0; a < arms_; ++a) {
      auto phi = feature(i, a);
      const double n = phi.norm();
      if (n > 0.0) phi /= n;
    }
  }
}

std::vector<std::vector<Index>> Allocation::preimages(Index arms) const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(arms));
  for (Index i = 0; i < users(); ++i) out[static_cast<std::size_t>((*this)[i])].push_back(i);
  return out;
}

std::vector<int> Allocation::counts(Index arms) const {
  std::vector<int> out(static_cast<std::size_t>(arms), 0);
  for (int a : assignment_) ++out[static_cast<std::size_t>(a)];
  return out;
}

void Allocation::validate(Index users, Index arms) const {
  if (this->users() != users) {
    throw DimensionError("allocation covers " + std::to_string(this->users()) +
                         " users, expected " + std::to_string(users));
  }
  for (int a : assignment_) {
    if (a < 0 || a >= arms) {
      throw DimensionError("allocation assigns arm " + std::to_string(a) + " outside [0, " +
                           std::to_string(arms) + ")");
    }
  }
}

void ObservationLog::append(const Eigen::Ref<const Vector>& x, double y) {
  if (x.size() != dim_) {
    throw DimensionError("ObservationLog: feature has dimension " + std::to_string(x.size()) +
                         ", log has " + std::to_string(dim_));
  }
  features_.insert(features_.end(), x.data(), x.data() + x.size());
  outcomes_.push_back(y);
}

Matrix expected_match_matrix(const ContextSlate& slate, const Eigen::Ref<const Vector>& theta,
                             const GlmModel& model) {
  check_theta(slate, theta, "expected_match_matrix");
  Matrix out(slate.users(), slate.arms());
  for (Index i = 0; i < slate.users(); ++i) {
    const Vector scores = slate.user_block(i) * theta;
    for (Index a = 0; a < slate.arms(); ++a) out(i, a) = model.mean(scores[a]);
  }
  return out;
}

double f_value(const ContextSlate& slate, const Allocation& alloc,
               const Eigen::Ref<const Vector>& theta, const GlmModel& model,
               const SatisfactionFunction& sat) {
  check_theta(slate, theta, "f_value");
  alloc.validate(slate.users(), slate.arms());
  std::vector<double> sums(static_cast<std::size_t>(slate.arms()), 0.0);
  for (Index i = 0; i < slate.users(); ++i) {
    const int a = alloc[i];
    sums[static_cast<std::size_t>(a)] += model.mean(slate.feature(i, a).dot(theta));
  }
  double total = 0.0;
  for (double s : sums) total += sat(s);
  return total;
}

double regularized_nll(const ObservationLog& log, const GlmModel& model,
                       const Eigen::Ref<const Vector>& theta, double ridge) {
  double total = 0.5 * ridge * theta.squaredNorm();
  if (log.empty()) return total;
  const Vector eta = log.features() * theta;
  const auto y = log.outcomes();
  for (Index k = 0; k < eta.size(); ++k) total += model.cumulant(eta[k]) - y[k] * eta[k];
  return total;
}

Vector regularized_nll_gradient(const ObservationLog& log, const GlmModel& model,
                                const Eigen::Ref<const Vector>& theta, double ridge) {
  Vector grad = ridge * theta;
  if (log.empty()) return grad;
  const Vector eta = log.features() * theta;
  Vector residual(eta.size());
  const auto y = log.outcomes();
  for (Index k = 0; k < eta.size(); ++k) residual[k] = model.mean(eta[k]) - y[k];
  grad.noalias() += log.features().transpose() * residual;
  return grad;
}

Vector fit_regularized_mle(const ObservationLog& log, const GlmModel& model, double ridge,
                           const Vector& warm_start, const MleOptions& options) {
  if (!(ridge > 0.0)) throw ParameterError("fit_regularized_mle: ridge weight must be > 0");
  const Index d = log.dim();
  if (warm_start.size() != 0 && warm_start.size() != d) {
    throw DimensionError("fit_regularized_mle: warm start has dimension " +
                         std::to_string(warm_start.size()) + ", log has " + std::to_string(d));
  }
  if (log.empty()) return Vector::Zero(d);

  const auto x = log.features();
  const auto y = log.outcomes();
  const Index n = log.size();

  Vector theta = warm_start.size() == d ? warm_start : Vector::Zero(d);
  Vector eta = x * theta;
  Vector residual(n);
  Vector curvature(n);

  auto objective = [&](const Vector& th, const Vector& et) {
    double total = 0.5 * ridge * th.squaredNorm();
    for (Index k = 0; k < n; ++k) total += model.cumulant(et[k]) - y[k] * et[k];
    return total;
  };

  auto gradient = [&](const Vector& th, const Vector& et) {
    for (Index k = 0; k < n; ++k) residual[k] = model.mean(et[k]) - y[k];
    Vector g = ridge * th;
    g.noalias() += x.transpose() * residual;
    return g;
  };

  double grad_norm = 0.0;
  for (int iter = 0;; ++iter) {
    const Vector grad = gradient(theta, eta);
    grad_norm = grad.norm();
    if (grad_norm <= options.gradient_tolerance) return theta;
    if (iter == options.max_iterations) break;

    for (Index k = 0; k < n; ++k) curvature[k] = model.mean_derivative(eta[k]);
    Matrix hessian = Matrix::Identity(d, d) * ridge;
    hessian.noalias() += x.transpose() * curvature.asDiagonal() * x;
    const Vector step = hessian.llt().solve(grad);

    const double f0 = objective(theta, eta);
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
      Vector candidate = theta - scale * step;
      Vector candidate_eta = x * candidate;
      // Near the optimum the objective cannot resolve the decrease; a step
      // that halves the gradient norm is then accepted instead.
      if (objective(candidate, candidate_eta) <= f0 + slack ||
          gradient(candidate, candidate_eta).norm() <= 0.5 * grad_norm) {
        theta = std::move(candidate);
        eta = std::move(candidate_eta);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  std::ostringstream msg;
  msg << "fit_regularized_mle: gradient norm " << std::scientific << grad_norm << " above tolerance "
      << options.gradient_tolerance;
  throw ConvergenceError(msg.str(),
                         grad_norm, options.max_iterations);
}

double compute_theoretical_c1(const GlmModel& model, const SatisfactionFunction& sat,
                              double radius, double lambda0, double delta, Index dim,
                              Index users, Index rounds) {
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  if (!(lambda0 > 0.0)) throw ParameterError("lambda0 must be > 0");
  const double d = static_cast<double>(dim);
  const double nt = static_cast<double>(users) * static_cast<double>(rounds);
  const double kappa = model.curvature_floor();
  const double width = model.subgaussian() *
                       std::sqrt(d * std::log(1.0 + nt / (d * lambda0)) +
                                 2.0 * std::log(1.0 / delta));
  return sat.lipschitz() * model.lipschitz() / kappa *
         (width + kappa * radius * std::sqrt(lambda0));
}

}  // namespace cab
