#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cab/glm.hpp"
#include "cab/rng.hpp"

namespace cab {

/// Synthetic allocation environment: contexts
///   phi(i, a) = popularity * phi_pop(i, a) + (1 - popularity) * phi_base(i, a)
/// with standard-normal phi_base and phi_pop sorted so that arm 0 is the most
/// popular in every coordinate, and theta* ~ Uniform[0, 1]^d.
struct SyntheticSpec {
  Index users = 50;
  Index arms = 10;
  Index dim = 5;
  Index rounds = 500;
  double popularity = 0.5;
  double beta = 5.0;
  std::uint64_t seed = 0;
  bool normalize_features = false;
  /// Draw one slate and reuse it every round.
  bool static_contexts = false;
  LinkFamily family = LinkFamily::Logistic;
  /// Bound D on |theta*| used for kappa_mu; sqrt(dim) when unset.
  std::optional<double> certified_radius;

  double radius() const;
  GlmModel model() const;
  SatisfactionFunction satisfaction() const;

  /// Throws ParameterError on non-positive counts, popularity outside
  /// [0, 1] or beta <= 0.
  void validate() const;

  bool operator==(const SyntheticSpec&) const = default;
};

/// Everything the adversary fixes before learning starts.
struct EnvironmentInstance {
  SyntheticSpec spec;
  Vector theta_star;
  std::vector<ContextSlate> slates;

  /// Contexts of round t (1-based).
  const ContextSlate& slate(Index round) const;
};

EnvironmentInstance generate_instance(const SyntheticSpec& spec, Rng& rng);

/// y(i) ~ Bernoulli(mu(phi(i, pi(i))^T theta*)) for the logistic family;
/// phi^T theta* + N(0, 1) for the linear family.
Feedback sample_feedback(const ContextSlate& slate, const Allocation& alloc,
                         const Eigen::Ref<const Vector>& theta_star, const GlmModel& model,
                         Rng& rng);

struct RoundRecord {
  int round = 0;
  std::string policy;
  double satisfaction = 0.0;  // f_t(pi_t; theta*)
  double matches = 0.0;       // sum_i y_t(i)
  std::vector<double> per_arm_expected_match_sum;
  std::vector<int> selection_counts;

  bool operator==(const RoundRecord&) const = default;
};

RoundRecord score_round(int round, const std::string& policy, const ContextSlate& slate,
                        const Allocation& alloc, const Feedback& feedback,
                        const Eigen::Ref<const Vector>& theta_star, const GlmModel& model,
                        const SatisfactionFunction& sat);

inline constexpr int kInstanceSchemaVersion = 1;

/// JSON replay file: {"schema", "version", "spec", "theta_star", "slates"},
/// each slate flattened user-major, then arm, then coordinate.
void save_instance(const EnvironmentInstance& instance, const std::filesystem::path& path);
/// Throws ConfigError on unreadable files or schema mismatches.
EnvironmentInstance load_instance(const std::filesystem::path& path);

std::string instance_to_json(const EnvironmentInstance& instance);
EnvironmentInstance instance_from_json(const std::string& text);

}  // namespace cab
