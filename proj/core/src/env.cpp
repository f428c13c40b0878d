#include "cab/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cab/errors.hpp"

namespace cab {

using nlohmann::json;

double SyntheticSpec::radius() const {
  return certified_radius.value_or(std::sqrt(static_cast<double>(dim)));
}

GlmModel SyntheticSpec::model() const { return GlmModel::of_family(family, radius()); }

SatisfactionFunction SyntheticSpec::satisfaction() const {
  return SatisfactionFunction::capped_linear(beta);
}

void SyntheticSpec::validate() const {
  if (users < 1 || arms < 1 || dim < 1 || rounds < 1) {
    throw ParameterError("users, arms, dim and rounds must all be >= 1");
  }
  if (!(popularity >= 0.0 && popularity <= 1.0)) {
    throw ParameterError("popularity must lie in [0, 1]");
  }
  if (!(beta > 0.0)) throw ParameterError("beta must be > 0");
  if (certified_radius && !(*certified_radius >= 0.0)) {
    throw ParameterError("certified radius must be >= 0");
  }
}

const ContextSlate& EnvironmentInstance::slate(Index round) const {
  if (slates.empty()) throw DimensionError("environment has no slates");
  if (spec.static_contexts) return slates.front();
  if (round < 1 || round > static_cast<Index>(slates.size())) {
    throw DimensionError("round " + std::to_string(round) + " outside [1, " +
                         std::to_string(slates.size()) + "]");
  }
  return slates[static_cast<std::size_t>(round - 1)];
}

EnvironmentInstance generate_instance(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  EnvironmentInstance instance;
  instance.spec = spec;
  instance.theta_star.resize(spec.dim);
  for (Index j = 0; j < spec.dim; ++j) instance.theta_star[j] = uniform01(rng);

  const Index n_slates = spec.static_contexts ? 1 : spec.rounds;
  const double lam = spec.popularity;
  std::vector<double> pop(static_cast<std::size_t>(spec.arms));
  instance.slates.reserve(static_cast<std::size_t>(n_slates));
  for (Index t = 0; t < n_slates; ++t) {
    ContextSlate slate(spec.users, spec.arms, spec.dim);
    for (Index i = 0; i < spec.users; ++i) {
      // Popularity part: each coordinate sorted independently, descending
      // in arm index.
      for (Index j = 0; j < spec.dim; ++j) {
        for (double& v : pop) v = standard_normal(rng);
        std::sort(pop.begin(), pop.end(), std::greater<>());
        for (Index a = 0; a < spec.arms; ++a) {
          slate.feature(i, a)[j] = lam * pop[static_cast<std::size_t>(a)];
        }
      }
      for (Index a = 0; a < spec.arms; ++a) {
        auto phi = slate.feature(i, a);
        for (Index j = 0; j < spec.dim; ++j) phi[j] += (1.0 - lam) * standard_normal(rng);
      }
    }
    if (spec.normalize_features) slate.normalize();
    instance.slates.push_back(std::move(slate));
  }
  return instance;
}

Feedback sample_feedback(const ContextSlate& slate, const Allocation& alloc,
                         const Eigen::Ref<const Vector>& theta_star, const GlmModel& model,
                         Rng& rng) {
  alloc.validate(slate.users(), slate.arms());
  if (theta_star.size() != slate.dim()) throw DimensionError("sample_feedback: theta dimension");
  Feedback fb;
  fb.outcomes.resize(slate.users());
  for (Index i = 0; i < slate.users(); ++i) {
    const double z = slate.feature(i, alloc[i]).dot(theta_star);
    if (model.family() == LinkFamily::Logistic) {
      fb.outcomes[i] = uniform01(rng) < model.mean(z) ? 1.0 : 0.0;
    } else {
      fb.outcomes[i] = model.mean(z) + standard_normal(rng);
    }
  }
  return fb;
}

RoundRecord score_round(int round, const std::string& policy, const ContextSlate& slate,
                        const Allocation& alloc, const Feedback& feedback,
                        const Eigen::Ref<const Vector>& theta_star, const GlmModel& model,
                        const SatisfactionFunction& sat) {
  if (feedback.outcomes.size() != slate.users()) {
    throw DimensionError("score_round: feedback length does not match the slate");
  }
  RoundRecord record;
  record.round = round;
  record.policy = policy;
  record.satisfaction = f_value(slate, alloc, theta_star, model, sat);
  record.matches = feedback.outcomes.sum();
  record.per_arm_expected_match_sum.assign(static_cast<std::size_t>(slate.arms()), 0.0);
  for (Index i = 0; i < slate.users(); ++i) {
    const int a = alloc[i];
    record.per_arm_expected_match_sum[static_cast<std::size_t>(a)] +=
        model.mean(slate.feature(i, a).dot(theta_star));
  }
  record.selection_counts = alloc.counts(slate.arms());
  return record;
}

namespace {

json spec_to_json(const SyntheticSpec& spec) {
  json j = {
      {"users", spec.users},
      {"arms", spec.arms},
      {"dim", spec.dim},
      {"rounds", spec.rounds},
      {"popularity", spec.popularity},
      {"beta", spec.beta},
      {"seed", spec.seed},
      {"normalize_features", spec.normalize_features},
      {"static_contexts", spec.static_contexts},
      {"family", std::string(to_string(spec.family))},
  };
  j["certified_radius"] = spec.certified_radius ? json(*spec.certified_radius) : json(nullptr);
  return j;
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec spec;
  spec.users = j.at("users").get<Index>();
  spec.arms = j.at("arms").get<Index>();
  spec.dim = j.at("dim").get<Index>();
  spec.rounds = j.at("rounds").get<Index>();
  spec.popularity = j.at("popularity").get<double>();
  spec.beta = j.at("beta").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.normalize_features = j.at("normalize_features").get<bool>();
  spec.static_contexts = j.at("static_contexts").get<bool>();
  spec.family = parse_link_family(j.at("family").get<std::string>());
  if (j.contains("certified_radius") && !j.at("certified_radius").is_null()) {
    spec.certified_radius = j.at("certified_radius").get<double>();
  }
  return spec;
}

}  // namespace

std::string instance_to_json(const EnvironmentInstance& instance) {
  json j;
  j["schema"] = "cab.instance";
  j["version"] = kInstanceSchemaVersion;
  j["spec"] = spec_to_json(instance.spec);
  j["theta_star"] = std::vector<double>(instance.theta_star.data(),
                                        instance.theta_star.data() + instance.theta_star.size());
  json slates = json::array();
  for (const ContextSlate& slate : instance.slates) {
    slates.push_back(std::vector<double>(slate.flat().begin(), slate.flat().end()));
  }
  j["slates"] = std::move(slates);
  return j.dump();
}

EnvironmentInstance instance_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "cab.instance") {
      throw ConfigError("instance file: unexpected schema tag");
    }
    if (j.at("version").get<int>() != kInstanceSchemaVersion) {
      throw ConfigError("instance file: unsupported version " +
                        std::to_string(j.at("version").get<int>()));
    }
    EnvironmentInstance instance;
    instance.spec = spec_from_json(j.at("spec"));
    instance.spec.validate();
    const auto theta = j.at("theta_star").get<std::vector<double>>();
    if (static_cast<Index>(theta.size()) != instance.spec.dim) {
      throw ConfigError("instance file: theta_star has the wrong dimension");
    }
    instance.theta_star = Eigen::Map<const Vector>(theta.data(), instance.spec.dim);
    const Index expected = instance.spec.static_contexts ? 1 : instance.spec.rounds;
    const json& slates = j.at("slates");
    if (static_cast<Index>(slates.size()) != expected) {
      throw ConfigError("instance file: expected " + std::to_string(expected) + " slates");
    }
    for (const json& s : slates) {
      instance.slates.emplace_back(instance.spec.users, instance.spec.arms, instance.spec.dim,
                                   s.get<std::vector<double>>());
    }
    return instance;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance file: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("instance file: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("instance file: ") + e.what());
  }
}

void save_instance(const EnvironmentInstance& instance, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << instance_to_json(instance) << '\n';
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

EnvironmentInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open instance file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

}  // namespace cab
