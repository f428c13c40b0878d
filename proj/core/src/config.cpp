#include "cab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cab/errors.hpp"

namespace cab {

namespace {

using boost::property_tree::ptree;

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

double to_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("'" + std::string(key) + "': '" + t + "' is not a number");
  }
  return value;
}

template <typename Int>
Int to_integer(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  Int value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("'" + std::string(key) + "': '" + t + "' is not an integer");
  }
  return value;
}

bool to_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("'" + std::string(key) + "': '" + t + "' is not a boolean");
}

void set_experiment_key(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const std::string full = "experiment." + key;
  if (key == "seeds") {
    config.n_seeds = to_integer<int>(full, value);
  } else if (key == "seed") {
    config.env.seed = to_integer<std::uint64_t>(full, value);
  } else if (key == "output_dir") {
    config.output_dir = trim(value);
  } else if (key == "emit_per_round") {
    config.emit_per_round = to_bool(full, value);
  } else if (key == "jobs") {
    config.jobs = to_integer<int>(full, value);
  } else if (key == "sweep") {
    const std::string name = trim(value);
    if (name.empty() || name == "none") {
      config.sweep.reset();
    } else {
      Sweep sweep = config.sweep.value_or(Sweep{});
      sweep.parameter = parse_sweep_parameter(name);
      config.sweep = sweep;
    }
  } else if (key == "sweep_values") {
    Sweep sweep = config.sweep.value_or(Sweep{});
    sweep.values = parse_number_list(value);
    config.sweep = sweep;
  } else {
    throw ConfigError("unknown key '" + full + "'");
  }
}

void set_environment_key(SyntheticSpec& env, const std::string& key, const std::string& value) {
  const std::string full = "environment." + key;
  if (key == "users") {
    env.users = to_integer<Index>(full, value);
  } else if (key == "arms") {
    env.arms = to_integer<Index>(full, value);
  } else if (key == "dim") {
    env.dim = to_integer<Index>(full, value);
  } else if (key == "rounds") {
    env.rounds = to_integer<Index>(full, value);
  } else if (key == "popularity") {
    env.popularity = to_double(full, value);
  } else if (key == "beta") {
    env.beta = to_double(full, value);
  } else if (key == "family") {
    try {
      env.family = parse_link_family(trim(value));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "normalize_features") {
    env.normalize_features = to_bool(full, value);
  } else if (key == "static_contexts") {
    env.static_contexts = to_bool(full, value);
  } else if (key == "certified_radius") {
    env.certified_radius = to_double(full, value);
  } else if (key == "seed") {
    env.seed = to_integer<std::uint64_t>(full, value);
  } else {
    throw ConfigError("unknown key '" + full + "'");
  }
}

void set_policy_key(PolicySettings& policy, const std::string& key, const std::string& value) {
  const std::string full = "policy." + policy.label + "." + key;
  if (key == "kind") {
    try {
      policy.kind = parse_policy_kind(trim(value));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "lambda0") {
    policy.lambda0 = to_double(full, value);
  } else if (key == "c1") {
    policy.c1 = to_double(full, value);
  } else if (key == "a") {
    policy.a = to_double(full, value);
  } else if (key == "gamma") {
    policy.gamma = to_double(full, value);
  } else if (key == "delta") {
    policy.delta = to_double(full, value);
  } else if (key == "fairx_samples") {
    policy.fairx_samples = to_integer<int>(full, value);
  } else if (key == "use_theorem_constants") {
    policy.use_theorem_constants = to_bool(full, value);
  } else if (key == "stale_hessian") {
    policy.stale_hessian = to_bool(full, value);
  } else if (key == "randomized_greedy_order") {
    policy.randomized_greedy_order = to_bool(full, value);
  } else {
    throw ConfigError("unknown key '" + full + "'");
  }
}

// Section names in file order. The INI reader drops sections without keys,
// but "[policy.random]" alone is a meaningful entry.
std::vector<std::string> section_headers(const std::string& text) {
  std::vector<std::string> names;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const std::string t = trim(line);
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']') names.push_back(trim(t.substr(1, t.size() - 2)));
  }
  return names;
}

PolicySettings* find_policy(ExperimentConfig& config, std::string_view label) {
  for (PolicySettings& p : config.policies) {
    if (p.label == label) return &p;
  }
  return nullptr;
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    values.push_back(to_double("list", item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return values;
}

ExperimentConfig parse_config(const std::string& text) {
  ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  ExperimentConfig config = ExperimentConfig::defaults();
  config.policies.clear();
  constexpr std::string_view kPolicyPrefix = "policy.";
  const std::vector<std::string> headers = section_headers(text);
  for (const auto& [name, node] : tree) {
    if (std::find(headers.begin(), headers.end(), name) == headers.end()) {
      throw ConfigError("config: key '" + name + "' outside any section");
    }
  }
  const ptree empty;
  for (const std::string& section : headers) {
    const auto found = tree.find(section);
    const ptree& body = found == tree.not_found() ? empty : found->second;
    if (section == "experiment") {
      for (const auto& [key, node] : body) set_experiment_key(config, key, node.data());
    } else if (section == "environment") {
      for (const auto& [key, node] : body) set_environment_key(config.env, key, node.data());
    } else if (section.starts_with(kPolicyPrefix) && section.size() > kPolicyPrefix.size()) {
      const std::string label = section.substr(kPolicyPrefix.size());
      PolicySettings policy;
      policy.label = label;
      try {
        policy.kind = parse_policy_kind(body.get<std::string>("kind", label));
      } catch (const ParameterError& e) {
        throw ConfigError("section [" + section + "]: " + e.what());
      }
      for (const auto& [key, node] : body) set_policy_key(policy, key, node.data());
      config.policies.push_back(std::move(policy));
    } else {
      throw ConfigError("unknown config section [" + section + "]");
    }
  }
  if (config.policies.empty()) config.policies = ExperimentConfig::defaults().policies;
  if (config.sweep && config.sweep->values.empty()) {
    throw ConfigError("config: sweep declared without sweep_values");
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string path = trim(assignment.substr(0, eq));
  const std::string value = std::string(assignment.substr(eq + 1));
  const auto dot = path.find('.');
  if (dot == std::string::npos) throw ConfigError("override key '" + path + "' needs a section");
  const std::string section = path.substr(0, dot);
  const std::string rest = path.substr(dot + 1);
  if (section == "experiment") {
    set_experiment_key(config, rest, value);
  } else if (section == "environment") {
    set_environment_key(config.env, rest, value);
  } else if (section == "policies") {
    for (PolicySettings& p : config.policies) set_policy_key(p, rest, value);
  } else if (section == "policy") {
    const auto dot2 = rest.rfind('.');
    if (dot2 == std::string::npos) throw ConfigError("override '" + path + "' needs policy.<label>.<key>");
    const std::string label = rest.substr(0, dot2);
    PolicySettings* p = find_policy(config, label);
    if (!p) throw ConfigError("override names unknown policy '" + label + "'");
    set_policy_key(*p, rest.substr(dot2 + 1), value);
  } else {
    throw ConfigError("unknown override section '" + section + "'");
  }
}

ExperimentConfig figure_config(std::string_view panel) {
  ExperimentConfig config = ExperimentConfig::defaults();
  if (panel == "2a") {
    config.emit_per_round = true;
  } else if (panel == "2b") {
    config.sweep = Sweep{SweepParameter::Beta, {1.0, 2.0, 5.0, 10.0, 20.0}};
    config.emit_per_round = false;
  } else if (panel == "2c") {
    config.sweep = Sweep{SweepParameter::Popularity, {0.0, 0.25, 0.5, 0.75, 1.0}};
    config.emit_per_round = false;
  } else if (panel == "2d" || panel == "2e") {
    config.env.popularity = 1.0;
    config.emit_per_round = false;
  } else {
    throw ConfigError("unknown figure panel '" + std::string(panel) +
                      "' (expected 2a, 2b, 2c, 2d or 2e)");
  }
  return config;
}

}  // namespace cab
