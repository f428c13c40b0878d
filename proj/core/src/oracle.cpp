#include "cab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/random/uniform_int_distribution.hpp>

#include "cab/errors.hpp"

namespace cab {

void WelfareInstance::validate() const {
  if (linear_weights.rows() != values.rows() || linear_weights.cols() != values.cols()) {
    throw DimensionError("WelfareInstance: v is " + std::to_string(values.rows()) + "x" +
                         std::to_string(values.cols()) + " but w is " +
                         std::to_string(linear_weights.rows()) + "x" +
                         std::to_string(linear_weights.cols()));
  }
  if (values.size() > 0 && !(values.minCoeff() >= 0.0 && values.allFinite())) {
    throw ParameterError("WelfareInstance: values must be finite and nonnegative");
  }
  if (!linear_weights.allFinite()) {
    throw ParameterError("WelfareInstance: linear weights must be finite");
  }
}

double welfare_objective(const WelfareInstance& inst, const Allocation& alloc) {
  alloc.validate(inst.users(), inst.arms());
  std::vector<double> sums(static_cast<std::size_t>(inst.arms()), 0.0);
  double linear = 0.0;
  for (Index i = 0; i < inst.users(); ++i) {
    const int a = alloc[i];
    sums[static_cast<std::size_t>(a)] += inst.values(i, a);
    linear += inst.linear_weights(i, a);
  }
  double total = 0.0;
  for (double s : sums) total += inst.sat(s);
  return total + linear;
}

AllocationResult greedy_allocate(const WelfareInstance& inst, const GreedyOptions& options,
                                 Rng* rng) {
  inst.validate();
  const Index n = inst.users();
  const Index k = inst.arms();
  if (k == 0 && n > 0) throw DimensionError("greedy_allocate: no arms to allocate to");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (options.randomized_order) {
    if (rng == nullptr) throw ParameterError("greedy_allocate: randomized order needs an rng");
    // Fisher-Yates with a portable integer distribution.
    for (std::size_t j = order.size(); j > 1; --j) {
      boost::random::uniform_int_distribution<std::size_t> pick(0, j - 1);
      std::swap(order[j - 1], order[pick(*rng)]);
    }
  }

  const bool truncate = n > 0 && k > 0 && inst.linear_weights.minCoeff() < 0.0;
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  Allocation alloc = Allocation::constant(n, 0);
  for (Index i : order) {
    int best = 0;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (Index a = 0; a < k; ++a) {
      const double s = sums[static_cast<std::size_t>(a)];
      double gain = inst.sat(s + inst.values(i, a)) - inst.sat(s) + inst.linear_weights(i, a);
      if (truncate) gain = std::max(gain, 0.0);
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<int>(a);
      }
    }
    alloc[i] = best;
    sums[static_cast<std::size_t>(best)] += inst.values(i, best);
  }
  const double objective = welfare_objective(inst, alloc);
  return {std::move(alloc), objective};
}

AllocationResult brute_force_allocate(const WelfareInstance& inst) {
  inst.validate();
  const Index n = inst.users();
  const Index k = inst.arms();
  if (k == 0 && n > 0) throw DimensionError("brute_force_allocate: no arms to allocate to");

  std::uint64_t total = 1;
  for (Index i = 0; i < n; ++i) {
    total *= static_cast<std::uint64_t>(k);
    if (total > kBruteForceLimit) {
      throw SizeError("brute_force_allocate: K^N exceeds " + std::to_string(kBruteForceLimit));
    }
  }

  // Odometer over assignments, last user fastest: lexicographic order.
  Allocation current = Allocation::constant(n, 0);
  AllocationResult best{current, welfare_objective(inst, current)};
  for (std::uint64_t step = 1; step < total; ++step) {
    for (Index i = n - 1; i >= 0; --i) {
      if (++current[i] < k) break;
      current[i] = 0;
    }
    const double value = welfare_objective(inst, current);
    if (value > best.objective) {
      best.objective = value;
      best.allocation = current;
    }
  }
  return best;
}

}  // namespace cab
