#pragma once

#include <cstdint>

#include "cab/glm.hpp"
#include "cab/rng.hpp"

namespace cab {

/// Allocation problem
///   max_pi  sum_a r(sum_{i in pi^{-1}(a)} v_i(a)) + sum_i w_i(pi(i)).
/// values (v) must be nonnegative; linear_weights (w) may be negative.
struct WelfareInstance {
  Matrix values;
  Matrix linear_weights;
  SatisfactionFunction sat = SatisfactionFunction::identity();

  WelfareInstance() = default;
  WelfareInstance(Matrix v, Matrix w, SatisfactionFunction r)
      : values(std::move(v)), linear_weights(std::move(w)), sat(r) {}
  /// w = 0.
  WelfareInstance(Matrix v, SatisfactionFunction r)
      : values(std::move(v)), linear_weights(Matrix::Zero(values.rows(), values.cols())), sat(r) {}

  Index users() const noexcept { return values.rows(); }
  Index arms() const noexcept { return values.cols(); }

  /// Throws DimensionError on shape mismatch, ParameterError on negative or
  /// non-finite v.
  void validate() const;
};

struct AllocationResult {
  Allocation allocation;
  double objective = 0.0;
};

/// Objective of `alloc` on `inst`. Arm sums accumulate in user-index order,
/// so equal allocations always give bitwise-equal values.
double welfare_objective(const WelfareInstance& inst, const Allocation& alloc);

struct GreedyOptions {
  /// Visit users in a random permutation drawn from the supplied generator
  /// instead of index order.
  bool randomized_order = false;
};

/// Greedy submodular welfare.
///
/// Each user in turn goes to the arm with the largest marginal gain
/// r(S_a + v_i(a)) - r(S_a) + w_i(a), where S_a is the running value sum at
/// arm a. When any w is negative the gains are floored at zero before the
/// comparison. Ties go to the smallest arm index. The returned objective is
/// the untruncated value of the allocation.
///
/// For w >= 0 the objective is at least half the optimum, and exact when r
/// is linear.
AllocationResult greedy_allocate(const WelfareInstance& inst, const GreedyOptions& options = {},
                                 Rng* rng = nullptr);

inline constexpr std::uint64_t kBruteForceLimit = 1'000'000;

/// Exact maximizer by enumerating all K^N allocations in lexicographic
/// order; the first (smallest) optimal assignment wins ties. Throws
/// SizeError when K^N exceeds kBruteForceLimit.
AllocationResult brute_force_allocate(const WelfareInstance& inst);

}  // namespace cab
