#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "cab/errors.hpp"
#include "cab/oracle.hpp"
#include "test_oracles.hpp"

namespace cab {
namespace {

using testing::enumerate_optimum;
using testing::to_grid;

Matrix random_values(Index n, Index k, std::mt19937_64& gen, double hi = 1.0) {
  std::uniform_real_distribution<double> unif(0.0, hi);
  Matrix v(n, k);
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < k; ++a) v(i, a) = unif(gen);
  return v;
}

TEST(Greedy, SingleUserPicksLargestValue) {
  Matrix v(1, 2);
  v << 0.9, 0.1;
  const auto result = greedy_allocate(WelfareInstance(v, SatisfactionFunction::identity()));
  EXPECT_EQ(result.allocation, Allocation({0}));
  EXPECT_DOUBLE_EQ(result.objective, 0.9);
}

TEST(Greedy, IntroductionExampleConcentratesOnBestArm) {
  // Evaluations 0.1 .. 0.9, arms scale them by 1, 0.9 and 0.8.
  Matrix v(9, 3);
  for (Index i = 0; i < 9; ++i) {
    const double e = 0.1 * static_cast<double>(i + 1);
    v.row(i) << e, 0.9 * e, 0.8 * e;
  }
  const auto result = greedy_allocate(WelfareInstance(v, SatisfactionFunction::identity()));
  EXPECT_EQ(result.allocation, Allocation::constant(9, 0));
  EXPECT_NEAR(result.objective, 4.5, 1e-12);
}

TEST(Greedy, EmptyInstance) {
  const auto result = greedy_allocate(WelfareInstance(Matrix(0, 3), SatisfactionFunction::identity()));
  EXPECT_EQ(result.allocation.users(), 0);
  EXPECT_EQ(result.objective, 0.0);
}

TEST(Greedy, TiesGoToSmallestArm) {
  const auto result = greedy_allocate(
      WelfareInstance(Matrix::Constant(3, 4, 0.25), SatisfactionFunction::identity()));
  EXPECT_EQ(result.allocation, Allocation::constant(3, 0));
}

TEST(Greedy, HalfApproximationOnRandomMonotoneInstances) {
  std::mt19937_64 gen(600);
  std::uniform_real_distribution<double> beta_dist(0.2, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(gen() % 6);
    const Index k = 1 + static_cast<Index>(gen() % 3);
    const Matrix v = random_values(n, k, gen);
    const Matrix w = random_values(n, k, gen, 0.5);
    const auto sat = SatisfactionFunction::capped_linear(beta_dist(gen));
    const WelfareInstance inst(v, w, sat);
    const double greedy = greedy_allocate(inst).objective;
    const double best = brute_force_allocate(inst).objective;
    EXPECT_GE(greedy, 0.5 * best) << "trial " << trial;
    EXPECT_LE(greedy, best + 1e-12) << "trial " << trial;
  }
}

TEST(Greedy, ExactForIdentitySatisfaction) {
  std::mt19937_64 gen(601);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(gen() % 6);
    const Index k = 1 + static_cast<Index>(gen() % 3);
    const WelfareInstance inst(random_values(n, k, gen), SatisfactionFunction::identity());
    const auto greedy = greedy_allocate(inst);
    const auto best = brute_force_allocate(inst);
    EXPECT_EQ(greedy.objective, best.objective) << "trial " << trial;
    EXPECT_EQ(greedy.allocation, best.allocation) << "trial " << trial;
  }
}

TEST(Greedy, TruncationKeepsTrueObjective) {
  // Negative weights: the floored gains tie at zero, yet the reported value
  // is the untruncated objective of the chosen allocation.
  Matrix v = Matrix::Zero(2, 2);
  Matrix w(2, 2);
  w << -1.0, -0.5, -2.0, -3.0;
  const WelfareInstance inst(v, w, SatisfactionFunction::capped_linear(1.0));
  const auto result = greedy_allocate(inst);
  EXPECT_EQ(result.allocation, Allocation({0, 0}));
  EXPECT_DOUBLE_EQ(result.objective, -3.0);
  EXPECT_DOUBLE_EQ(result.objective, welfare_objective(inst, result.allocation));
}

TEST(Greedy, ObjectiveMatchesWelfareObjective) {
  std::mt19937_64 gen(602);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix v = random_values(5, 3, gen);
    Matrix w(5, 3);
    for (Index i = 0; i < 5; ++i)
      for (Index a = 0; a < 3; ++a) w(i, a) = 0.3 * normal(gen);
    const WelfareInstance inst(v, w, SatisfactionFunction::capped_linear(1.0));
    const auto result = greedy_allocate(inst);
    EXPECT_EQ(result.objective, welfare_objective(inst, result.allocation));
    EXPECT_LE(result.objective, brute_force_allocate(inst).objective + 1e-12);
  }
}

TEST(Greedy, RandomizedOrderIsDeterministicPerSeed) {
  std::mt19937_64 gen(603);
  const WelfareInstance inst(random_values(6, 3, gen), SatisfactionFunction::capped_linear(1.0));
  Rng a(42);
  Rng b(42);
  const auto ra = greedy_allocate(inst, {true}, &a);
  const auto rb = greedy_allocate(inst, {true}, &b);
  EXPECT_EQ(ra.allocation, rb.allocation);
  EXPECT_GE(ra.objective, 0.5 * brute_force_allocate(inst).objective);
}

TEST(Greedy, SaturatedCapsAreFilledEvenly) {
  // Equal values and caps that hold exactly two users: greedy fills the
  // arms one after another, so each ends with two users and sum beta.
  const WelfareInstance inst(Matrix::Constant(6, 3, 0.5), SatisfactionFunction::capped_linear(1.0));
  const auto result = greedy_allocate(inst);
  EXPECT_EQ(result.allocation.counts(3), std::vector<int>({2, 2, 2}));
  EXPECT_EQ(result.objective, 3.0);
  EXPECT_EQ(result.objective, brute_force_allocate(inst).objective);
}

TEST(Greedy, NoArmOvershootsCapWhileAnotherHasRoom) {
  // User values equal across arms. An arm exceeds beta by more than one
  // user's value only once every arm has reached beta.
  std::mt19937_64 gen(604);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(gen() % 10);
    const Index k = 2 + static_cast<Index>(gen() % 3);
    const Matrix per_user = random_values(n, 1, gen);
    const Matrix v = per_user.replicate(1, k);
    const double beta = 0.5 + 0.5 * static_cast<double>(trial % 4);
    const auto result = greedy_allocate(WelfareInstance(v, SatisfactionFunction::capped_linear(beta)));
    std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
    for (Index i = 0; i < n; ++i) sums[static_cast<std::size_t>(result.allocation[i])] += per_user(i, 0);
    const bool all_full = std::all_of(sums.begin(), sums.end(), [&](double s) { return s >= beta; });
    if (all_full) continue;
    const double largest = per_user.maxCoeff();
    for (double s : sums) EXPECT_LE(s, beta + largest + 1e-12) << "trial " << trial;
  }
}

TEST(BruteForce, SingleUserIsArgmax) {
  Matrix v(1, 3);
  v << 0.2, 0.7, 0.4;
  Matrix w(1, 3);
  w << 0.6, 0.0, 0.1;
  const auto result = brute_force_allocate(WelfareInstance(v, w, SatisfactionFunction::capped_linear(1.0)));
  EXPECT_EQ(result.allocation, Allocation({0}));
  EXPECT_DOUBLE_EQ(result.objective, 0.8);
}

TEST(BruteForce, ConcavityPenalizesConcentration) {
  Matrix v(2, 2);
  v << 1, 1, 1, 1;
  const auto result = brute_force_allocate(WelfareInstance(v, SatisfactionFunction::capped_linear(1.0)));
  EXPECT_EQ(result.allocation, Allocation({0, 1}));
  EXPECT_DOUBLE_EQ(result.objective, 2.0);
  EXPECT_DOUBLE_EQ(welfare_objective(WelfareInstance(v, SatisfactionFunction::capped_linear(1.0)),
                                     Allocation({0, 0})),
                   1.0);
}

TEST(BruteForce, IdentityIsSumOfRowMaxima) {
  std::mt19937_64 gen(605);
  const Matrix v = random_values(5, 3, gen);
  const auto result = brute_force_allocate(WelfareInstance(v, SatisfactionFunction::identity()));
  EXPECT_NEAR(result.objective, v.rowwise().maxCoeff().sum(), 1e-12);
}

TEST(BruteForce, MatchesRecursiveEnumeration) {
  std::mt19937_64 gen(606);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(gen() % 5);
    const Index k = 1 + static_cast<Index>(gen() % 3);
    const Matrix v = random_values(n, k, gen);
    Matrix w(n, k);
    for (Index i = 0; i < n; ++i)
      for (Index a = 0; a < k; ++a) w(i, a) = 0.2 * normal(gen);
    const auto sat = SatisfactionFunction::capped_linear(0.8);
    const auto oracle = enumerate_optimum(to_grid(v), to_grid(w), [](double x) { return std::min(x, 0.8); });
    EXPECT_NEAR(brute_force_allocate(WelfareInstance(v, w, sat)).objective, oracle.value, 1e-12);
  }
}

TEST(BruteForce, UserPermutationInvariance) {
  std::mt19937_64 gen(607);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix v = random_values(5, 3, gen);
    std::vector<Index> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    Matrix permuted(5, 3);
    for (Index i = 0; i < 5; ++i) permuted.row(i) = v.row(perm[static_cast<std::size_t>(i)]);
    const auto sat = SatisfactionFunction::capped_linear(1.2);
    EXPECT_NEAR(brute_force_allocate(WelfareInstance(v, sat)).objective,
                brute_force_allocate(WelfareInstance(permuted, sat)).objective, 1e-12);
  }
}

TEST(BruteForce, BalancedAllocationsAreOptimalWithEqualValues) {
  const WelfareInstance inst(Matrix::Constant(4, 2, 0.5), SatisfactionFunction::capped_linear(1.0));
  const auto result = brute_force_allocate(inst);
  EXPECT_EQ(result.objective, 2.0);
  EXPECT_EQ(result.allocation, Allocation({0, 0, 1, 1}));
  EXPECT_EQ(welfare_objective(inst, Allocation({1, 0, 1, 0})), 2.0);
  EXPECT_LT(welfare_objective(inst, Allocation({0, 0, 0, 1})), 2.0);
}

TEST(BruteForce, SizeGuard) {
  // 2^20 = 1048576 > 10^6.
  EXPECT_THROW(brute_force_allocate(WelfareInstance(Matrix::Zero(20, 2), SatisfactionFunction::identity())),
               SizeError);
  EXPECT_NO_THROW(brute_force_allocate(WelfareInstance(Matrix::Zero(6, 10), SatisfactionFunction::identity())));
}

TEST(WelfareInstance, Validation) {
  Matrix v = Matrix::Constant(2, 2, 0.5);
  v(1, 1) = -0.1;
  EXPECT_THROW(greedy_allocate(WelfareInstance(v, SatisfactionFunction::identity())), ParameterError);
  EXPECT_THROW(greedy_allocate(WelfareInstance(Matrix::Zero(2, 2), Matrix::Zero(2, 3),
                                               SatisfactionFunction::identity())),
               DimensionError);
}

}  // namespace
}  // namespace cab
