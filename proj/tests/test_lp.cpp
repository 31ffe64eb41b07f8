#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <limits>
#include <optional>

#include "sonc/lp.hpp"
#include "sonc/rng.hpp"

using namespace sonc;

namespace {

// Minimum over all basic feasible solutions, by enumerating column subsets.
std::optional<double> bruteForceMin(const LpProblem& lp) {
  const auto m = lp.A.rows(), k = lp.A.cols();
  std::optional<double> best;
  std::vector<int> pick(static_cast<std::size_t>(m));
  auto rec = [&](auto&& self, Eigen::Index from, Eigen::Index depth) -> void {
    if (depth == m) {
      Eigen::MatrixXd B(m, m);
      for (Eigen::Index i = 0; i < m; ++i) B.col(i) = lp.A.col(pick[static_cast<std::size_t>(i)]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
      if (!lu.isInvertible()) return;
      const Eigen::VectorXd xb = lu.solve(lp.b);
      if (xb.minCoeff() < -1e-9) return;
      double obj = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) obj += lp.c(pick[static_cast<std::size_t>(i)]) * xb(i);
      if (!best || obj < *best) best = obj;
      return;
    }
    for (Eigen::Index j = from; j < k; ++j) {
      pick[static_cast<std::size_t>(depth)] = static_cast<int>(j);
      self(self, j + 1, depth + 1);
    }
  };
  rec(rec, 0, 0);
  return best;
}

}  // namespace

TEST(Lp, BarycentricTwoByTwo) {
  LpProblem lp(2, 2);
  lp.A << 1, 1, 0, 4;
  lp.b << 1, 2;
  const auto r = solveLp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 0.5, 1e-12);
  EXPECT_NEAR(r.x(1), 0.5, 1e-12);
  std::vector<std::size_t> basis = r.basis;
  std::sort(basis.begin(), basis.end());
  EXPECT_EQ(basis, (std::vector<std::size_t>{0, 1}));
}

TEST(Lp, FixedVariable) {
  LpProblem lp(1, 1);
  lp.A << 1;
  lp.b << 1;
  lp.c << 1;
  const auto r = solveLp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(Lp, ContradictoryEqualitiesAreInfeasible) {
  LpProblem lp(2, 1);
  lp.A << 1, 1;
  lp.b << 1, 2;
  const auto r = solveLp(lp);
  EXPECT_EQ(r.status, LpStatus::Infeasible);
  EXPECT_GT(r.phaseOneObjective, 0.0);
}

TEST(Lp, UnboundedReportsARay) {
  // min -x1 s.t. x1 - x2 = 0
  LpProblem lp(1, 2);
  lp.A << 1, -1;
  lp.b << 0;
  lp.c << -1, 0;
  const auto r = solveLp(lp);
  ASSERT_EQ(r.status, LpStatus::Unbounded);
  EXPECT_LT(lp.c.dot(r.ray), 0.0);
  EXPECT_NEAR((lp.A * r.ray).norm(), 0.0, 1e-12);
  EXPECT_GE(r.ray.minCoeff(), -1e-12);
}

TEST(Lp, RedundantRowsAreTolerated) {
  LpProblem lp(3, 3);
  lp.A << 1, 1, 1, 2, 2, 2, 1, 0, 0;
  lp.b << 1, 2, 0.25;
  lp.c << 0, 1, 2;
  const auto r = solveLp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 0.75, 1e-12);
}

TEST(Lp, MatchesBasisEnumerationOnRandomProblems) {
  CounterRng rng(2024);
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = rng.uniformInt(1, 3), k = rng.uniformInt(m, 6);
    LpProblem lp(static_cast<std::size_t>(m), static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) lp.A(i, j) = static_cast<double>(rng.uniformInt(-3, 3));
      lp.b(i) = static_cast<double>(rng.uniformInt(-4, 4));
    }
    // Nonnegative costs keep the problem bounded.
    for (Eigen::Index j = 0; j < k; ++j) lp.c(j) = static_cast<double>(rng.uniformInt(0, 5));
    const auto oracle = bruteForceMin(lp);
    const auto r = solveLp(lp);
    if (!oracle) {
      EXPECT_EQ(r.status, LpStatus::Infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(r.status, LpStatus::Optimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, *oracle, 1e-9) << "trial " << trial;
    EXPECT_NEAR((lp.A * r.x - lp.b).cwiseAbs().maxCoeff(), 0.0, 1e-9);
    EXPECT_GE(r.x.minCoeff(), -1e-12);
    ++solved;
  }
  EXPECT_GT(solved, 50);
}

TEST(Lp, RejectsNonFiniteData) {
  LpProblem lp(1, 1);
  lp.A << std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solveLp(lp), Error);
}
