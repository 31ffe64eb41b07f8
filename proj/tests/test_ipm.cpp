#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace sonc;

namespace {

std::vector<double> sliceOf(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void expectDualFeasible(const IpmSolution& sol, const ConicProblem& prob) {
  const auto m = extractMultipliers(sol, prob);
  ASSERT_EQ(m.atoms.size(), prob.atoms.size());
  for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
    ConeAtom dual = prob.atoms[j];
    if (dual.kind == ConeKind::PowerCone) dual.kind = ConeKind::DualPowerCone;
    EXPECT_TRUE(membership(dual, sliceOf(m.atoms[j]), 1e-9)) << "atom " << j;
  }
}

}  // namespace

TEST(Ipm, SingleCircuitDualOfTheWorkedExample) {
  const auto p = fixtures::motzkinLike();
  const auto prob = assembleDual(p, {fixtures::c1()}, BoundPhase::Phase2);
  const auto sol = solveConic(prob, dualStart(p, BoundPhase::Phase2));
  ASSERT_EQ(sol.status, IpmStatus::Converged);
  EXPECT_NEAR(sol.objective, 7.0 / 8.0, 1e-7);
  const std::vector<double> want{1.0, 0.0, 0.25, 1.0 / 16, 1.0 / 16};
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(sol.y(static_cast<Eigen::Index>(i)), want[i], 1e-5) << i;
  EXPECT_LE(sol.gap, 1e-8);
  expectDualFeasible(sol, prob);
}

TEST(Ipm, RayMinimizationWithoutEqualities) {
  ConicProblem prob;
  prob.dim = 1;
  prob.c = Eigen::VectorXd::Ones(1);
  prob.E = Eigen::MatrixXd::Zero(0, 1);
  prob.d = Eigen::VectorXd::Zero(0);
  prob.atoms = {ConeAtom::ray(0)};
  const auto sol = solveConic(prob, Eigen::VectorXd::Ones(1));
  ASSERT_EQ(sol.status, IpmStatus::Converged);
  EXPECT_NEAR(sol.objective, 0.0, 1e-8);
  EXPECT_GT(sol.y(0), 0.0);
}

// ((y1, y2), y3) in P(1/2, 1/2), y2 = y3 = 1: feasible iff y1 >= 1.
ConicProblem boundaryProblem(double sign) {
  ConicProblem prob;
  prob.dim = 3;
  prob.c = Eigen::Vector3d(sign, 0.0, 0.0);
  prob.E = Eigen::MatrixXd::Zero(2, 3);
  prob.E(0, 1) = 1.0;
  prob.E(1, 2) = 1.0;
  prob.d = Eigen::Vector2d(1.0, 1.0);
  prob.atoms = {ConeAtom::power({0.5, 0.5}, {0, 1, 2})};
  return prob;
}

TEST(Ipm, ApproachesTheConeBoundary) {
  const auto prob = boundaryProblem(1.0);
  const auto sol = solveConic(prob, Eigen::Vector3d(4.0, 1.0, 1.0));
  ASSERT_EQ(sol.status, IpmStatus::Converged);
  EXPECT_NEAR(sol.y(0), 1.0, 1e-7);
  EXPECT_NEAR(sol.objective, 1.0, 1e-7);
  expectDualFeasible(sol, prob);
}

TEST(Ipm, DetectsUnboundedDirection) {
  const auto sol = solveConic(boundaryProblem(-1.0), Eigen::Vector3d(4.0, 1.0, 1.0));
  EXPECT_EQ(sol.status, IpmStatus::Unbounded);
}

TEST(Ipm, RejectsInfeasibleStart) {
  const auto prob = boundaryProblem(1.0);
  EXPECT_THROW(solveConic(prob, Eigen::Vector3d(0.5, 1.0, 1.0)), Error);
  EXPECT_THROW(solveConic(prob, Eigen::Vector3d(4.0, 2.0, 1.0)), Error);
}

// The optimal multipliers are not unique here (C1 may carry weight on its
// two nonconstant outer terms), so only the invariant parts are checked:
// the equality multiplier is the bound and the lifted atoms rebuild f.
TEST(Ipm, MultipliersRebuildTheObjective) {
  const auto p = fixtures::motzkinLike();
  const auto prob = assembleDual(p, {fixtures::c1(), fixtures::c2()}, BoundPhase::Phase2);
  const auto sol = solveConic(prob, dualStart(p, BoundPhase::Phase2));
  ASSERT_EQ(sol.status, IpmStatus::Converged);
  EXPECT_NEAR(sol.objective, 1.0, 1e-7);
  const auto m = extractMultipliers(sol, prob);
  EXPECT_NEAR(m.eq(0), 1.0, 1e-7);
  EXPECT_LT(m.stationarityResidual, 1e-6);
  // The constant term is taken by the bound, so C1's constant slot is idle.
  EXPECT_NEAR(m.atoms[0](0), 0.0, 1e-6);
}

TEST(Ipm, MultipliersAreDualFeasibleAlongThePath) {
  const auto p = fixtures::motzkinLike();
  const auto prob = assembleDual(p, {fixtures::c1(), fixtures::c2()}, BoundPhase::Phase2);
  for (double tol : {1e-1, 1e-3, 1e-6}) {
    IpmOptions opt;
    opt.gapTol = tol;
    const auto sol = solveConic(prob, dualStart(p, BoundPhase::Phase2), opt);
    ASSERT_EQ(sol.status, IpmStatus::Converged);
    EXPECT_LE(sol.gap, tol);
    expectDualFeasible(sol, prob);
  }
}

TEST(Ipm, PathIsMonotoneAndIteratesStayInterior) {
  const auto p = fixtures::motzkinLike();
  const auto prob = assembleDual(p, {fixtures::c1(), fixtures::c2()}, BoundPhase::Phase2);
  IpmOptions opt;
  opt.checkIterates = true;
  const auto sol = solveConic(prob, dualStart(p, BoundPhase::Phase2), opt);
  ASSERT_EQ(sol.status, IpmStatus::Converged);
  ASSERT_GT(sol.centered.size(), 2u);
  for (std::size_t k = 1; k < sol.centered.size(); ++k) {
    EXPECT_GT(sol.centered[k].t, sol.centered[k - 1].t);
    EXPECT_LE(sol.centered[k].objective, sol.centered[k - 1].objective + 1e-12);
  }
  EXPECT_FALSE(sol.snapshots.empty());
  const auto again = recenter(prob, sol.snapshots.front());
  EXPECT_EQ(again.status, IpmStatus::Converged);
  expectDualFeasible(again, prob);
}
