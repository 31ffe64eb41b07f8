#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"

using namespace sonc;

namespace {

std::vector<Exponent> workedSupport() {
  const auto p = fixtures::motzkinLike();
  std::vector<Exponent> out;
  for (const auto& t : p.terms()) out.push_back(t.exp);
  return out;
}

// Slice of y in circuit order (outer..., inner).
std::vector<double> circuitSlice(const std::vector<Exponent>& support, const std::vector<double>& y, const Circuit& c) {
  auto at = [&](const Exponent& e) {
    const auto it = std::find(support.begin(), support.end(), e);
    return y[static_cast<std::size_t>(it - support.begin())];
  };
  std::vector<double> out;
  for (const auto& a : c.outer) out.push_back(at(a));
  out.push_back(at(c.inner));
  return out;
}

}  // namespace

TEST(Cones, MembershipExamples) {
  const auto pc = ConeAtom::power({0.5, 0.5}, {0, 1, 2});
  EXPECT_TRUE(membership(pc, std::vector<double>{4.0, 1.0, 2.0}, 1e-12));
  EXPECT_TRUE(membership(pc, std::vector<double>{4.0, 1.0, -2.0}, 1e-12));
  EXPECT_FALSE(membership(pc, std::vector<double>{4.0, 1.0, 2.1}, 1e-12));
  EXPECT_FALSE(membership(pc, std::vector<double>{-1.0, 1.0, 0.0}, 1e-12));
  EXPECT_FALSE(isInterior(pc, std::vector<double>{4.0, 1.0, 2.0}));
  EXPECT_TRUE(isInterior(pc, std::vector<double>{4.0, 1.0, 1.9}));

  // Dual: |z| <= prod (v_i / lambda_i)^lambda_i, here (2 * 4)^(1/2) * (2 * 1)^(1/2) = 4.
  const auto dc = ConeAtom::dualPower({0.5, 0.5}, {0, 1, 2});
  EXPECT_TRUE(membership(dc, std::vector<double>{4.0, 1.0, 4.0}, 1e-12));
  EXPECT_FALSE(membership(dc, std::vector<double>{4.0, 1.0, 4.01}, 1e-12));

  const auto r = ConeAtom::ray(0);
  EXPECT_TRUE(membership(r, std::vector<double>{0.0}, 0.0));
  EXPECT_FALSE(membership(r, std::vector<double>{-1e-6}, 1e-9));
  EXPECT_THROW(membership(r, std::vector<double>{1.0, 2.0}, 0.0), Error);
}

TEST(Cones, RayBarrierAtOne) {
  const auto b = barrier(ConeAtom::ray(0), std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(b.value, 0.0);
  EXPECT_DOUBLE_EQ(b.gradient(0), -1.0);
  EXPECT_DOUBLE_EQ(b.hessian(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(b.nu, 1.0);
}

TEST(Cones, BarrierRejectsBoundaryAndDual) {
  const auto pc = ConeAtom::power({0.5, 0.5}, {0, 1, 2});
  EXPECT_THROW(barrier(pc, std::vector<double>{4.0, 1.0, 2.0}), Error);
  EXPECT_THROW(barrier(ConeAtom::dualPower({0.5, 0.5}, {0, 1, 2}), std::vector<double>{4.0, 1.0, 0.0}), Error);
}

TEST(Cones, PowerBarrierDerivativesMatchFiniteDifferences) {
  const auto pc = ConeAtom::power({0.5, 0.25, 0.25}, {0, 1, 2, 3});
  CounterRng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x{rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), 0.0};
    const double root = std::pow(x[0], 0.5) * std::pow(x[1], 0.25) * std::pow(x[2], 0.25);
    x[3] = rng.uniform(-0.9, 0.9) * root;
    const auto b = barrier(pc, x);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 4; ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const auto bp = barrier(pc, xp), bm = barrier(pc, xm);
      const double fd = (bp.value - bm.value) / (2 * h);
      const auto ii = static_cast<Eigen::Index>(i);
      EXPECT_NEAR(b.gradient(ii), fd, 1e-5 * (1.0 + std::abs(fd)));
      const Eigen::VectorXd hd = (bp.gradient - bm.gradient) / (2 * h);
      for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(b.hessian(k, ii), hd(k), 1e-4 * (1.0 + std::abs(hd(k))));
    }
  }
}

// Logarithmic homogeneity: F(tx) = F(x) - nu log t, hence <-grad F(x), x> = nu.
TEST(Cones, LogarithmicHomogeneity) {
  const auto pc = ConeAtom::power({2.0 / 3.0, 1.0 / 3.0}, {0, 1, 2});
  const std::vector<double> x{1.5, 0.7, -0.4};
  const auto b = barrier(pc, x);
  EXPECT_DOUBLE_EQ(b.nu, 3.0);
  const Eigen::Vector3d xv(x[0], x[1], x[2]);
  EXPECT_NEAR(-b.gradient.dot(xv), b.nu, 1e-12);
  EXPECT_NEAR((b.hessian * xv + b.gradient).norm(), 0.0, 1e-12);
  for (double t : {0.5, 2.0, 10.0}) {
    const std::vector<double> tx{t * x[0], t * x[1], t * x[2]};
    EXPECT_NEAR(barrier(pc, tx).value, b.value - b.nu * std::log(t), 1e-12);
  }
}

TEST(Cones, SlaterPointOnTheWorkedExample) {
  const auto support = workedSupport();
  const auto y = slaterPoint(support, SlaterMode::Phase2, 1.0 / 72.0);
  ASSERT_EQ(y.size(), support.size());
  EXPECT_EQ(y[0], 1.0);
  for (std::size_t i = 1; i < y.size(); ++i) {
    EXPECT_GT(y[i], 0.0);
    EXPECT_LT(y[i], 1.0);
  }
  for (const auto& c : {fixtures::c1(), fixtures::c2()}) {
    const auto slice = circuitSlice(support, y, c);
    const auto a = ConeAtom::power(c.lambda, [&] {
      std::vector<std::size_t> idx(slice.size());
      std::iota(idx.begin(), idx.end(), 0);
      return idx;
    }());
    EXPECT_TRUE(isInterior(a, slice));
  }
}

TEST(Cones, SlaterPointIsInteriorForEveryCircuit) {
  const auto p = fixtures::motzkinLike();
  const auto support = workedSupport();
  for (auto mode : {SlaterMode::Phase1, SlaterMode::Phase2}) {
    const auto y = slaterPoint(support, mode, defaultSlaterTheta(support));
    for (const auto& c : enumerateCircuits(p)) {
      const auto slice = circuitSlice(support, y, c);
      std::vector<std::size_t> idx(slice.size());
      std::iota(idx.begin(), idx.end(), 0);
      EXPECT_TRUE(isInterior(ConeAtom::power(c.lambda, idx), slice));
    }
    if (mode == SlaterMode::Phase1) {
      for (double v : y) EXPECT_LT(v, 1.0);
    } else {
      EXPECT_EQ(y[0], 1.0);
    }
  }
}

TEST(Cones, SlaterPointOnGeneratedSupports) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = generate({.n = 2, .d = 6, .termCount = 4, .seed = seed});
    std::vector<Exponent> support;
    for (const auto& t : p.terms()) support.push_back(t.exp);
    const auto y = slaterPoint(support, SlaterMode::Phase2, defaultSlaterTheta(support));
    for (const auto& c : enumerateCircuits(p)) {
      const auto slice = circuitSlice(support, y, c);
      std::vector<std::size_t> idx(slice.size());
      std::iota(idx.begin(), idx.end(), 0);
      EXPECT_TRUE(isInterior(ConeAtom::power(c.lambda, idx), slice)) << "seed " << seed;
    }
  }
}

TEST(Cones, DefaultThetaAndValidation) {
  EXPECT_DOUBLE_EQ(defaultSlaterTheta(workedSupport()), 1.0 / 40.0);
  EXPECT_DOUBLE_EQ(defaultSlaterTheta({Exponent{0, 0}}), 1.0);
  EXPECT_THROW(slaterPoint(workedSupport(), SlaterMode::Phase2, 0.0), Error);
  EXPECT_THROW(ConeAtom::power({0.5, 0.6}, {0, 1, 2}).validate(), Error);
  EXPECT_THROW(ConeAtom::power({0.5, 0.5}, {0, 1}).validate(), Error);
  EXPECT_THROW(ConeAtom::power({0.5, 0.5}, {0, 1, 1}).validate(), Error);
}
