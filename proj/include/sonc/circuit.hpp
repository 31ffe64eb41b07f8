#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "sonc/error.hpp"
#include "sonc/polynomial.hpp"

namespace sonc {

/// Outer exponents alpha_1..alpha_r, inner exponent beta and the barycentric
/// coordinates lambda of beta with respect to the outer exponents.
struct Circuit {
  std::vector<Exponent> outer;
  Exponent inner;
  std::vector<double> lambda;

  std::size_t size() const { return outer.size(); }

  /// Identity of the circuit as a point set: sorted outer exponents, inner.
  std::pair<std::vector<Exponent>, Exponent> key() const {
    std::vector<Exponent> o = outer;
    std::sort(o.begin(), o.end());
    return {std::move(o), inner};
  }

  friend bool operator==(const Circuit& a, const Circuit& b) { return a.key() == b.key(); }
  friend bool operator<(const Circuit& a, const Circuit& b) {
    if (a.inner != b.inner) return a.inner < b.inner;
    return a.key().first < b.key().first;
  }
};

struct CircuitPolyCoeffs {
  std::vector<double> outer;
  double inner = 0.0;
};

inline constexpr double kLambdaFloor = 1e-10;
inline constexpr double kBarycentricResidualTol = 1e-9;

/// Solves [alpha_i; 1] lambda = [beta; 1] and validates the circuit
/// conditions. The outer order given by the caller is preserved.
inline Circuit makeCircuit(std::vector<Exponent> outer, Exponent inner) {
  if (outer.empty()) throw Error(ErrorKind::InvalidArgument, "circuit needs outer exponents");
  const std::size_t n = inner.dim();
  for (const auto& a : outer) {
    if (a.dim() != n) throw Error(ErrorKind::DimensionMismatch, "circuit exponents of mixed length");
  }
  for (const auto& a : outer) {
    if (!a.isEven()) throw Error(ErrorKind::OddOuterExponent, a.str());
  }
  for (const auto& a : outer) {
    if (a == inner) throw Error(ErrorKind::InnerNotInteriorPoint, "inner exponent " + inner.str() + " is an outer exponent");
  }
  const auto r = static_cast<Eigen::Index>(outer.size());
  const auto rows = static_cast<Eigen::Index>(n + 1);
  Eigen::MatrixXd M(rows, r);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < n; ++i) M(static_cast<Eigen::Index>(i), j) = outer[static_cast<std::size_t>(j)][i];
    M(rows - 1, j) = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = inner[i];
  rhs(rows - 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (lu.rank() < r) throw Error(ErrorKind::NotAffinelyIndependent, "outer exponents of inner " + inner.str());
  const Eigen::VectorXd lambda = lu.solve(rhs);
  const double residual = (M * lambda - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= kBarycentricResidualTol))
    throw Error(ErrorKind::InnerNotInteriorPoint, inner.str() + " not in the affine hull of the outer exponents");
  if (lambda.minCoeff() <= kLambdaFloor)
    throw Error(ErrorKind::InnerNotInteriorPoint, inner.str() + " not in the relative interior");

  Circuit c;
  c.outer = std::move(outer);
  c.inner = std::move(inner);
  c.lambda.assign(lambda.data(), lambda.data() + lambda.size());
  return c;
}

/// Outer exponents sorted graded-lex, lambda permuted alongside.
inline Circuit canonical(const Circuit& c) {
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.outer[a] < c.outer[b]; });
  Circuit out;
  out.inner = c.inner;
  for (auto i : order) {
    out.outer.push_back(c.outer[i]);
    out.lambda.push_back(c.lambda[i]);
  }
  return out;
}

struct MarginResult {
  double margin;
  bool nonneg;
};

/// Nonnegativity test for a circuit polynomial:
/// margin = prod (f_i / lambda_i)^lambda_i - |f_beta|, evaluated in log space.
/// A negative outer coefficient yields margin = -inf; a zero one makes the
/// product zero.
inline MarginResult nonnegativityMargin(const Circuit& c, const CircuitPolyCoeffs& coeffs) {
  if (coeffs.outer.size() != c.size()) throw Error(ErrorKind::DimensionMismatch, "circuit coefficient count");
  double logBound = 0.0;
  bool zeroOuter = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(coeffs.outer[i] >= 0.0)) return {-std::numeric_limits<double>::infinity(), false};
    if (coeffs.outer[i] == 0.0) zeroOuter = true;
    else logBound += c.lambda[i] * (std::log(coeffs.outer[i]) - std::log(c.lambda[i]));
  }
  const double margin = (zeroOuter ? 0.0 : std::exp(logBound)) - std::abs(coeffs.inner);
  const bool alternative1 = c.inner.isEven() && coeffs.inner >= 0.0;
  return {margin, margin >= 0.0 || alternative1};
}

inline constexpr std::size_t kMaxEnumerationSupport = 14;

/// Every circuit on supp(p) with outer exponents drawn from the even support.
/// Exponential; meant as an oracle on small supports.
inline std::vector<Circuit> enumerateCircuits(const SparsePolynomial& p,
                                              const std::optional<Exponent>& innerOnly = std::nullopt) {
  if (p.size() > kMaxEnumerationSupport)
    throw Error(ErrorKind::SupportTooLargeForEnumeration,
                std::to_string(p.size()) + " support points (limit " + std::to_string(kMaxEnumerationSupport) + ")");
  const auto& even = p.evenSupport();
  const std::size_t maxOuter = std::min(even.size(), p.dim() + 1);

  std::vector<Exponent> inners;
  if (innerOnly) {
    inners.push_back(*innerOnly);
  } else {
    for (const auto& t : p.terms()) inners.push_back(t.exp);
  }

  std::set<std::pair<std::vector<Exponent>, Exponent>> seen;
  std::vector<Circuit> out;
  std::vector<std::size_t> subset;
  auto visit = [&]() {
    std::vector<Exponent> outer;
    for (auto i : subset) outer.push_back(p.exponent(i));
    for (const auto& beta : inners) {
      if (std::find(outer.begin(), outer.end(), beta) != outer.end()) continue;
      try {
        Circuit c = canonical(makeCircuit(outer, beta));
        if (seen.insert(c.key()).second) out.push_back(std::move(c));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::NotAffinelyIndependent) return;
        if (e.kind() != ErrorKind::InnerNotInteriorPoint) throw;
      }
    }
  };
  // Subsets of the even support in lexicographic index order.
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (subset.size() >= 2) visit();
    if (subset.size() == maxOuter) return;
    for (std::size_t k = start; k < even.size(); ++k) {
      subset.push_back(even[k]);
      self(self, k + 1);
      subset.pop_back();
    }
  };
  recurse(recurse, 0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sonc
