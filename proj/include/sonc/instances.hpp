#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "sonc/bound.hpp"
#include "sonc/circuit.hpp"
#include "sonc/error.hpp"
#include "sonc/ipm.hpp"
#include "sonc/polynomial.hpp"
#include "sonc/rng.hpp"

namespace sonc {

struct GeneratorSpec {
  std::size_t n = 2;
  int d = 4;
  /// Number of interior (non-anchor) terms.
  std::size_t termCount = 2;
  int anchorLow = 1, anchorHigh = 5;
  int coefLow = -5, coefHigh = 5;
  std::uint64_t seed = 0;
};

/// Componentwise even exponents of total degree < d, origin excluded, in
/// graded-lex order.
inline std::vector<Exponent> interiorEvenExponents(std::size_t n, int d) {
  std::vector<Exponent> out;
  std::vector<int> e(n, 0);
  // Half-exponents h with sum h < d / 2.
  const int half = d / 2;
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i == n) {
      if (std::any_of(e.begin(), e.end(), [](int v) { return v != 0; })) out.emplace_back(e);
      return;
    }
    for (int h = 0; h <= left; ++h) {
      e[i] = 2 * h;
      self(self, i + 1, left - h);
    }
    e[i] = 0;
  };
  if (half >= 1) rec(rec, 0, half - 1);
  std::sort(out.begin(), out.end());
  return out;
}

/// Random polynomial with a simplex Newton polytope. Draws from
/// CounterRng(seed) in this order:
///   1. constant, then x_i^d for i = 1..n: uniformInt(anchorLow, anchorHigh);
///   2. termCount steps of a partial Fisher-Yates shuffle over
///      interiorEvenExponents(n, d): step k swaps k with uniformInt(k, N-1);
///   3. per chosen exponent, in shuffle order: uniformInt over the nonzero
///      integers of [coefLow, coefHigh] (zero skipped by index shift).
inline SparsePolynomial generate(const GeneratorSpec& spec) {
  if (spec.n == 0) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  if (spec.d <= 0 || spec.d % 2 != 0) throw Error(ErrorKind::InvalidArgument, "degree must be even and positive");
  if (spec.anchorLow <= 0 || spec.anchorLow > spec.anchorHigh || spec.coefLow > spec.coefHigh)
    throw Error(ErrorKind::InvalidArgument, "coefficient ranges");
  if (spec.coefLow == 0 && spec.coefHigh == 0) throw Error(ErrorKind::InvalidArgument, "coefficient range has no nonzero value");
  std::vector<Exponent> pool = interiorEvenExponents(spec.n, spec.d);
  if (spec.termCount > pool.size())
    throw Error(ErrorKind::NotEnoughInteriorMonomials, std::to_string(spec.termCount) + " requested, " +
                                                           std::to_string(pool.size()) + " available for n=" +
                                                           std::to_string(spec.n) + ", d=" + std::to_string(spec.d));
  CounterRng rng(spec.seed);
  std::vector<std::pair<Exponent, double>> terms;
  terms.emplace_back(Exponent::zero(spec.n), static_cast<double>(rng.uniformInt(spec.anchorLow, spec.anchorHigh)));
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::vector<int> e(spec.n, 0);
    e[i] = spec.d;
    terms.emplace_back(Exponent(std::move(e)), static_cast<double>(rng.uniformInt(spec.anchorLow, spec.anchorHigh)));
  }
  const std::size_t N = pool.size();
  for (std::size_t k = 0; k < spec.termCount; ++k) {
    const auto j = static_cast<std::size_t>(rng.uniformInt(static_cast<std::int64_t>(k), static_cast<std::int64_t>(N - 1)));
    std::swap(pool[k], pool[j]);
  }
  const bool zeroInside = spec.coefLow <= 0 && spec.coefHigh >= 0;
  for (std::size_t k = 0; k < spec.termCount; ++k) {
    std::int64_t c = rng.uniformInt(spec.coefLow, spec.coefHigh - (zeroInside ? 1 : 0));
    if (zeroInside && c >= 0) ++c;
    terms.emplace_back(pool[k], static_cast<double>(c));
  }
  return SparsePolynomial::fromTerms(spec.n, terms);
}

inline constexpr std::size_t kOracleMaxSupport = 12;

/// Bound from one Phase2 solve over every circuit on the support; nullopt
/// when no SONC bound exists. Returns the dual value f^T y, which equals the
/// optimal bound up to the solver gap.
inline std::optional<double> oracleBound(const SparsePolynomial& p, const IpmOptions& opt = {}) {
  if (p.size() > kOracleMaxSupport)
    throw Error(ErrorKind::SupportTooLargeForEnumeration,
                std::to_string(p.size()) + " support points (oracle limit " + std::to_string(kOracleMaxSupport) + ")");
  for (auto v : p.vertices()) {
    const Exponent& e = p.exponent(v);
    if (!e.isEven() || (!e.isZero() && p.coef(v) < 0.0)) return std::nullopt;
  }
  const std::vector<Circuit> all = enumerateCircuits(p);
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p.isMonomialSquare(i)) continue;
    const bool covered = std::any_of(all.begin(), all.end(), [&](const Circuit& c) { return c.inner == p.exponent(i); });
    if (!covered) return std::nullopt;
  }
  const ConicProblem prob = assembleDual(p, all, BoundPhase::Phase2);
  const IpmSolution sol = solveConic(prob, dualStart(p, BoundPhase::Phase2), opt);
  if (sol.status == IpmStatus::Unbounded) return std::nullopt;
  if (sol.status != IpmStatus::Converged) throw Error(ErrorKind::NumericalFailure, std::string("oracle: ") + to_string(sol.status));
  return sol.objective;
}

struct LocalMinResult {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;
  /// False when every start diverged (value stays +inf).
  bool found = false;
  std::size_t diverged = 0;
};

struct LocalMinOptions {
  std::size_t starts = 50;
  std::uint64_t seed = 0;
  double box = 2.0;
  std::size_t maxIters = 2000;
  double divergence = 1e6;
};

namespace detail {

// Gradient descent with Armijo backtracking from z; nullopt on divergence.
inline std::optional<std::pair<double, std::vector<double>>> descend(const SparsePolynomial& p, std::vector<double> z,
                                                                     const LocalMinOptions& opt) {
  double fz = evaluate(p, z);
  double step = 1.0;
  for (std::size_t it = 0; it < opt.maxIters; ++it) {
    const auto g = gradient(p, z);
    double g2 = 0.0;
    for (double v : g) g2 += v * v;
    if (!std::isfinite(g2)) return std::nullopt;
    if (std::sqrt(g2) <= 1e-10 * (1.0 + std::abs(fz))) break;
    std::vector<double> next(z.size());
    double fn = fz;
    bool accepted = false;
    step = std::min(1.0, step * 4.0);
    while (step > 1e-20) {
      for (std::size_t i = 0; i < z.size(); ++i) next[i] = z[i] - step * g[i];
      fn = evaluate(p, next);
      if (std::isfinite(fn) && fn <= fz - 1e-4 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    z = next;
    const bool flat = fz - fn <= 1e-15 * (1.0 + std::abs(fz));
    fz = fn;
    for (double v : z) {
      if (!(std::abs(v) <= opt.divergence)) return std::nullopt;
    }
    if (flat) break;
  }
  if (!std::isfinite(fz)) return std::nullopt;
  return std::make_pair(fz, std::move(z));
}

}  // namespace detail

/// Multi-start local minimization: starts uniform in [-box, box]^n drawn from
/// CounterRng(seed) (n draws per start, in start order). The smallest value
/// wins, ties broken by the lexicographically smaller argmin.
inline LocalMinResult localUpperBound(const SparsePolynomial& p, const LocalMinOptions& opt = {}) {
  if (opt.starts == 0) throw Error(ErrorKind::InvalidArgument, "starts must be at least 1");
  CounterRng rng(opt.seed);
  LocalMinResult best;
  for (std::size_t s = 0; s < opt.starts; ++s) {
    std::vector<double> z(p.dim());
    for (auto& v : z) v = rng.uniform(-opt.box, opt.box);
    auto r = detail::descend(p, std::move(z), opt);
    if (!r) {
      ++best.diverged;
      continue;
    }
    if (!best.found || r->first < best.value || (r->first == best.value && r->second < best.argmin)) {
      best.value = r->first;
      best.argmin = std::move(r->second);
      best.found = true;
    }
  }
  return best;
}

}  // namespace sonc
