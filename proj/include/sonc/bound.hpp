#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sonc/circuit.hpp"
#include "sonc/cones.hpp"
#include "sonc/error.hpp"
#include "sonc/ipm.hpp"
#include "sonc/lp.hpp"
#include "sonc/polynomial.hpp"

namespace sonc {

enum class BoundPhase { Phase1, Phase2 };

inline const char* to_string(BoundPhase p) { return p == BoundPhase::Phase1 ? "phase1" : "phase2"; }

/// Dual of the bound problem (Phase2) or of the existence problem (Phase1),
/// written as  min c^T y  over cone atoms:
///   variables  y_alpha for alpha in supp(p) (support order), then in Phase1
///              one slack sigma_v per Newton vertex v (vertex order);
///   objective  c = f, i.e. the maximized dual value is -c^T y;
///   equalities Phase2: y_0 = 1.  Phase1: y_v + sigma_v = 1 per vertex;
///   atoms      one power cone per circuit over (outer..., inner), then one
///              ray per even exponent (support order), then one ray per slack.
inline ConicProblem assembleDual(const SparsePolynomial& p, const std::vector<Circuit>& circuits, BoundPhase mode) {
  const std::size_t m = p.size();
  const auto& V = p.vertices();
  const std::size_t dim = m + (mode == BoundPhase::Phase1 ? V.size() : 0);

  ConicProblem prob;
  prob.dim = dim;
  prob.c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < m; ++i) prob.c(static_cast<Eigen::Index>(i)) = p.coef(i);

  for (const auto& c : circuits) {
    std::vector<std::size_t> idx;
    for (const auto& a : c.outer) {
      auto i = p.indexOf(a);
      if (!i) throw Error(ErrorKind::CircuitNotOnSupport, a.str());
      idx.push_back(*i);
    }
    auto b = p.indexOf(c.inner);
    if (!b) throw Error(ErrorKind::CircuitNotOnSupport, c.inner.str());
    idx.push_back(*b);
    prob.atoms.push_back(ConeAtom::power(c.lambda, std::move(idx)));
  }
  for (auto i : p.evenSupport()) prob.atoms.push_back(ConeAtom::ray(i));

  if (mode == BoundPhase::Phase2) {
    prob.E = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(dim));
    prob.E(0, 0) = 1.0;
    prob.d = Eigen::VectorXd::Ones(1);
  } else {
    const auto nv = static_cast<Eigen::Index>(V.size());
    prob.E = Eigen::MatrixXd::Zero(nv, static_cast<Eigen::Index>(dim));
    prob.d = Eigen::VectorXd::Ones(nv);
    for (std::size_t k = 0; k < V.size(); ++k) {
      prob.E(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(V[k])) = 1.0;
      prob.E(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m + k)) = 1.0;
      prob.atoms.push_back(ConeAtom::ray(m + k));
    }
  }
  return prob;
}

/// Strictly feasible start for assembleDual(p, *, mode), valid for every
/// circuit set on supp(p).
inline Eigen::VectorXd dualStart(const SparsePolynomial& p, BoundPhase mode) {
  std::vector<Exponent> support;
  for (const auto& t : p.terms()) support.push_back(t.exp);
  const auto y = slaterPoint(support, mode == BoundPhase::Phase1 ? SlaterMode::Phase1 : SlaterMode::Phase2,
                             defaultSlaterTheta(support));
  const auto& V = p.vertices();
  const std::size_t m = p.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(m + (mode == BoundPhase::Phase1 ? V.size() : 0)));
  for (std::size_t i = 0; i < m; ++i) out(static_cast<Eigen::Index>(i)) = y[i];
  if (mode == BoundPhase::Phase1) {
    for (std::size_t k = 0; k < V.size(); ++k) out(static_cast<Eigen::Index>(m + k)) = 1.0 - y[V[k]];
  }
  return out;
}

struct NoSoncBoundEvidence {
  std::string reason;
  std::optional<Exponent> exponent;
};

/// Circuit with inner exponent alpha and outer exponents among the Newton
/// vertices, read off a basic feasible solution of the barycentric LP.
inline std::optional<Circuit> vertexCircuit(const SparsePolynomial& p, const Exponent& alpha) {
  const auto& V = p.vertices();
  const std::size_t n = p.dim();
  LpProblem lp(n + 1, V.size());
  for (std::size_t k = 0; k < V.size(); ++k) {
    for (std::size_t r = 0; r < n; ++r) lp.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = p.exponent(V[k])[r];
    lp.A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = 1.0;
  }
  for (std::size_t r = 0; r < n; ++r) lp.b(static_cast<Eigen::Index>(r)) = alpha[r];
  lp.b(static_cast<Eigen::Index>(n)) = 1.0;
  const LpResult res = solveLp(lp);
  if (res.status != LpStatus::Optimal) return std::nullopt;
  std::vector<Exponent> outer;
  for (std::size_t k = 0; k < V.size(); ++k) {
    if (res.x(static_cast<Eigen::Index>(k)) > kLambdaFloor) outer.push_back(p.exponent(V[k]));
  }
  return canonical(makeCircuit(std::move(outer), alpha));
}

/// One circuit per exponent that is not a monomial square, or the exponent
/// that makes a SONC decomposition impossible. The constant term is exempt
/// from the sign rule since every bound problem shifts it.
inline std::variant<std::vector<Circuit>, NoSoncBoundEvidence> initialCircuitsPhase1(const SparsePolynomial& p) {
  for (auto v : p.vertices()) {
    const Exponent& e = p.exponent(v);
    if (!e.isEven()) return NoSoncBoundEvidence{"odd exponent on a Newton vertex", e};
    if (!e.isZero() && p.coef(v) < 0.0) return NoSoncBoundEvidence{"negative coefficient on a Newton vertex", e};
  }
  std::vector<Circuit> out;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p.isMonomialSquare(i)) continue;
    auto c = vertexCircuit(p, p.exponent(i));
    if (!c) return NoSoncBoundEvidence{"no circuit over the Newton vertices", p.exponent(i)};
    out.push_back(std::move(*c));
  }
  return out;
}

inline constexpr double kClampedLogFloor = 1e-12;

inline double clampedLog(double v) { return std::log(std::max(v, kClampedLogFloor)); }

struct Violation {
  Circuit circuit;
  double violation;
};

/// Pricing: min sum lambda_a clampedLog(y_a) over convex combinations of the
/// even support (beta excluded) that equal beta. A circuit is returned when
/// |y_beta| - exp(v*) > eps * max(1, |y_beta|).
inline std::optional<Violation> findViolatedCircuit(const SparsePolynomial& p, std::span<const double> y,
                                                    const Exponent& beta, double epsViol) {
  if (y.size() < p.size()) throw Error(ErrorKind::DimensionMismatch, "dual vector shorter than the support");
  const auto bi = p.indexOf(beta);
  if (!bi) throw Error(ErrorKind::InvalidArgument, beta.str() + " not in the support");
  std::vector<std::size_t> cand;
  for (auto i : p.evenSupport()) {
    if (i != *bi) cand.push_back(i);
  }
  if (cand.empty()) return std::nullopt;
  const std::size_t n = p.dim();
  LpProblem lp(n + 1, cand.size());
  for (std::size_t k = 0; k < cand.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t r = 0; r < n; ++r) lp.A(static_cast<Eigen::Index>(r), kk) = p.exponent(cand[k])[r];
    lp.A(static_cast<Eigen::Index>(n), kk) = 1.0;
    lp.c(kk) = clampedLog(y[cand[k]]);
  }
  for (std::size_t r = 0; r < n; ++r) lp.b(static_cast<Eigen::Index>(r)) = beta[r];
  lp.b(static_cast<Eigen::Index>(n)) = 1.0;
  const LpResult res = solveLp(lp);
  if (res.status != LpStatus::Optimal) return std::nullopt;

  const double yb = std::abs(y[*bi]);
  const double violation = yb - std::exp(res.objective);
  if (!(violation > epsViol * std::max(1.0, yb))) return std::nullopt;
  std::vector<Exponent> outer;
  for (std::size_t k = 0; k < cand.size(); ++k) {
    if (res.x(static_cast<Eigen::Index>(k)) > kLambdaFloor) outer.push_back(p.exponent(cand[k]));
  }
  return Violation{canonical(makeCircuit(std::move(outer), beta)), violation};
}

struct CircuitTerm {
  Circuit circuit;
  CircuitPolyCoeffs coeffs;
};

struct SquareTerm {
  Exponent exp;
  double coef;
};

/// f + gamma = sum of circuit polynomials + sum of monomial squares.
struct SoncCertificate {
  double gamma = 0.0;
  std::vector<CircuitTerm> circuitTerms;
  std::vector<SquareTerm> squareTerms;
  /// Infinity norm of the coefficient mismatch.
  double residual = 0.0;
  /// Set when the polish could not reach the residual tolerance.
  bool flaggedInvalid = false;
  std::string message;

  double bound() const { return -gamma; }
};

struct VerifyReport {
  bool valid = false;
  double residual = 0.0;
  double minMargin = std::numeric_limits<double>::infinity();
  /// First failing check: "residual", "margin", "square", "circuit" or empty.
  std::string reason;
  std::vector<std::string> details;
};

/// Independent check of a certificate: lambda is recomputed from the
/// exponents, every circuit term must be nonnegative (margin >= -tol), every
/// square coefficient >= -tol on an even exponent, and the coefficients of
/// f + gamma must be reproduced within tol.
inline VerifyReport verifyCertificate(const SparsePolynomial& p, const SoncCertificate& cert, double tol) {
  VerifyReport rep;
  auto fail = [&](const std::string& reason, const std::string& detail) {
    if (rep.reason.empty()) rep.reason = reason;
    rep.details.push_back(detail);
  };
  std::map<Exponent, double> diff;
  for (const auto& t : p.terms()) diff[t.exp] += t.coef;
  diff[Exponent::zero(p.dim())] += cert.gamma;

  for (std::size_t j = 0; j < cert.circuitTerms.size(); ++j) {
    const auto& term = cert.circuitTerms[j];
    Circuit c;
    try {
      c = makeCircuit(term.circuit.outer, term.circuit.inner);
    } catch (const Error& e) {
      fail("circuit", "circuit " + std::to_string(j) + ": " + e.what());
      continue;
    }
    if (term.coeffs.outer.size() != c.size()) {
      fail("circuit", "circuit " + std::to_string(j) + ": coefficient count");
      continue;
    }
    const MarginResult mr = nonnegativityMargin(c, term.coeffs);
    rep.minMargin = std::min(rep.minMargin, mr.margin);
    if (!mr.nonneg && !(mr.margin >= -tol)) fail("margin", "circuit " + std::to_string(j) + " margin " + std::to_string(mr.margin));
    for (std::size_t i = 0; i < c.size(); ++i) diff[c.outer[i]] -= term.coeffs.outer[i];
    diff[c.inner] -= term.coeffs.inner;
  }
  for (const auto& s : cert.squareTerms) {
    if (s.exp.dim() != p.dim()) {
      fail("square", "square " + s.exp.str() + " has the wrong dimension");
      continue;
    }
    if (!s.exp.isEven()) fail("square", "square " + s.exp.str() + " is not even");
    if (!(s.coef >= -tol)) fail("square", "square " + s.exp.str() + " negative");
    diff[s.exp] -= s.coef;
  }
  rep.residual = 0.0;
  for (const auto& [e, v] : diff) rep.residual = std::max(rep.residual, std::abs(v));
  if (!(rep.residual <= tol)) fail("residual", "coefficient mismatch " + std::to_string(rep.residual));
  rep.valid = rep.reason.empty();
  return rep;
}

namespace detail {

// Working form of a certificate over the support of p.
struct PolishState {
  double gamma = 0.0;
  std::vector<Circuit> circuits;
  std::vector<std::vector<double>> x;             // outer..., inner
  std::vector<std::vector<std::size_t>> pos;      // support index per entry of x
  std::vector<double> delta;                      // per support index, even only
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> touching;  // support index -> (circuit, slot)

  void index(const SparsePolynomial& p) {
    pos.clear();
    touching.assign(p.size(), {});
    for (std::size_t j = 0; j < circuits.size(); ++j) {
      std::vector<std::size_t> ps;
      for (const auto& a : circuits[j].outer) ps.push_back(*p.indexOf(a));
      ps.push_back(*p.indexOf(circuits[j].inner));
      for (std::size_t k = 0; k < ps.size(); ++k) touching[ps[k]].push_back({j, k});
      pos.push_back(std::move(ps));
    }
  }

  std::vector<double> residual(const SparsePolynomial& p) const {
    std::vector<double> r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = p.coef(i) - delta[i];
    r[0] += gamma;
    for (std::size_t j = 0; j < x.size(); ++j) {
      for (std::size_t k = 0; k < x[j].size(); ++k) r[pos[j][k]] -= x[j][k];
    }
    return r;
  }

  MarginResult margin(std::size_t j, const std::vector<double>& xj) const {
    CircuitPolyCoeffs c{std::vector<double>(xj.begin(), xj.end() - 1), xj.back()};
    return nonnegativityMargin(circuits[j], c);
  }
};

// Increase of x[slot] needed so that prod (x/lambda)^lambda reaches target.
inline double outerIncrease(const PolishState& s, std::size_t j, std::size_t slot, double target) {
  const auto& xj = s.x[j];
  const auto& lam = s.circuits[j].lambda;
  double logB = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) logB += lam[i] * (std::log(xj[i]) - std::log(lam[i]));
  const double gap = std::log(target) - logB;
  if (gap <= 0.0) return 0.0;
  return xj[slot] * std::expm1(gap / lam[slot]);
}

// Drives the linear residual to zero while keeping every circuit term
// nonnegative. Residual at the origin moves into gamma, at even exponents
// into delta, elsewhere into the circuit with the most margin; circuits that
// lose their margin get an outer coefficient raised, paid for by delta or by
// gamma when the origin is an outer exponent.
inline bool polish(const SparsePolynomial& p, PolishState& s, double tol) {
  const double margin0 = 1e-12 * p.scale();
  for (int pass = 0; pass < 12; ++pass) {
    std::vector<double> r = s.residual(p);
    s.gamma -= r[0];
    r[0] = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (r[i] == 0.0 || !p.exponent(i).isEven()) continue;
      const double d = s.delta[i] + r[i];
      if (d >= 0.0) {
        s.delta[i] = d;
        r[i] = 0.0;
      } else {
        s.delta[i] = 0.0;
        r[i] = d;
      }
    }
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (r[i] == 0.0) continue;
      double best = -std::numeric_limits<double>::infinity();
      std::optional<std::pair<std::size_t, std::size_t>> pick;
      for (const auto& [j, k] : s.touching[i]) {
        auto xj = s.x[j];
        xj[k] += r[i];
        const MarginResult mr = s.margin(j, xj);
        const double score = mr.nonneg ? std::max(mr.margin, 0.0) : mr.margin;
        if (!pick || score > best) {
          best = score;
          pick = {j, k};
        }
      }
      if (!pick) return false;
      s.x[pick->first][pick->second] += r[i];
    }
    for (std::size_t j = 0; j < s.circuits.size(); ++j) {
      const MarginResult mr = s.margin(j, s.x[j]);
      if (mr.nonneg && mr.margin >= margin0) continue;
      const std::size_t r0 = s.circuits[j].size();
      bool outerPositive = true;
      for (std::size_t k = 0; k < r0; ++k) outerPositive = outerPositive && s.x[j][k] > 0.0;
      if (!outerPositive) return false;
      const double target = std::abs(s.x[j][r0]) + margin0;
      // Prefer delta slack, then the constant term, then any outer slot.
      std::optional<std::size_t> slot;
      double need = 0.0;
      for (std::size_t k = 0; k < r0 && !slot; ++k) {
        const std::size_t i = s.pos[j][k];
        if (i == 0) continue;
        const double kappa = outerIncrease(s, j, k, target);
        if (s.delta[i] >= kappa) {
          slot = k;
          need = kappa;
        }
      }
      for (std::size_t k = 0; k < r0 && !slot; ++k) {
        if (s.pos[j][k] == 0) {
          slot = k;
          need = outerIncrease(s, j, k, target);
        }
      }
      if (!slot) {
        slot = 0;
        need = outerIncrease(s, j, 0, target);
      }
      s.x[j][*slot] += need;
      const std::size_t i = s.pos[j][*slot];
      if (i != 0 && s.delta[i] >= need) s.delta[i] -= need;
    }
    const auto rr = s.residual(p);
    double worst = 0.0;
    for (double v : rr) worst = std::max(worst, std::abs(v));
    bool cones = true;
    for (std::size_t j = 0; j < s.circuits.size(); ++j) {
      const MarginResult mr = s.margin(j, s.x[j]);
      cones = cones && mr.nonneg;
    }
    if (worst <= tol && cones) return true;
  }
  return false;
}

// Fallback polish: one LP over corrections Delta to every circuit
// coefficient, new square coefficients and a gamma change, with each margin
// linearized at the current point:
//   B_j + sum_k (lambda_k B_j / x_k) Delta_k -/+ (x_in + Delta_in) >= target_j.
// The coefficient identity is imposed exactly; the objective charges gamma
// and |Delta| equally, so the cheapest repair wins. Repeated a few times to
// absorb the curvature left out by the linearization.
inline bool polishLp(const SparsePolynomial& p, PolishState& s, double tol) {
  const std::size_t m = p.size();
  const std::size_t N = s.circuits.size();
  for (int iter = 0; iter < 4; ++iter) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k < s.x[j].size(); ++k) slots.push_back({j, k});
      for (std::size_t k = 0; k + 1 < s.x[j].size(); ++k) {
        if (!(s.x[j][k] > 0.0)) return false;
      }
    }
    std::vector<std::size_t> evens;
    for (auto i : p.evenSupport()) {
      if (i != 0) evens.push_back(i);
    }
    const std::size_t S = slots.size(), Ev = evens.size();
    const std::size_t cGamma = 0, cPlus = 2, cMinus = 2 + S, cDelta = 2 + 2 * S, cSlack = 2 + 2 * S + Ev;
    const std::size_t cols = cSlack + 2 * N;
    const std::size_t rows = m + 2 * N;
    LpProblem lp(rows, cols);
    auto A = [&](std::size_t r, std::size_t c) -> double& { return lp.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); };

    const auto r0 = s.residual(p);
    for (std::size_t i = 0; i < m; ++i) lp.b(static_cast<Eigen::Index>(i)) = r0[i] + s.delta[i];
    lp.b(0) = r0[0];  // the constant term carries no square
    A(0, cGamma) = -1.0;
    A(0, cGamma + 1) = 1.0;
    for (std::size_t t = 0; t < S; ++t) {
      const std::size_t i = s.pos[slots[t].first][slots[t].second];
      A(i, cPlus + t) = 1.0;
      A(i, cMinus + t) = -1.0;
    }
    for (std::size_t e = 0; e < Ev; ++e) A(evens[e], cDelta + e) = 1.0;

    std::size_t t0 = 0;
    for (std::size_t j = 0; j < N; ++j) {
      const auto& lam = s.circuits[j].lambda;
      const std::size_t r = lam.size();
      double logB = 0.0;
      for (std::size_t k = 0; k < r; ++k) logB += lam[k] * (std::log(s.x[j][k]) - std::log(lam[k]));
      const double B = std::exp(logB);
      const double target = 1e-10 * B + 1e-13 * p.scale();
      for (int sgn = 0; sgn < 2; ++sgn) {
        const double sigma = sgn == 0 ? 1.0 : -1.0;
        const std::size_t row = m + 2 * j + static_cast<std::size_t>(sgn);
        for (std::size_t k = 0; k < r; ++k) {
          const double g = lam[k] * B / s.x[j][k];
          A(row, cPlus + t0 + k) = g;
          A(row, cMinus + t0 + k) = -g;
        }
        A(row, cPlus + t0 + r) = -sigma;
        A(row, cMinus + t0 + r) = sigma;
        A(row, cSlack + 2 * j + static_cast<std::size_t>(sgn)) = -1.0;
        lp.b(static_cast<Eigen::Index>(row)) = target - (B - sigma * s.x[j][r]);
      }
      t0 += r + 1;
    }
    lp.c(static_cast<Eigen::Index>(cGamma)) = 1.0;
    lp.c(static_cast<Eigen::Index>(cGamma + 1)) = -1.0;
    for (std::size_t t = 0; t < 2 * S; ++t) lp.c(static_cast<Eigen::Index>(cPlus + t)) = 1.0;

    LpResult res;
    try {
      res = solveLp(lp, 1e-12);
    } catch (const Error&) {
      return false;
    }
    if (res.status != LpStatus::Optimal) return false;
    auto X = [&](std::size_t c) { return res.x(static_cast<Eigen::Index>(c)); };
    s.gamma += X(cGamma) - X(cGamma + 1);
    for (std::size_t t = 0; t < S; ++t) s.x[slots[t].first][slots[t].second] += X(cPlus + t) - X(cMinus + t);
    for (std::size_t e = 0; e < Ev; ++e) s.delta[evens[e]] = X(cDelta + e);

    // Exact clean-up of the rounding left by the LP: constant into gamma,
    // even exponents into their squares where that keeps them nonnegative.
    auto r = s.residual(p);
    s.gamma -= r[0];
    for (auto i : evens) {
      if (s.delta[i] + r[i] >= 0.0) s.delta[i] += r[i];
    }
    r = s.residual(p);
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    bool cones = true;
    for (std::size_t j = 0; j < N; ++j) cones = cones && s.margin(j, s.x[j]).nonneg;
    if (worst <= tol && cones) return true;
  }
  return false;
}

// Exact LP polish. Each circuit keeps the direction of its outer
// coefficients, outer = s_j x_j, so its margin s_j B(x_j) - |inner| is linear
// in (s_j, inner). Inner coefficients and gamma are free, squares
// nonnegative; extra weight on an outer exponent is a square there (or part
// of gamma at the origin). Minimizes gamma subject to the exact coefficient
// identity.
inline bool polishRay(const SparsePolynomial& p, PolishState& s, double tol) {
  const std::size_t m = p.size();
  const std::size_t N = s.circuits.size();
  std::vector<double> B(N), colScale(N);
  for (std::size_t j = 0; j < N; ++j) {
    const auto& lam = s.circuits[j].lambda;
    double logB = 0.0;
    bool positive = true;
    for (std::size_t k = 0; k < lam.size(); ++k) {
      if (!(s.x[j][k] > 0.0)) {
        s.x[j][k] = std::max(s.x[j][k], 0.0);
        positive = false;
      } else {
        logB += lam[k] * (std::log(s.x[j][k]) - std::log(lam[k]));
      }
    }
    B[j] = positive ? std::exp(logB) : 0.0;
    // Column scale so that the largest outer entry of s_j is one.
    colScale[j] = std::max(*std::max_element(s.x[j].begin(), s.x[j].end() - 1), 1e-300);
  }
  std::vector<std::size_t> evens;
  for (auto i : p.evenSupport()) {
    if (i != 0) evens.push_back(i);
  }
  const std::size_t Ev = evens.size();
  const std::size_t cS = 2, cIn = 2 + N, cDelta = 2 + 3 * N, cSlack = cDelta + Ev;
  LpProblem lp(m + 2 * N, cSlack + 2 * N);
  auto A = [&](std::size_t r, std::size_t c) -> double& { return lp.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); };
  for (std::size_t i = 0; i < m; ++i) lp.b(static_cast<Eigen::Index>(i)) = p.coef(i);
  A(0, 0) = -1.0;
  A(0, 1) = 1.0;
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = 0; k + 1 < s.x[j].size(); ++k) A(s.pos[j][k], cS + j) += s.x[j][k] / colScale[j];
  }
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t i = s.pos[j].back();
    A(i, cIn + 2 * j) = 1.0;
    A(i, cIn + 2 * j + 1) = -1.0;
    for (int sgn = 0; sgn < 2; ++sgn) {
      const double sigma = sgn == 0 ? 1.0 : -1.0;
      const std::size_t row = m + 2 * j + static_cast<std::size_t>(sgn);
      A(row, cS + j) = B[j] / colScale[j] * (1.0 - 1e-10);
      A(row, cIn + 2 * j) = -sigma;
      A(row, cIn + 2 * j + 1) = sigma;
      A(row, cSlack + 2 * j + static_cast<std::size_t>(sgn)) = -1.0;
    }
  }
  for (std::size_t e = 0; e < Ev; ++e) A(evens[e], cDelta + e) = 1.0;
  lp.c(0) = 1.0;
  lp.c(1) = -1.0;

  LpResult res;
  try {
    res = solveLp(lp);
  } catch (const Error&) {
    return false;
  }
  if (res.status != LpStatus::Optimal) return false;
  auto X = [&](std::size_t c) { return std::max(res.x(static_cast<Eigen::Index>(c)), 0.0); };
  PolishState out = s;
  out.gamma = X(0) - X(1);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = 0; k + 1 < out.x[j].size(); ++k) out.x[j][k] *= X(cS + j) / colScale[j];
    out.x[j].back() = X(cIn + 2 * j) - X(cIn + 2 * j + 1);
  }
  std::fill(out.delta.begin(), out.delta.end(), 0.0);
  for (std::size_t e = 0; e < Ev; ++e) out.delta[evens[e]] = X(cDelta + e);
  // The LP meets the margins only up to its feasibility tolerance; shrink
  // offending inner coefficients onto the boundary and let the residual
  // clean-up below absorb the difference.
  for (std::size_t j = 0; j < N; ++j) {
    const MarginResult mr = out.margin(j, out.x[j]);
    if (mr.nonneg) continue;
    double& in = out.x[j].back();
    in = std::copysign(std::max(std::abs(in) + mr.margin, 0.0) * (1.0 - 1e-12), in);
  }
  auto r = out.residual(p);
  out.gamma -= r[0];
  for (auto i : evens) {
    if (out.delta[i] + r[i] >= 0.0) out.delta[i] += r[i];
  }
  r = out.residual(p);
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v));
  for (std::size_t j = 0; j < N; ++j) {
    if (!out.margin(j, out.x[j]).nonneg) return false;
  }
  if (worst > tol) return false;
  s = std::move(out);
  return true;
}

// Circuit terms with |inner| <= eps are replaced by their outer monomials
// (squares, or the constant term through gamma); the tiny inner coefficient
// is left as residual for the next polish.
inline void dropIdleCircuits(const SparsePolynomial& p, PolishState& s, double eps) {
  PolishState out = s;
  out.circuits.clear();
  out.x.clear();
  for (std::size_t j = 0; j < s.circuits.size(); ++j) {
    if (std::abs(s.x[j].back()) > eps) {
      out.circuits.push_back(s.circuits[j]);
      out.x.push_back(s.x[j]);
      continue;
    }
    for (std::size_t k = 0; k + 1 < s.x[j].size(); ++k) {
      const std::size_t i = s.pos[j][k];
      if (i == 0)
        out.gamma -= s.x[j][k];
      else
        out.delta[i] += s.x[j][k];
    }
  }
  out.index(p);
  s = std::move(out);
}

// Squares on an inner exponent reduce a negative inner coefficient; squares
// on an outer exponent are added to that outer coefficient. Both keep the
// identity exact and only increase margins.
inline void mergeSquares(const SparsePolynomial& p, PolishState& s) {
  for (std::size_t i = 1; i < p.size(); ++i) {
    for (const auto& [j, k] : s.touching[i]) {
      if (s.delta[i] <= 0.0) break;
      if (k + 1 == s.x[j].size() && s.x[j][k] < 0.0) {
        const double m = std::min(s.delta[i], -s.x[j][k]);
        s.x[j][k] += m;
        s.delta[i] -= m;
      }
    }
    for (const auto& [j, k] : s.touching[i]) {
      if (s.delta[i] <= 0.0) break;
      if (k + 1 < s.x[j].size()) {
        s.x[j][k] += s.delta[i];
        s.delta[i] = 0.0;
      }
    }
  }
}

inline SoncCertificate toCertificate(const SparsePolynomial& p, const PolishState& s) {
  SoncCertificate cert;
  cert.gamma = s.gamma;
  for (std::size_t j = 0; j < s.circuits.size(); ++j) {
    CircuitTerm t{s.circuits[j], {std::vector<double>(s.x[j].begin(), s.x[j].end() - 1), s.x[j].back()}};
    cert.circuitTerms.push_back(std::move(t));
  }
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p.exponent(i).isEven() && s.delta[i] > 0.0) cert.squareTerms.push_back({p.exponent(i), s.delta[i]});
  }
  const auto r = s.residual(p);
  cert.residual = 0.0;
  for (double v : r) cert.residual = std::max(cert.residual, std::abs(v));
  return cert;
}

}  // namespace detail

inline constexpr double kPolishTolerance = 1e-8;
/// Extra tenfold Phase1 shifts tried after the default one fails.
inline constexpr int kPhase1Escalations = 6;

/// Certificate for f + gamma from a converged Phase2 solve of
/// assembleDual(p, circuits, Phase2): circuit coefficients are the power
/// atom multipliers, square coefficients the ray multipliers, and gamma the
/// negated multiplier of y_0 = 1. A polish step then makes the identity exact.
/// The result is then consolidated: circuit terms whose inner coefficient is
/// negligible become monomial squares, and squares sharing an exponent with a
/// circuit term are merged into it.
inline SoncCertificate extractCertificate(const IpmSolution& sol, const ConicProblem& prob,
                                          const std::vector<Circuit>& circuits, const SparsePolynomial& p) {
  const Multipliers mult = extractMultipliers(sol, prob);
  if (prob.atoms.size() < circuits.size() + p.evenSupport().size())
    throw Error(ErrorKind::DimensionMismatch, "problem does not match the circuit list");
  const double scale = p.scale();
  const double tol = kPolishTolerance * scale;

  detail::PolishState base;
  base.gamma = -mult.eq(0);
  base.delta.assign(p.size(), 0.0);
  for (std::size_t k = 0; k < p.evenSupport().size(); ++k)
    base.delta[p.evenSupport()[k]] = mult.atoms[circuits.size() + k](0);
  base.delta[0] = 0.0;

  auto attempt = [&](bool consolidate) -> std::optional<SoncCertificate> {
    detail::PolishState s = base;
    for (std::size_t j = 0; j < circuits.size(); ++j) {
      s.circuits.push_back(circuits[j]);
      s.x.emplace_back(mult.atoms[j].data(), mult.atoms[j].data() + mult.atoms[j].size());
    }
    s.index(p);
    auto repair = [&](detail::PolishState& st) {
      detail::PolishState backup = st;
      if (detail::polishRay(p, st, tol)) return true;
      if (detail::polishLp(p, st, tol)) return true;
      st = std::move(backup);
      return detail::polish(p, st, tol);
    };
    if (consolidate) detail::dropIdleCircuits(p, s, 1e-6 * scale);
    if (!repair(s)) return std::nullopt;
    if (consolidate) {
      detail::dropIdleCircuits(p, s, 1e-6 * scale);
      if (!repair(s)) return std::nullopt;
      detail::mergeSquares(p, s);
    }
    SoncCertificate cert = detail::toCertificate(p, s);
    if (!verifyCertificate(p, cert, tol).valid) return std::nullopt;
    return cert;
  };

  if (auto c = attempt(true)) return *c;
  if (auto c = attempt(false)) return *c;

  detail::PolishState s = base;
  for (std::size_t j = 0; j < circuits.size(); ++j) {
    s.circuits.push_back(circuits[j]);
    s.x.emplace_back(mult.atoms[j].data(), mult.atoms[j].data() + mult.atoms[j].size());
  }
  s.index(p);
  SoncCertificate cert = detail::toCertificate(p, s);
  cert.flaggedInvalid = true;
  cert.message = to_string(ErrorKind::PolishFailed);
  return cert;
}

enum class Termination { NoViolatedCircuit, IterationCap };

inline const char* to_string(Termination t) {
  return t == Termination::NoViolatedCircuit ? "NoViolatedCircuit" : "IterationCap";
}

struct RoundRecord {
  BoundPhase phase;
  std::size_t circuits;
  /// Phase1: existence optimum. Phase2: certified bound (NaN if the round's
  /// certificate did not verify).
  double bound;
  /// Phase2: dual value f^T y minus the certified bound. Phase1: nu / t.
  double gap;
  double millis;
  /// Dual iterate restricted to the support, in support order.
  std::vector<double> dual;
  /// Circuits found by pricing after this round.
  std::vector<Circuit> added;
  /// Objective f^T y of the round's dual solve (Phase2) or its negation (Phase1).
  double dualValue = 0.0;
};

struct CgReport {
  std::size_t phase1Iterations = 0;
  std::size_t phase2Iterations = 0;
  std::vector<RoundRecord> rounds;
  Termination terminationReason = Termination::NoViolatedCircuit;
  double phase1Optimum = 0.0;
  /// Last shift c used by Phase1 (0 when skipped).
  double phase1Shift = 0.0;
  std::size_t initialCircuits = 0;

  std::vector<std::size_t> circuitsPerIteration() const {
    std::vector<std::size_t> v;
    for (const auto& r : rounds) v.push_back(r.circuits);
    return v;
  }
  std::vector<double> boundPerIteration(BoundPhase ph = BoundPhase::Phase2) const {
    std::vector<double> v;
    for (const auto& r : rounds) {
      if (r.phase == ph) v.push_back(r.bound);
    }
    return v;
  }
};

struct SoncConfig {
  double gapTol = 1e-8;
  double violationTol = 1e-8;
  std::size_t maxRounds = 60;
  /// Default 1 + sum |f_alpha|.
  std::optional<double> phase1Shift;
  bool skipPhase1 = false;
  /// Existence optimum above phase1Tol * scale means no bound for the shift.
  double phase1Tol = 1e-7;
  IpmOptions ipm;
};

enum class SoncStatus { Optimal, IterationCap, NoSoncBound };

inline const char* to_string(SoncStatus s) {
  switch (s) {
    case SoncStatus::Optimal: return "Optimal";
    case SoncStatus::IterationCap: return "IterationCap";
    case SoncStatus::NoSoncBound: return "NoSoncBound";
  }
  return "Unknown";
}

struct SoncBoundResult {
  SoncStatus status = SoncStatus::NoSoncBound;
  double bound = -std::numeric_limits<double>::infinity();
  SoncCertificate certificate;
  bool certified = false;
  CgReport report;
  std::vector<Circuit> circuits;
  std::optional<NoSoncBoundEvidence> evidence;
};

namespace detail {

inline IpmSolution solveRound(const ConicProblem& prob, const Eigen::VectorXd& start, const SoncConfig& cfg,
                              BoundPhase phase, std::size_t round) {
  IpmOptions opt = cfg.ipm;
  opt.gapTol = cfg.gapTol;
  IpmSolution sol = solveConic(prob, start, opt);
  if (sol.status != IpmStatus::Converged)
    throw Error(ErrorKind::NumericalFailure, std::string(to_string(phase)) + " round " + std::to_string(round) + ": " +
                                                 to_string(sol.status) + (sol.message.empty() ? "" : " (" + sol.message + ")"));
  return sol;
}

// One violated circuit per candidate inner exponent not yet in the set.
inline std::vector<Circuit> price(const SparsePolynomial& p, const Eigen::VectorXd& y, std::vector<Circuit>& circuits,
                                  double epsViol) {
  std::set<std::pair<std::vector<Exponent>, Exponent>> have;
  for (const auto& c : circuits) have.insert(c.key());
  std::vector<Circuit> added;
  const std::span<const double> ys(y.data(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.isVertex(i)) continue;
    auto v = findViolatedCircuit(p, ys, p.exponent(i), epsViol);
    if (v && have.insert(v->circuit.key()).second) added.push_back(std::move(v->circuit));
  }
  return added;
}

// Certificates from the final iterate and from every earlier snapshot; the
// best verified bound wins.
inline SoncCertificate bestCertificate(const IpmSolution& sol, const ConicProblem& prob,
                                       const std::vector<Circuit>& circuits, const SparsePolynomial& p,
                                       const IpmOptions& opt) {
  const double tol = kPolishTolerance * p.scale();
  SoncCertificate best = extractCertificate(sol, prob, circuits, p);
  bool bestOk = !best.flaggedInvalid && verifyCertificate(p, best, tol).valid;
  for (const auto& snap : sol.snapshots) {
    if (snap.t >= sol.t) continue;
    SoncCertificate c = extractCertificate(recenter(prob, snap, opt), prob, circuits, p);
    const bool ok = !c.flaggedInvalid && verifyCertificate(p, c, tol).valid;
    if (ok && (!bestOk || c.bound() > best.bound())) {
      best = std::move(c);
      bestOk = true;
    }
  }
  return best;
}

inline double millisSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Optimal SONC lower bound by circuit generation: optional Phase 1 on
/// f + shift, then Phase 2 rounds of solve / price / add until no circuit is
/// violated. A bound is reported only with a verified certificate.
inline SoncBoundResult soncBound(const SparsePolynomial& p, const SoncConfig& cfg = {}) {
  SoncBoundResult out;
  auto init = initialCircuitsPhase1(p);
  if (auto* ev = std::get_if<NoSoncBoundEvidence>(&init)) {
    out.evidence = *ev;
    return out;
  }
  std::vector<Circuit> circuits = std::get<std::vector<Circuit>>(std::move(init));
  out.report.initialCircuits = circuits.size();
  std::size_t round = 0;

  if (!cfg.skipPhase1) {
    double shift = 1.0;
    for (const auto& t : p.terms()) shift += std::abs(t.coef);
    // An explicit shift is tried once; the default escalates tenfold.
    const int attempts = cfg.phase1Shift ? 1 : kPhase1Escalations + 1;
    if (cfg.phase1Shift) shift = *cfg.phase1Shift;
    double optimum = 0.0;
    for (int a = 0; a < attempts; ++a, shift *= 10.0) {
      const SparsePolynomial q = p.shifted(shift);
      const Eigen::VectorXd start = dualStart(q, BoundPhase::Phase1);
      for (;;) {
        const auto t0 = std::chrono::steady_clock::now();
        const ConicProblem prob = assembleDual(q, circuits, BoundPhase::Phase1);
        const IpmSolution sol = detail::solveRound(prob, start, cfg, BoundPhase::Phase1, round);
        optimum = -sol.objective;
        ++out.report.phase1Iterations;
        ++round;
        auto added = detail::price(q, sol.y, circuits, cfg.violationTol);
        out.report.rounds.push_back({BoundPhase::Phase1, circuits.size(), optimum, sol.gap, detail::millisSince(t0),
                                     std::vector<double>(sol.y.data(), sol.y.data() + q.size()), added, sol.objective});
        if (added.empty()) break;
        if (out.report.phase1Iterations >= cfg.maxRounds) {
          out.report.terminationReason = Termination::IterationCap;
          break;
        }
        circuits.insert(circuits.end(), added.begin(), added.end());
      }
      out.report.phase1Optimum = optimum;
      out.report.phase1Shift = shift;
      if (optimum <= cfg.phase1Tol * q.scale() || out.report.phase1Iterations >= cfg.maxRounds) break;
    }
    shift = out.report.phase1Shift;
    if (optimum > cfg.phase1Tol * p.shifted(shift).scale()) {
      out.evidence = NoSoncBoundEvidence{"existence problem optimum " + std::to_string(optimum) + " > 0 for shift " +
                                             std::to_string(shift),
                                         std::nullopt};
      out.circuits = circuits;
      return out;
    }
  }

  const Eigen::VectorXd start = dualStart(p, BoundPhase::Phase2);
  out.report.terminationReason = Termination::IterationCap;
  for (;;) {
    const auto t0 = std::chrono::steady_clock::now();
    const ConicProblem prob = assembleDual(p, circuits, BoundPhase::Phase2);
    const IpmSolution sol = detail::solveRound(prob, start, cfg, BoundPhase::Phase2, round);
    ++out.report.phase2Iterations;
    ++round;
    SoncCertificate cert = detail::bestCertificate(sol, prob, circuits, p, cfg.ipm);
    const bool ok = !cert.flaggedInvalid && verifyCertificate(p, cert, kPolishTolerance * p.scale()).valid;
    const double bound = ok ? cert.bound() : std::numeric_limits<double>::quiet_NaN();
    if (ok && (!out.certified || cert.bound() >= out.bound)) {
      out.certificate = cert;
      out.bound = cert.bound();
      out.certified = true;
    }
    auto added = detail::price(p, sol.y, circuits, cfg.violationTol);
    out.report.rounds.push_back({BoundPhase::Phase2, circuits.size(), bound, sol.objective - bound, detail::millisSince(t0),
                                 std::vector<double>(sol.y.data(), sol.y.data() + p.size()), added, sol.objective});
    if (added.empty()) {
      out.report.terminationReason = Termination::NoViolatedCircuit;
      break;
    }
    if (out.report.phase2Iterations >= cfg.maxRounds) break;
    circuits.insert(circuits.end(), added.begin(), added.end());
  }
  out.circuits = circuits;
  if (!out.certified) {
    out.certificate.flaggedInvalid = true;
    throw Error(ErrorKind::PolishFailed, "no round produced a verifying certificate");
  }
  out.status = out.report.terminationReason == Termination::NoViolatedCircuit ? SoncStatus::Optimal : SoncStatus::IterationCap;
  return out;
}

}  // namespace sonc
