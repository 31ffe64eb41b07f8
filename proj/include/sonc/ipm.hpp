#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sonc/cones.hpp"
#include "sonc/error.hpp"

namespace sonc {

/// min c^T y  s.t.  E y = d,  y|slice_j in K_j for every atom j.
/// Slices may overlap; the feasible set is the intersection.
struct ConicProblem {
  std::size_t dim = 0;
  Eigen::VectorXd c;
  Eigen::MatrixXd E;
  Eigen::VectorXd d;
  std::vector<ConeAtom> atoms;

  double nuTotal() const {
    double nu = 0.0;
    for (const auto& a : atoms) nu += a.nu();
    return nu;
  }

  void validate() const {
    if (static_cast<std::size_t>(c.size()) != dim || static_cast<std::size_t>(E.cols()) != dim || E.rows() != d.size())
      throw Error(ErrorKind::DimensionMismatch, "conic problem shapes disagree");
    std::vector<bool> covered(dim, false);
    for (const auto& a : atoms) {
      a.validate();
      if (a.kind == ConeKind::DualPowerCone) throw Error(ErrorKind::InvalidArgument, "dual power atoms have no barrier");
      for (auto i : a.indices) {
        if (i >= dim) throw Error(ErrorKind::DimensionMismatch, "atom index out of range");
        covered[i] = true;
      }
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end())
      throw Error(ErrorKind::InvalidArgument, "variable not covered by any cone atom");
  }
};

enum class IpmStatus { Converged, IterationLimit, NumericalFailure, Unbounded };

inline const char* to_string(IpmStatus s) {
  switch (s) {
    case IpmStatus::Converged: return "Converged";
    case IpmStatus::IterationLimit: return "IterationLimit";
    case IpmStatus::NumericalFailure: return "NumericalFailure";
    case IpmStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

struct IpmOptions {
  double gapTol = 1e-8;
  std::size_t maxIters = 20000;
  /// Path parameter growth after each centering. Zero selects the short-step
  /// rule 1 + 0.2 / sqrt(nu).
  double tGrowth = 0.0;
  double centeringTol = 0.25;
  double t0 = 1.0;
  /// Optional CSV iteration log: iter,t,decrement,objective,gap.
  std::ostream* log = nullptr;
  /// Re-check strict feasibility of every iterate against every atom.
  bool checkIterates = false;
  /// Extra full Newton steps at the final path parameter.
  int finalCenteringSteps = 20;
  /// Keep the first centered point below each decade nu / t <= 10^-k for
  /// k >= snapshotFromDecade (0 disables).
  int snapshotFromDecade = 4;
};

struct CenteredPoint {
  double t;
  double objective;
};

/// Centered iterate kept for later dual extraction.
struct Snapshot {
  double t;
  Eigen::VectorXd y;
};

struct IpmSolution {
  IpmStatus status = IpmStatus::NumericalFailure;
  Eigen::VectorXd y;
  /// s_j per atom (dual cone members) and eta per equality row, with
  /// c = sum_j lift(s_j) + E^T eta up to the stationarity residual.
  std::vector<Eigen::VectorXd> atomMultipliers;
  Eigen::VectorXd eqMultipliers;
  double objective = 0.0;
  /// nu / t at termination (the path-following bound on suboptimality).
  double gap = 0.0;
  /// c^T y - d^T eta for the returned primal/dual pair.
  double dualityGap = 0.0;
  double t = 0.0;
  double decrement = 0.0;
  std::size_t iterations = 0;
  std::vector<CenteredPoint> centered;
  std::vector<Snapshot> snapshots;
  std::string message;

  double mu() const { return t > 0.0 ? 1.0 / t : 0.0; }
};

namespace detail {

inline std::vector<double> slice(const Eigen::VectorXd& y, const ConeAtom& atom) {
  std::vector<double> s(atom.indices.size());
  for (std::size_t k = 0; k < atom.indices.size(); ++k) s[k] = y(static_cast<Eigen::Index>(atom.indices[k]));
  return s;
}

inline bool allInterior(const ConicProblem& prob, const Eigen::VectorXd& y) {
  for (const auto& a : prob.atoms) {
    if (!isInterior(a, slice(y, a))) return false;
  }
  return true;
}

struct NewtonSystem {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  std::vector<BarrierEval> perAtom;
};

inline NewtonSystem assemble(const ConicProblem& prob, const Eigen::VectorXd& y) {
  const auto m = static_cast<Eigen::Index>(prob.dim);
  NewtonSystem sys;
  sys.grad = Eigen::VectorXd::Zero(m);
  sys.hess = Eigen::MatrixXd::Zero(m, m);
  sys.perAtom.reserve(prob.atoms.size());
  for (const auto& a : prob.atoms) {
    const auto pt = slice(y, a);
    BarrierEval be = barrier(a, pt);
    for (std::size_t p = 0; p < a.indices.size(); ++p) {
      const auto ip = static_cast<Eigen::Index>(a.indices[p]);
      sys.grad(ip) += be.gradient(static_cast<Eigen::Index>(p));
      for (std::size_t q = 0; q < a.indices.size(); ++q)
        sys.hess(ip, static_cast<Eigen::Index>(a.indices[q])) += be.hessian(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    }
    sys.perAtom.push_back(std::move(be));
  }
  return sys;
}

struct NewtonStep {
  Eigen::VectorXd dy;
  double decrement = 0.0;
};

// Explicit parametrization of {dy : E dy = e}: dy = P e + Z v. One pivot
// column per equality row is eliminated; the pivots prefer large entries and,
// among ties, later columns (slack variables are appended last).
struct EqualityBasis {
  Eigen::MatrixXd Z;
  Eigen::MatrixXd P;

  static EqualityBasis build(const Eigen::MatrixXd& E) {
    const Eigen::Index p = E.rows();
    const Eigen::Index m = E.cols();
    Eigen::MatrixXd A = E;
    std::vector<Eigen::Index> pivots;
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    Eigen::MatrixXd rowOps = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      Eigen::Index best = -1;
      for (Eigen::Index j = m - 1; j >= 0; --j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        if (best < 0 || std::abs(A(i, j)) > std::abs(A(i, best)) * (1.0 + 1e-12)) best = j;
      }
      if (best < 0 || std::abs(A(i, best)) < 1e-12)
        throw Error(ErrorKind::InvalidArgument, "equality rows are linearly dependent");
      used[static_cast<std::size_t>(best)] = true;
      pivots.push_back(best);
      const double piv = A(i, best);
      A.row(i) /= piv;
      rowOps.row(i) /= piv;
      for (Eigen::Index k = 0; k < p; ++k) {
        if (k == i || A(k, best) == 0.0) continue;
        const double f = A(k, best);
        A.row(k) -= f * A.row(i);
        rowOps.row(k) -= f * rowOps.row(i);
      }
    }
    // Now A = rowOps * E has identity columns at the pivots.
    EqualityBasis out;
    out.Z = Eigen::MatrixXd::Zero(m, m - p);
    out.P = Eigen::MatrixXd::Zero(m, p);
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      out.Z(j, col) = 1.0;
      for (Eigen::Index i = 0; i < p; ++i) out.Z(pivots[static_cast<std::size_t>(i)], col) = -A(i, j);
      ++col;
    }
    for (Eigen::Index i = 0; i < p; ++i) out.P.row(pivots[static_cast<std::size_t>(i)]) = rowOps.row(i);
    return out;
  }
};

// Solves min r^T dy + dy^T H dy / 2 subject to E dy = eqResidual on the null
// space of E, with Jacobi scaling and Cholesky (tiny regularization on failure).
inline bool solveNewton(const Eigen::MatrixXd& H, const EqualityBasis& basis, const Eigen::VectorXd& r,
                        const Eigen::VectorXd& eqResidual, NewtonStep& out) {
  const Eigen::VectorXd dp = basis.P.cols() ? Eigen::VectorXd(basis.P * eqResidual) : Eigen::VectorXd::Zero(H.rows());
  const Eigen::MatrixXd Hz = basis.Z.transpose() * H * basis.Z;
  const Eigen::VectorXd g = basis.Z.transpose() * (r + H * dp);
  const Eigen::Index k = Hz.rows();
  Eigen::VectorXd D(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(Hz(i, i) > 0.0) || !std::isfinite(Hz(i, i))) return false;
    D(i) = 1.0 / std::sqrt(Hz(i, i));
  }
  const Eigen::MatrixXd Hs = D.asDiagonal() * Hz * D.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt;
  double reg = 0.0;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd Hr = Hs;
    if (reg > 0.0) Hr.diagonal().array() += reg;
    llt.compute(Hr);
    if (llt.info() == Eigen::Success) break;
    if (attempt == 5) return false;
    reg = reg == 0.0 ? 1e-12 : reg * 100.0;
  }
  const Eigen::VectorXd vs = -llt.solve(D.asDiagonal() * g);
  if (!vs.allFinite()) return false;
  out.dy = dp + basis.Z * (D.asDiagonal() * vs);
  out.decrement = std::sqrt(std::max(0.0, vs.dot(Hs * vs)));
  return true;
}

// Full Newton steps at the final t until the decrement stops improving.
inline void finishCentering(const ConicProblem& prob, const EqualityBasis& basis, IpmSolution& sol,
                            const IpmOptions& opt) {
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.finalCenteringSteps; ++k) {
    NewtonSystem sys = assemble(prob, sol.y);
    NewtonStep step;
    if (!solveNewton(sys.hess, basis, sol.t * prob.c + sys.grad, prob.d - prob.E * sol.y, step)) return;
    sol.decrement = step.decrement;
    if (step.decrement >= last || step.decrement < 1e-12) return;
    last = step.decrement;
    double alpha = step.decrement < 0.25 ? 1.0 : 1.0 / (1.0 + step.decrement);
    Eigen::VectorXd next = sol.y + alpha * step.dy;
    int halvings = 0;
    while (!allInterior(prob, next)) {
      if (++halvings > 60) return;
      alpha *= 0.5;
      next = sol.y + alpha * step.dy;
    }
    sol.y = std::move(next);
    ++sol.iterations;
  }
}

// s_j = -grad F_j(y) / t, which lies in the interior of K_j^* for any interior
// y; eta is the least-squares fit of the remaining stationarity residual.
inline void pureMultipliers(const ConicProblem& prob, IpmSolution& sol) {
  sol.atomMultipliers.clear();
  Eigen::VectorXd rest = prob.c;
  for (const auto& a : prob.atoms) {
    const BarrierEval be = barrier(a, slice(sol.y, a));
    Eigen::VectorXd s = -be.gradient / sol.t;
    for (std::size_t k = 0; k < a.indices.size(); ++k) rest(static_cast<Eigen::Index>(a.indices[k])) -= s(static_cast<Eigen::Index>(k));
    sol.atomMultipliers.push_back(std::move(s));
  }
  if (prob.E.rows() > 0)
    sol.eqMultipliers = prob.E.transpose().colPivHouseholderQr().solve(rest);
  else
    sol.eqMultipliers.resize(0);
  sol.objective = prob.c.dot(sol.y);
  sol.dualityGap = sol.objective - prob.d.dot(sol.eqMultipliers);
  sol.gap = prob.nuTotal() / sol.t;
}

}  // namespace detail

/// Feasible-start path-following barrier method. Minimizes
/// t c^T y + sum_j F_j(y|slice_j) over E y = d by damped Newton, grows t
/// after each centering, and stops once nu / t is below gapTol.
///
/// Dual estimates come from the gradient map s_j = -grad F_j(y) / t after a
/// final tight centering; they lie strictly inside K_j^* and satisfy
/// stationarity up to the centering error.
inline IpmSolution solveConic(const ConicProblem& prob, const Eigen::VectorXd& y0, const IpmOptions& opt = {}) {
  prob.validate();
  if (static_cast<std::size_t>(y0.size()) != prob.dim) throw Error(ErrorKind::DimensionMismatch, "start point length");
  const double eqScale = 1.0 + (prob.d.size() ? prob.d.cwiseAbs().maxCoeff() : 0.0);
  if (prob.E.rows() > 0 && (prob.E * y0 - prob.d).cwiseAbs().maxCoeff() > 1e-10 * eqScale)
    throw Error(ErrorKind::StartNotFeasible, "start violates the equality constraints");
  if (!detail::allInterior(prob, y0)) throw Error(ErrorKind::StartNotFeasible, "start not interior to every cone atom");

  const detail::EqualityBasis basis = detail::EqualityBasis::build(prob.E);
  const double nu = prob.nuTotal();
  const double growth = opt.tGrowth > 1.0 ? opt.tGrowth : 1.0 + 0.2 / std::sqrt(nu);
  const double cScale = std::max(1.0, prob.c.cwiseAbs().maxCoeff());

  IpmSolution sol;
  sol.y = y0;
  sol.t = opt.t0;
  int lastDecade = opt.snapshotFromDecade - 1;
  if (opt.log) *opt.log << "iter,t,decrement,objective,gap\n";

  for (std::size_t iter = 0; iter < opt.maxIters; ++iter) {
    sol.iterations = iter + 1;
    detail::NewtonSystem sys;
    try {
      sys = detail::assemble(prob, sol.y);
    } catch (const Error& e) {
      sol.status = IpmStatus::NumericalFailure;
      sol.message = e.what();
      return sol;
    }
    const Eigen::VectorXd r = sol.t * prob.c + sys.grad;
    const Eigen::VectorXd eqRes = prob.d - prob.E * sol.y;
    detail::NewtonStep step;
    if (!detail::solveNewton(sys.hess, basis, r, eqRes, step)) {
      sol.status = IpmStatus::NumericalFailure;
      sol.message = "Newton system could not be factorized";
      return sol;
    }
    sol.decrement = step.decrement;
    sol.objective = prob.c.dot(sol.y);
    if (opt.log)
      *opt.log << iter << ',' << sol.t << ',' << step.decrement << ',' << sol.objective << ',' << nu / sol.t << '\n';

    if (sol.objective < -1e12 * cScale || sol.y.cwiseAbs().maxCoeff() > 1e14) {
      sol.status = IpmStatus::Unbounded;
      sol.message = "objective decreases without bound";
      return sol;
    }

    if (step.decrement <= opt.centeringTol) {
      sol.centered.push_back({sol.t, sol.objective});
      if (opt.snapshotFromDecade > 0) {
        const int decade = static_cast<int>(std::floor(-std::log10(nu / sol.t)));
        if (decade >= opt.snapshotFromDecade && decade > lastDecade) {
          sol.snapshots.push_back({sol.t, sol.y});
          lastDecade = decade;
        }
      }
      if (nu / sol.t <= opt.gapTol) {
        detail::finishCentering(prob, basis, sol, opt);
        detail::pureMultipliers(prob, sol);
        sol.status = IpmStatus::Converged;
        return sol;
      }
      sol.t *= growth;
      continue;
    }

    // Damped Newton step, shortened further if it would leave the interior.
    double alpha = 1.0 / (1.0 + step.decrement);
    Eigen::VectorXd next = sol.y + alpha * step.dy;
    int halvings = 0;
    while (!detail::allInterior(prob, next)) {
      if (++halvings > 60) {
        sol.status = IpmStatus::NumericalFailure;
        sol.message = "line search could not stay interior";
        return sol;
      }
      alpha *= 0.5;
      next = sol.y + alpha * step.dy;
    }
    sol.y = std::move(next);
    if (opt.checkIterates && !detail::allInterior(prob, sol.y)) {
      sol.status = IpmStatus::NumericalFailure;
      sol.message = "iterate left the interior";
      return sol;
    }
  }
  sol.status = IpmStatus::IterationLimit;
  sol.message = "iteration limit reached";
  return sol;
}

/// Converged solution rebuilt from a snapshot: tight centering at the
/// snapshot's t, then gradient-map multipliers. Near the end of the path the
/// attainable centering accuracy degrades like t * machine epsilon, so an
/// earlier snapshot can give more accurate multipliers at a slightly larger gap.
inline IpmSolution recenter(const ConicProblem& prob, const Snapshot& snap, const IpmOptions& opt = {}) {
  IpmSolution sol;
  sol.y = snap.y;
  sol.t = snap.t;
  const detail::EqualityBasis basis = detail::EqualityBasis::build(prob.E);
  detail::finishCentering(prob, basis, sol, opt);
  detail::pureMultipliers(prob, sol);
  sol.status = IpmStatus::Converged;
  return sol;
}

struct Multipliers {
  std::vector<Eigen::VectorXd> atoms;
  Eigen::VectorXd eq;
  /// || c - sum_j lift(s_j) - E^T eta ||_inf
  double stationarityResidual = 0.0;
};

/// Per-atom dual vectors (checked against the dual cones) and the
/// stationarity residual of the returned pair.
inline Multipliers extractMultipliers(const IpmSolution& sol, const ConicProblem& prob) {
  if (sol.status != IpmStatus::Converged) throw Error(ErrorKind::NotConverged, to_string(sol.status));
  Multipliers out;
  out.atoms = sol.atomMultipliers;
  out.eq = sol.eqMultipliers;
  Eigen::VectorXd resid = prob.c - prob.E.transpose() * out.eq;
  for (std::size_t j = 0; j < prob.atoms.size(); ++j) {
    const auto& a = prob.atoms[j];
    const auto& s = out.atoms[j];
    std::vector<double> pt(s.data(), s.data() + s.size());
    ConeAtom dual = a;
    if (a.kind == ConeKind::PowerCone) dual.kind = ConeKind::DualPowerCone;
    if (!membership(dual, pt, 1e-9))
      throw Error(ErrorKind::NumericalFailure, "multiplier of atom " + std::to_string(j) + " outside the dual cone");
    for (std::size_t k = 0; k < a.indices.size(); ++k) resid(static_cast<Eigen::Index>(a.indices[k])) -= s(static_cast<Eigen::Index>(k));
  }
  out.stationarityResidual = resid.size() ? resid.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

}  // namespace sonc
