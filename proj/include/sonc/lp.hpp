#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sonc/error.hpp"

namespace sonc {

/// min c^T x  s.t.  A x = b, x >= 0.
struct LpProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;

  LpProblem() = default;
  LpProblem(std::size_t rows, std::size_t cols)
      : A(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))),
        b(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows))),
        c(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols))) {}
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  /// Basic column indices, one per linearly independent row.
  std::vector<std::size_t> basis;
  double objective = 0.0;
  /// Phase-one optimum (sum of artificials); positive certifies infeasibility.
  double phaseOneObjective = 0.0;
  /// Recession direction with c^T ray < 0 when Unbounded.
  Eigen::VectorXd ray;
  std::size_t pivots = 0;
};

namespace detail {

class Simplex {
 public:
  Simplex(const LpProblem& prob, double feasTol)
      : feasTol_(feasTol),
        m_(prob.A.rows()),
        k_(prob.A.cols()),
        pivotCap_(50 * static_cast<std::size_t>(prob.A.rows() + prob.A.cols())) {
    // Tableau columns: original [0, k), artificial [k, k+m).
    A_.resize(m_, k_ + m_);
    A_.leftCols(k_) = prob.A;
    A_.rightCols(m_).setIdentity();
    b_ = prob.b;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (b_(i) < 0) {
        A_.row(i).head(k_) *= -1.0;
        b_(i) = -b_(i);
      }
    }
    c_ = Eigen::VectorXd::Zero(k_ + m_);
    c_.head(k_) = prob.c;
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = static_cast<std::size_t>(k_ + i);
    allowed_.assign(static_cast<std::size_t>(k_ + m_), true);
    artRow_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) artRow_[static_cast<std::size_t>(i)] = i;
  }

  LpResult run() {
    LpResult res;
    const double bscale = std::max(1.0, b_.size() ? b_.cwiseAbs().maxCoeff() : 0.0);

    // Phase one: minimize the sum of artificials.
    Eigen::VectorXd phase1Cost = Eigen::VectorXd::Zero(k_ + m_);
    phase1Cost.tail(m_).setOnes();
    refactor();
    if (iterate(phase1Cost) == Outcome::Unbounded)
      throw Error(ErrorKind::LpNumericalFailure, "phase one reported unbounded");
    res.phaseOneObjective = objectiveOf(phase1Cost);
    if (res.phaseOneObjective > feasTol_ * bscale) {
      res.status = LpStatus::Infeasible;
      res.pivots = pivots_;
      return res;
    }
    driveOutArtificials();
    for (Eigen::Index j = k_; j < k_ + m_; ++j) allowed_[static_cast<std::size_t>(j)] = false;

    // Phase two.
    Outcome out = iterate(c_);
    if (out == Outcome::Optimal) polishBasicSolution();
    res.pivots = pivots_;
    res.x = Eigen::VectorXd::Zero(k_);
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (basis_[i] < static_cast<std::size_t>(k_)) res.x(static_cast<Eigen::Index>(basis_[i])) = xB_(static_cast<Eigen::Index>(i));
    }
    res.basis = basis_;
    if (out == Outcome::Unbounded) {
      res.status = LpStatus::Unbounded;
      res.ray = Eigen::VectorXd::Zero(k_);
      res.ray(static_cast<Eigen::Index>(enteringAtUnbounded_)) = 1.0;
      for (std::size_t i = 0; i < basis_.size(); ++i)
        res.ray(static_cast<Eigen::Index>(basis_[i])) = -rayDirection_(static_cast<Eigen::Index>(i));
      res.objective = -std::numeric_limits<double>::infinity();
      return res;
    }
    res.status = LpStatus::Optimal;
    res.objective = c_.head(k_).dot(res.x);
    return res;
  }

 private:
  enum class Outcome { Optimal, Unbounded };

  static constexpr std::size_t kRefactorEvery = 30;
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kBreakdownTol = 1e-11;

  Eigen::MatrixXd basisMatrix() const {
    Eigen::MatrixXd B(A_.rows(), static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t i = 0; i < basis_.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = A_.col(static_cast<Eigen::Index>(basis_[i]));
    return B;
  }

  void refactor() {
    Eigen::MatrixXd B = basisMatrix();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (B.rows() > 0 && (!lu.isInvertible() || std::abs(lu.maxPivot()) < kBreakdownTol))
      throw Error(ErrorKind::LpNumericalFailure, "singular basis during refactorization");
    Binv_ = B.rows() > 0 ? Eigen::MatrixXd(lu.inverse()) : Eigen::MatrixXd(0, 0);
    xB_ = Binv_ * b_;
    sinceRefactor_ = 0;
  }

  // Fresh factorization of the final basis plus one refinement step; the
  // product-form updates lose accuracy over long pivot sequences.
  void polishBasicSolution() {
    if (A_.rows() == 0) return;
    const Eigen::MatrixXd B = basisMatrix();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) return;
    Eigen::VectorXd x = lu.solve(b_);
    x += lu.solve(Eigen::VectorXd(b_ - B * x));
    if (x.allFinite()) xB_ = x;
  }

  double objectiveOf(const Eigen::VectorXd& cost) const {
    double v = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) v += cost(static_cast<Eigen::Index>(basis_[i])) * xB_(static_cast<Eigen::Index>(i));
    return v;
  }

  void pivot(std::size_t row, std::size_t entering, const Eigen::VectorXd& u) {
    const Eigen::Index r = static_cast<Eigen::Index>(row);
    const double piv = u(r);
    if (std::abs(piv) < kBreakdownTol) throw Error(ErrorKind::LpNumericalFailure, "pivot below breakdown tolerance");
    Binv_.row(r) /= piv;
    xB_(r) /= piv;
    for (Eigen::Index i = 0; i < Binv_.rows(); ++i) {
      if (i == r || u(i) == 0.0) continue;
      Binv_.row(i) -= u(i) * Binv_.row(r);
      xB_(i) -= u(i) * xB_(r);
    }
    basis_[row] = entering;
    ++pivots_;
    if (pivots_ > pivotCap_) throw Error(ErrorKind::MaxPivotsExceeded, std::to_string(pivotCap_) + " pivots");
    if (++sinceRefactor_ >= kRefactorEvery) refactor();
  }

  // Primal simplex with Bland's rule: lowest-index improving column enters,
  // lowest-index basic variable leaves among ratio ties.
  Outcome iterate(const Eigen::VectorXd& cost) {
    const double ctol = 1e-9 * std::max(1.0, cost.size() ? cost.cwiseAbs().maxCoeff() : 0.0);
    std::vector<bool> isBasic;
    for (;;) {
      isBasic.assign(static_cast<std::size_t>(k_ + m_), false);
      for (auto j : basis_) isBasic[j] = true;
      Eigen::VectorXd cB(static_cast<Eigen::Index>(basis_.size()));
      for (std::size_t i = 0; i < basis_.size(); ++i) cB(static_cast<Eigen::Index>(i)) = cost(static_cast<Eigen::Index>(basis_[i]));
      const Eigen::RowVectorXd duals = cB.transpose() * Binv_;

      std::size_t entering = SIZE_MAX;
      for (Eigen::Index j = 0; j < k_ + m_; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (!allowed_[uj] || isBasic[uj]) continue;
        const double reduced = cost(j) - duals.dot(A_.col(j));
        if (reduced < -ctol) {
          entering = uj;
          break;
        }
      }
      if (entering == SIZE_MAX) return Outcome::Optimal;

      const Eigen::VectorXd u = Binv_ * A_.col(static_cast<Eigen::Index>(entering));
      std::size_t leave = SIZE_MAX;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u(i) <= kPivotTol) continue;
        const double ratio = std::max(0.0, xB_(i)) / u(i);
        const auto ui = static_cast<std::size_t>(i);
        if (leave == SIZE_MAX || ratio < best - 1e-12 * (1.0 + best)) {
          best = ratio;
          leave = ui;
        } else if (ratio <= best + 1e-12 * (1.0 + best) && basis_[ui] < basis_[leave]) {
          leave = ui;
        }
      }
      if (leave == SIZE_MAX) {
        enteringAtUnbounded_ = entering;
        rayDirection_ = u;
        return Outcome::Unbounded;
      }
      pivot(leave, entering, u);
    }
  }

  // Replace zero-valued artificials in the basis by original columns; rows
  // where no original column can enter are linearly dependent and dropped.
  void driveOutArtificials() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < basis_.size(); ++i) {
        if (basis_[i] < static_cast<std::size_t>(k_)) continue;
        const Eigen::RowVectorXd row = Binv_.row(static_cast<Eigen::Index>(i)) * A_.leftCols(k_);
        std::size_t entering = SIZE_MAX;
        for (Eigen::Index j = 0; j < k_; ++j) {
          const auto uj = static_cast<std::size_t>(j);
          if (std::find(basis_.begin(), basis_.end(), uj) != basis_.end()) continue;
          if (std::abs(row(j)) > kPivotTol) {
            entering = uj;
            break;
          }
        }
        if (entering != SIZE_MAX) {
          const Eigen::VectorXd u = Binv_ * A_.col(static_cast<Eigen::Index>(entering));
          pivot(i, entering, u);
        } else {
          dropRow(i);
        }
        changed = true;
        break;
      }
    }
  }

  void dropRow(std::size_t basisPos) {
    // The artificial basic at basisPos is the unit vector of some row.
    const std::size_t art = basis_[basisPos];
    const Eigen::Index row = artRow_[art - static_cast<std::size_t>(k_)];
    Eigen::MatrixXd A2(A_.rows() - 1, A_.cols());
    Eigen::VectorXd b2(b_.size() - 1);
    for (Eigen::Index i = 0, r = 0; i < A_.rows(); ++i) {
      if (i == row) continue;
      A2.row(r) = A_.row(i);
      b2(r) = b_(i);
      ++r;
    }
    A_ = std::move(A2);
    b_ = std::move(b2);
    allowed_[art] = false;
    for (auto& r : artRow_) {
      if (r > row) --r;
      else if (r == row) r = -1;
    }
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(basisPos));
    refactor();
  }

  double feasTol_;
  Eigen::Index m_, k_;
  std::size_t pivotCap_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_, c_;
  Eigen::MatrixXd Binv_;
  Eigen::VectorXd xB_;
  std::vector<std::size_t> basis_;
  std::vector<bool> allowed_;
  std::vector<Eigen::Index> artRow_;
  std::size_t pivots_ = 0;
  std::size_t sinceRefactor_ = 0;
  std::size_t enteringAtUnbounded_ = 0;
  Eigen::VectorXd rayDirection_;
};

}  // namespace detail

/// Two-phase primal simplex; on Optimal the solution is a basic feasible
/// solution (nonbasic entries exactly zero).
inline LpResult solveLp(const LpProblem& prob, double feasTol = 1e-9) {
  if (prob.b.size() != prob.A.rows() || prob.c.size() != prob.A.cols())
    throw Error(ErrorKind::DimensionMismatch, "LP data shapes disagree");
  if (!(feasTol > 0)) throw Error(ErrorKind::InvalidArgument, "feasTol must be positive");
  if (!prob.A.allFinite() || !prob.b.allFinite() || !prob.c.allFinite())
    throw Error(ErrorKind::InvalidArgument, "non-finite LP data");
  return detail::Simplex(prob, feasTol).run();
}

}  // namespace sonc
