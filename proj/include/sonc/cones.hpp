#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sonc/error.hpp"
#include "sonc/polynomial.hpp"

namespace sonc {

enum class ConeKind { PowerCone, DualPowerCone, NonnegativeRay };

/// One cone constraint over a slice of a host vector. For the power kinds
/// the slice is (v_1, ..., v_r, z): the last index is the z-slot.
struct ConeAtom {
  ConeKind kind = ConeKind::NonnegativeRay;
  std::vector<double> signature;
  std::vector<std::size_t> indices;

  static ConeAtom power(std::vector<double> lambda, std::vector<std::size_t> idx) {
    return {ConeKind::PowerCone, std::move(lambda), std::move(idx)};
  }
  static ConeAtom dualPower(std::vector<double> lambda, std::vector<std::size_t> idx) {
    return {ConeKind::DualPowerCone, std::move(lambda), std::move(idx)};
  }
  static ConeAtom ray(std::size_t index) { return {ConeKind::NonnegativeRay, {}, {index}}; }

  /// Barrier parameter: r + 1 for a power cone with r outer entries, 1 for a ray.
  double nu() const { return kind == ConeKind::NonnegativeRay ? 1.0 : static_cast<double>(signature.size()) + 1.0; }

  void validate() const {
    std::vector<std::size_t> idx = indices;
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
      throw Error(ErrorKind::InvalidArgument, "cone atom indices repeat");
    if (kind == ConeKind::NonnegativeRay) {
      if (indices.size() != 1) throw Error(ErrorKind::InvalidArgument, "ray atom covers exactly one index");
      return;
    }
    if (indices.size() != signature.size() + 1)
      throw Error(ErrorKind::InvalidArgument, "power atom needs r outer slots and one z-slot");
    double sum = 0.0;
    for (double l : signature) {
      if (!(l > 0.0 && l < 1.0)) throw Error(ErrorKind::InvalidArgument, "signature entry outside (0,1)");
      sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorKind::InvalidArgument, "signature does not sum to 1");
  }
};

namespace detail {

inline constexpr double kTinyEntry = 1e-300;

// log of prod (v_i / w_i)^lambda_i, with w = 1 (primal) or w = lambda (dual);
// -inf when some v_i is (numerically) zero.
inline double logWeightedProduct(std::span<const double> v, const std::vector<double>& lambda, bool dual) {
  double s = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (v[i] < kTinyEntry) return -std::numeric_limits<double>::infinity();
    s += lambda[i] * (std::log(v[i]) - (dual ? std::log(lambda[i]) : 0.0));
  }
  return s;
}

}  // namespace detail

/// Membership with absolute slack tol. `point` is the extracted slice.
inline bool membership(const ConeAtom& atom, std::span<const double> point, double tol) {
  if (point.size() != atom.indices.size()) throw Error(ErrorKind::DimensionMismatch, "cone point length");
  if (atom.kind == ConeKind::NonnegativeRay) return point[0] >= -tol;
  const std::size_t r = atom.signature.size();
  for (std::size_t i = 0; i < r; ++i) {
    if (point[i] < -tol) return false;
  }
  const double bound = std::exp(detail::logWeightedProduct(point.first(r), atom.signature, atom.kind == ConeKind::DualPowerCone));
  return std::abs(point[r]) <= bound + tol;
}

/// Strict interior test for the primal kinds (barrier domain).
inline bool isInterior(const ConeAtom& atom, std::span<const double> point) {
  if (atom.kind == ConeKind::NonnegativeRay) return point[0] > 0.0;
  const std::size_t r = atom.signature.size();
  for (std::size_t i = 0; i < r; ++i) {
    if (!(point[i] > 0.0)) return false;
  }
  const double root = std::exp(detail::logWeightedProduct(point.first(r), atom.signature, atom.kind == ConeKind::DualPowerCone));
  return std::abs(point[r]) < root;
}

struct BarrierEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  double nu = 0.0;
};

/// Logarithmically homogeneous barriers:
///   ray:        -log v                                                  (nu = 1)
///   power cone: -log(prod v_i^{2 lambda_i} - z^2) - sum (1-lambda_i) log v_i   (nu = r + 1)
inline BarrierEval barrier(const ConeAtom& atom, std::span<const double> point) {
  if (point.size() != atom.indices.size()) throw Error(ErrorKind::DimensionMismatch, "cone point length");
  if (atom.kind == ConeKind::DualPowerCone)
    throw Error(ErrorKind::InvalidArgument, "no barrier for the dual power cone");
  if (!isInterior(atom, point)) throw Error(ErrorKind::PointNotInterior, "barrier evaluated outside the cone interior");

  BarrierEval out;
  out.nu = atom.nu();
  if (atom.kind == ConeKind::NonnegativeRay) {
    const double v = point[0];
    out.value = -std::log(v);
    out.gradient = Eigen::VectorXd::Constant(1, -1.0 / v);
    out.hessian = Eigen::MatrixXd::Constant(1, 1, 1.0 / (v * v));
    return out;
  }

  const std::size_t r = atom.signature.size();
  const auto& lam = atom.signature;
  const double z = point[r];
  double logRoot = 0.0;
  double logSum = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double lv = std::log(point[i]);
    logRoot += lam[i] * lv;
    logSum += (1.0 - lam[i]) * lv;
  }
  const double root = std::exp(logRoot);  // prod v^lambda
  const double phi = root * root;
  const double psi = (root - std::abs(z)) * (root + std::abs(z));

  out.value = -std::log(psi) - logSum;
  out.gradient.resize(static_cast<Eigen::Index>(r + 1));
  out.hessian.setZero(static_cast<Eigen::Index>(r + 1), static_cast<Eigen::Index>(r + 1));

  // a_i = d psi / d v_i
  Eigen::VectorXd a(static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) a(static_cast<Eigen::Index>(i)) = 2.0 * lam[i] * phi / point[i];

  const double invPsi = 1.0 / psi;
  for (std::size_t i = 0; i < r; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.gradient(ii) = -a(ii) * invPsi - (1.0 - lam[i]) / point[i];
  }
  const auto zi = static_cast<Eigen::Index>(r);
  out.gradient(zi) = 2.0 * z * invPsi;

  for (std::size_t i = 0; i < r; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < r; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      double d2psi = 4.0 * lam[i] * lam[j] * phi / (point[i] * point[j]);
      if (i == j) d2psi -= 2.0 * lam[i] * phi / (point[i] * point[i]);
      out.hessian(ii, jj) = -d2psi * invPsi + a(ii) * a(jj) * invPsi * invPsi;
    }
    out.hessian(ii, ii) += (1.0 - lam[i]) / (point[i] * point[i]);
    const double cross = -2.0 * z * a(ii) * invPsi * invPsi;
    out.hessian(ii, zi) = cross;
    out.hessian(zi, ii) = cross;
  }
  out.hessian(zi, zi) = 2.0 * invPsi + 4.0 * z * z * invPsi * invPsi;
  return out;
}

enum class SlaterMode { Phase1, Phase2 };

/// theta = 1 / max ||alpha||^2 (1 when the support is just the origin).
inline double defaultSlaterTheta(const std::vector<Exponent>& support) {
  double m = 0.0;
  for (const auto& a : support) m = std::max(m, a.squaredNorm());
  return m > 0.0 ? 1.0 / m : 1.0;
}

/// Strictly feasible point for every power cone on the support:
///   log y_alpha = theta * (||alpha||^2 - (D + 1) * sum_i alpha_i) - [Phase1] theta
/// with D the largest exponent entry. The quadratic part is strictly convex,
/// so log y_beta < sum lambda_i log y_alpha_i on every circuit; the linear
/// part cancels on circuits and makes y_alpha < 1 for alpha != 0, y_0 = 1.
/// Phase1 scales everything by exp(-theta) so that y < 1 on the whole support.
inline std::vector<double> slaterPoint(const std::vector<Exponent>& support, SlaterMode mode, double theta) {
  if (!(theta > 0.0)) throw Error(ErrorKind::InvalidArgument, "theta must be positive");
  int maxEntry = 0;
  for (const auto& a : support) {
    for (int v : a.entries()) maxEntry = std::max(maxEntry, v);
  }
  std::vector<double> y;
  y.reserve(support.size());
  for (const auto& a : support) {
    double q = a.squaredNorm() - (static_cast<double>(maxEntry) + 1.0) * static_cast<double>(a.degree());
    if (mode == SlaterMode::Phase1) q -= 1.0;
    y.push_back(std::exp(theta * q));
  }
  return y;
}

}  // namespace sonc
