#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sonc/error.hpp"
#include "sonc/lp.hpp"

namespace sonc {

/// Monomial exponent vector. Ordered graded-lexicographically: total degree
/// first, then entries compared left to right.
class Exponent {
 public:
  Exponent() = default;
  explicit Exponent(std::vector<int> entries) : entries_(std::move(entries)) {}
  Exponent(std::initializer_list<int> entries) : entries_(entries) {}

  /// Checked construction from wide integers (file input).
  static Exponent fromWide(std::span<const std::int64_t> raw) {
    std::vector<int> e;
    e.reserve(raw.size());
    for (std::int64_t v : raw) {
      if (v < 0) throw Error(ErrorKind::NegativeExponentEntry, "exponent entry " + std::to_string(v));
      if (v > std::numeric_limits<std::int32_t>::max())
        throw Error(ErrorKind::ExponentOverflow, "exponent entry " + std::to_string(v));
      e.push_back(static_cast<int>(v));
    }
    return Exponent(std::move(e));
  }

  static Exponent zero(std::size_t n) { return Exponent(std::vector<int>(n, 0)); }

  std::size_t dim() const { return entries_.size(); }
  int operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<int>& entries() const { return entries_; }

  long long degree() const {
    long long d = 0;
    for (int v : entries_) d += v;
    return d;
  }

  bool isEven() const {
    return std::all_of(entries_.begin(), entries_.end(), [](int v) { return v % 2 == 0; });
  }

  bool isZero() const {
    return std::all_of(entries_.begin(), entries_.end(), [](int v) { return v == 0; });
  }

  double squaredNorm() const {
    double s = 0.0;
    for (int v : entries_) s += static_cast<double>(v) * v;
    return s;
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(entries_[i]);
    }
    return s + ")";
  }

  friend bool operator==(const Exponent&, const Exponent&) = default;

  friend std::strong_ordering operator<=>(const Exponent& a, const Exponent& b) {
    if (auto c = a.degree() <=> b.degree(); c != 0) return c;
    return a.entries_ <=> b.entries_;
  }

 private:
  std::vector<int> entries_;
};

struct RawTerm {
  std::vector<std::int64_t> exp;
  double coef = 0.0;
};

/// Sparse polynomial with its support kept in graded-lex order. The origin is
/// always present (possibly with coefficient zero) and is therefore index 0.
class SparsePolynomial {
 public:
  struct Term {
    Exponent exp;
    double coef;
  };

  /// Builds a normalized polynomial. Zero coefficients away from the origin
  /// are dropped; the origin is added with coefficient 0 if missing.
  static SparsePolynomial normalize(std::size_t n, const std::vector<RawTerm>& raw) {
    if (n == 0) throw Error(ErrorKind::DimensionMismatch, "dimension must be at least 1");
    std::map<Exponent, double> terms;
    for (const auto& t : raw) {
      if (t.exp.size() != n)
        throw Error(ErrorKind::DimensionMismatch,
                    "exponent of length " + std::to_string(t.exp.size()) + " in dimension " + std::to_string(n));
      if (!std::isfinite(t.coef)) throw Error(ErrorKind::InvalidArgument, "non-finite coefficient");
      Exponent e = Exponent::fromWide(t.exp);
      if (terms.count(e)) throw Error(ErrorKind::DuplicateExponent, e.str());
      terms.emplace(std::move(e), t.coef);
    }
    return SparsePolynomial(n, std::move(terms));
  }

  static SparsePolynomial fromTerms(std::size_t n, const std::vector<std::pair<Exponent, double>>& terms) {
    std::vector<RawTerm> raw;
    raw.reserve(terms.size());
    for (const auto& [e, c] : terms) {
      raw.push_back({std::vector<std::int64_t>(e.entries().begin(), e.entries().end()), c});
    }
    return normalize(n, raw);
  }

  std::size_t dim() const { return n_; }
  std::size_t size() const { return terms_.size(); }
  const std::vector<Term>& terms() const { return terms_; }
  const Exponent& exponent(std::size_t i) const { return terms_[i].exp; }
  double coef(std::size_t i) const { return terms_[i].coef; }

  std::optional<std::size_t> indexOf(const Exponent& e) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), e,
                               [](const Term& t, const Exponent& x) { return t.exp < x; });
    if (it == terms_.end() || it->exp != e) return std::nullopt;
    return static_cast<std::size_t>(it - terms_.begin());
  }

  double coefOf(const Exponent& e) const {
    auto i = indexOf(e);
    return i ? terms_[*i].coef : 0.0;
  }

  /// Indices of componentwise even exponents (origin included).
  const std::vector<std::size_t>& evenSupport() const { return even_; }
  const std::vector<std::size_t>& oddSupport() const { return odd_; }
  /// Even exponents with strictly positive coefficient.
  const std::vector<std::size_t>& monomialSquares() const { return squares_; }

  bool isMonomialSquare(std::size_t i) const { return terms_[i].exp.isEven() && terms_[i].coef > 0.0; }

  /// Indices of the Newton polytope vertices; computed once, shared by copies.
  const std::vector<std::size_t>& vertices() const {
    std::call_once(cache_->once, [this] { cache_->vertices = computeVertices(); });
    return cache_->vertices;
  }

  bool isVertex(std::size_t i) const {
    const auto& v = vertices();
    return std::binary_search(v.begin(), v.end(), i);
  }

  /// max(1, max |f_alpha|); used to make tolerances relative.
  double scale() const {
    double s = 1.0;
    for (const auto& t : terms_) s = std::max(s, std::abs(t.coef));
    return s;
  }

  /// Same support and cached vertices, constant coefficient shifted by c.
  SparsePolynomial shifted(double c) const {
    SparsePolynomial out = *this;
    out.terms_[0].coef += c;
    out.classify();
    return out;
  }

 private:
  struct VertexCache {
    std::once_flag once;
    std::vector<std::size_t> vertices;
  };

  SparsePolynomial(std::size_t n, std::map<Exponent, double> terms)
      : n_(n), cache_(std::make_shared<VertexCache>()) {
    Exponent origin = Exponent::zero(n);
    terms.try_emplace(origin, 0.0);
    for (auto& [e, c] : terms) {
      if (c == 0.0 && e != origin) continue;
      terms_.push_back({e, c});
    }
    classify();
  }

  void classify() {
    even_.clear();
    odd_.clear();
    squares_.clear();
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (terms_[i].exp.isEven()) {
        even_.push_back(i);
        if (terms_[i].coef > 0.0) squares_.push_back(i);
      } else {
        odd_.push_back(i);
      }
    }
  }

  // A support point is a vertex iff it is not a convex combination of the
  // other support points, decided by one feasibility LP per point.
  std::vector<std::size_t> computeVertices() const {
    const std::size_t m = terms_.size();
    if (m == 1) return {0};
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m; ++i) {
      LpProblem lp(n_ + 1, m - 1);
      std::size_t col = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        for (std::size_t r = 0; r < n_; ++r) lp.A(r, col) = terms_[j].exp[r];
        lp.A(n_, col) = 1.0;
        ++col;
      }
      for (std::size_t r = 0; r < n_; ++r) lp.b(r) = terms_[i].exp[r];
      lp.b(n_) = 1.0;
      LpResult res = solveLp(lp);
      if (res.status == LpStatus::Infeasible) out.push_back(i);
    }
    return out;
  }

  std::size_t n_ = 0;
  std::vector<Term> terms_;
  std::vector<std::size_t> even_, odd_, squares_;
  std::shared_ptr<VertexCache> cache_;
};

/// z^alpha with 0^0 = 1.
inline double monomial(const Exponent& e, std::span<const double> z) {
  double v = 1.0;
  for (std::size_t i = 0; i < e.dim(); ++i) {
    if (e[i] != 0) v *= std::pow(z[i], e[i]);
  }
  return v;
}

inline double evaluate(const SparsePolynomial& p, std::span<const double> z) {
  if (z.size() != p.dim()) throw Error(ErrorKind::DimensionMismatch, "evaluation point length");
  double s = 0.0;
  for (const auto& t : p.terms()) s += t.coef * monomial(t.exp, z);
  return s;
}

inline std::vector<double> gradient(const SparsePolynomial& p, std::span<const double> z) {
  if (z.size() != p.dim()) throw Error(ErrorKind::DimensionMismatch, "evaluation point length");
  const std::size_t n = p.dim();
  std::vector<double> g(n, 0.0);
  for (const auto& t : p.terms()) {
    for (std::size_t k = 0; k < n; ++k) {
      if (t.exp[k] == 0) continue;
      double v = t.coef * t.exp[k];
      for (std::size_t i = 0; i < n; ++i) {
        int power = t.exp[i] - (i == k ? 1 : 0);
        if (power != 0) v *= std::pow(z[i], power);
      }
      g[k] += v;
    }
  }
  return g;
}

struct SupportClasses {
  std::vector<Exponent> even, odd, monomialSquares;
};

inline SupportClasses classifySupport(const SparsePolynomial& p) {
  SupportClasses out;
  for (auto i : p.evenSupport()) out.even.push_back(p.exponent(i));
  for (auto i : p.oddSupport()) out.odd.push_back(p.exponent(i));
  for (auto i : p.monomialSquares()) out.monomialSquares.push_back(p.exponent(i));
  return out;
}

inline std::vector<Exponent> newtonVertices(const SparsePolynomial& p) {
  std::vector<Exponent> out;
  for (auto i : p.vertices()) out.push_back(p.exponent(i));
  return out;
}

}  // namespace sonc
