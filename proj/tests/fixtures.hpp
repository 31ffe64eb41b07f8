#pragma once

#include "sonc/sonc.hpp"

namespace fixtures {

// 1 + z2^2 - z1^2 z2^2 + z1^2 z2^6 + z1^6 z2^2
inline sonc::SparsePolynomial motzkinLike() {
  return sonc::SparsePolynomial::normalize(2, {{{0, 0}, 1}, {{0, 2}, 1}, {{2, 2}, -1}, {{2, 6}, 1}, {{6, 2}, 1}});
}

inline sonc::Circuit c1() { return sonc::makeCircuit({{0, 0}, {2, 6}, {6, 2}}, {2, 2}); }
inline sonc::Circuit c2() { return sonc::makeCircuit({{0, 2}, {6, 2}}, {2, 2}); }

inline sonc::SparsePolynomial univariate(std::vector<std::pair<int, double>> terms) {
  std::vector<sonc::RawTerm> raw;
  for (auto [e, c] : terms) raw.push_back({{e}, c});
  return sonc::SparsePolynomial::normalize(1, raw);
}

}  // namespace fixtures
