#pragma once

#include <map>
#include <numeric>
#include <vector>

#include "ssmkit/types.hpp"

namespace ssmkit {

/// Exponent multi-index over a fixed set of variables. Lexicographic map key.
using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& k) {
  return std::accumulate(k.begin(), k.end(), 0);
}

/// Multi-index over parameterization coordinates p = (q_1, qb_1, ..., q_m, qb_m):
/// conjugation swaps each (q_i, qb_i) exponent pair.
inline MultiIndex conjugate_index(const MultiIndex& k) {
  MultiIndex c(k.size());
  for (std::size_t i = 0; i + 1 < k.size(); i += 2) {
    c[i] = k[i + 1];
    c[i + 1] = k[i];
  }
  return c;
}

/// All multi-indices of the given total degree in nvars variables,
/// in lexicographically increasing order.
std::vector<MultiIndex> multi_indices_of_degree(int nvars, int deg);

/// Truncated multivariate power series with scalar complex coefficients.
using ScalarSeries = std::map<MultiIndex, Complex>;
/// Truncated series with vector-valued coefficients.
using VectorSeries = std::map<MultiIndex, VectorXcd>;

ScalarSeries series_mul(const ScalarSeries& a, const ScalarSeries& b, int max_deg);
ScalarSeries series_pow(const ScalarSeries& a, int p, int max_deg, int nvars);

/// Evaluate a scalar series at a point.
Complex series_eval(const ScalarSeries& s, const VectorXcd& p);

}  // namespace ssmkit
