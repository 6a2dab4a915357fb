#pragma once

#include <vector>

#include "ssmkit/types.hpp"

namespace ssmkit {

/// One monomial term of a polynomial force: coeff * prod_s state[idx_s]^pow_s,
/// added to component `output` of the force vector.
struct ForceTerm {
  Real coeff = 0.0;
  int output = 0;
  std::vector<std::pair<int, int>> factors;  // (state index, power), powers >= 1

  int degree() const {
    int d = 0;
    for (const auto& [idx, pw] : factors) d += pw;
    return d;
  }
};

/// Sparse polynomial nonlinearity f(s) on a state vector s, degree >= 2 terms only.
class PolynomialForce {
 public:
  PolynomialForce() = default;
  PolynomialForce(int state_dim, int output_dim)
      : state_dim_(state_dim), output_dim_(output_dim) {}

  /// Adds a term; merges with an existing term of equal output and factor multiset.
  void add_term(Real coeff, int output, std::vector<std::pair<int, int>> factors);

  const std::vector<ForceTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  int state_dim() const { return state_dim_; }
  int output_dim() const { return output_dim_; }
  int max_degree() const;

  /// Throws std::invalid_argument on out-of-range state indices or degree < 2 terms.
  void validate() const;

  VectorXd eval(const VectorXd& s) const;
  MatrixXd jacobian(const VectorXd& s) const;

 private:
  int state_dim_ = 0;
  int output_dim_ = 0;
  std::vector<ForceTerm> terms_;
};

}  // namespace ssmkit
