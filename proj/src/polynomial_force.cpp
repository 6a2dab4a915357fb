#include "ssmkit/polynomial_force.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssmkit {

namespace {

std::vector<std::pair<int, int>> canonical(std::vector<std::pair<int, int>> f) {
  std::sort(f.begin(), f.end());
  // merge repeated state indices
  std::vector<std::pair<int, int>> out;
  for (const auto& [idx, pw] : f) {
    if (!out.empty() && out.back().first == idx)
      out.back().second += pw;
    else
      out.emplace_back(idx, pw);
  }
  return out;
}

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

void PolynomialForce::add_term(Real coeff, int output,
                               std::vector<std::pair<int, int>> factors) {
  auto f = canonical(std::move(factors));
  for (auto& t : terms_) {
    if (t.output == output && t.factors == f) {
      t.coeff += coeff;
      return;
    }
  }
  ForceTerm t;
  t.coeff = coeff;
  t.output = output;
  t.factors = std::move(f);
  terms_.push_back(std::move(t));
}

int PolynomialForce::max_degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, t.degree());
  return d;
}

void PolynomialForce::validate() const {
  for (const auto& t : terms_) {
    if (t.output < 0 || t.output >= output_dim_)
      throw std::invalid_argument("PolynomialForce: output index out of range");
    if (t.degree() < 2)
      throw std::invalid_argument("PolynomialForce: terms must have degree >= 2");
    for (const auto& [idx, pw] : t.factors) {
      if (idx < 0 || idx >= state_dim_)
        throw std::invalid_argument("PolynomialForce: state index out of range");
      if (pw < 1) throw std::invalid_argument("PolynomialForce: nonpositive power");
    }
  }
}

VectorXd PolynomialForce::eval(const VectorXd& s) const {
  if (s.size() != state_dim_)
    throw std::invalid_argument("PolynomialForce: state dimension mismatch");
  VectorXd out = VectorXd::Zero(output_dim_);
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (const auto& [idx, pw] : t.factors) v *= ipow(s[idx], pw);
    out[t.output] += v;
  }
  return out;
}

MatrixXd PolynomialForce::jacobian(const VectorXd& s) const {
  if (s.size() != state_dim_)
    throw std::invalid_argument("PolynomialForce: state dimension mismatch");
  MatrixXd J = MatrixXd::Zero(output_dim_, state_dim_);
  for (const auto& t : terms_) {
    for (std::size_t d = 0; d < t.factors.size(); ++d) {
      const auto [di, dp] = t.factors[d];
      double v = t.coeff * dp * ipow(s[di], dp - 1);
      for (std::size_t o = 0; o < t.factors.size(); ++o) {
        if (o == d) continue;
        const auto [oi, op] = t.factors[o];
        v *= ipow(s[oi], op);
      }
      J(t.output, di) += v;
    }
  }
  return J;
}

}  // namespace ssmkit
