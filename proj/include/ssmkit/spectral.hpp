#pragma once

#include <vector>

#include "ssmkit/model.hpp"
#include "ssmkit/rational.hpp"
#include "ssmkit/types.hpp"

namespace ssmkit {

/// Generalized eigendata of the (A, B) pencil: A v = lambda B v, u* A = lambda u* B,
/// binormalized so that u_j* B v_j = 1. Sorted by |Im| ascending, then Re descending;
/// within a conjugate pair the Im > 0 member comes first.
struct Spectrum {
  VectorXcd eigenvalues;
  MatrixXcd right;  // columns v_j
  MatrixXcd left;   // columns u_j
};

/// One internal-resonance relation lambda_i ~ l . lambda + j . conj(lambda).
struct ResonancePair {
  std::vector<int> l, j;
  Real detuning = 0.0;  // |lambda_i - l.lambda - j.conj(lambda)|
};

/// Selected master spectral subspace of m complex-conjugate mode pairs.
struct MasterSubspace {
  int m = 0;
  VectorXcd lambda;           // one eigenvalue per pair, Im > 0
  MatrixXcd V;                // right vectors, N x m
  MatrixXcd U;                // left vectors, N x m
  std::vector<std::vector<ResonancePair>> R;  // resonance set per master mode
  std::vector<Rational> r;    // external resonance ratios (Eq. of Theorem 2 frame)
  Rational r_d;               // largest common divisor of {r_i}
  Real omega_ref = 0.0;       // Omega used for external-resonance detection
  Real tol_rel = 0.05;
};

/// k smallest-|Im| eigenpairs of (A, B) with both-sided vectors.
/// Right vectors are scaled with mass-normalized displacement parts when the
/// system originates from a MechSystem (phi^T M phi = 1), otherwise unit norm;
/// the entry of largest magnitude is rotated to the positive real axis.
Spectrum eig_pair(const FirstOrderSystem& sys, int k);

/// All (l, j) with 2 <= |l+j| <= max_order and
/// |lambda_i - l.lambda - j.conj(lambda)| <= tol_rel * |Im lambda_i|, per mode i.
std::vector<std::vector<ResonancePair>> detect_inner_resonances(const VectorXcd& lambda,
                                                                int max_order, Real tol_rel);

/// Rational r_i with |Im lambda_i - r_i Omega| <= tol_rel * Omega, denominators
/// bounded by cap (smallest admissible denominator wins). Throws naming the mode
/// if none is admissible. Also returns r_d = rational gcd of the set.
struct ExternalResonance {
  std::vector<Rational> r;
  Rational r_d;
};
ExternalResonance detect_external_resonance(const VectorXcd& lambda, Real omega,
                                            Real tol_rel, int denominator_cap = 10);

/// Absolute spectral quotient Int(min Re / max Re) over the stated spectra.
/// Int is floor of the (positive) quotient.
int spectral_quotient(const VectorXcd& full_spectrum, const VectorXcd& master_spectrum);

/// Outer eigenvalues violating the low-order non-resonance condition:
/// a.Re(lam^E) + b.Re(conj lam^E) == Re(lam_k) within tol. Sigma(E) routinely
/// reaches 1e4 on FE models, so the scan is capped at min(Sigma, max_check_order);
/// checked_order records how far it actually went.
struct NonResonanceReport {
  int sigma = 0;
  int checked_order = 0;
  struct Violation {
    int outer_index;
    std::vector<int> a, b;
    Real gap;
  };
  std::vector<Violation> violations;
  bool satisfied() const { return violations.empty(); }
};
NonResonanceReport check_nonresonance(const Spectrum& spectrum, const VectorXcd& master,
                                      Real tol = 1e-8, int max_check_order = 10);

/// Selects mode pairs by index (into the Im > 0 members of eig_pair output order)
/// and fills resonance data. Throws if a selected mode has Re >= 0.
MasterSubspace select_master(const Spectrum& sp, const std::vector<int>& pair_indices,
                             int max_order, Real omega, Real tol_rel = 0.05,
                             int denominator_cap = 10);

}  // namespace ssmkit
