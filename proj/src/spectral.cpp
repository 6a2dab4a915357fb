#include "ssmkit/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ssmkit {

namespace {

struct EigPair {
  Complex lambda;
  VectorXcd v;
};

// enumerate all (l, j) in N0^m x N0^m with total degree exactly d
void enumerate_lj(int m, int d,
                  const std::function<void(const std::vector<int>&, const std::vector<int>&)>& f) {
  std::vector<int> e(2 * m, 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == 2 * m - 1) {
      e[pos] = left;
      std::vector<int> l(e.begin(), e.begin() + m), j(e.begin() + m, e.end());
      f(l, j);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      e[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, d);
}

}  // namespace

Spectrum eig_pair(const FirstOrderSystem& sys, int k) {
  const int N = sys.N;
  if (k <= 0 || k > N) throw std::invalid_argument("eig_pair: k out of range");

  // Ruiz equilibration of the pencil: badly scaled FE models (stiffness terms in
  // the damping block vs rotational masses) otherwise destroy B^{-1}A accuracy.
  VectorXd rs = VectorXd::Ones(N), cs = VectorXd::Ones(N);
  MatrixXd As = sys.A, Bs = sys.B;
  for (int pass = 0; pass < 6; ++pass) {
    for (int i = 0; i < N; ++i) {
      const Real m = std::sqrt(std::max(As.row(i).cwiseAbs().maxCoeff(),
                                        Bs.row(i).cwiseAbs().maxCoeff()));
      if (m > 0) {
        As.row(i) /= m;
        Bs.row(i) /= m;
        rs[i] /= m;
      }
    }
    for (int j = 0; j < N; ++j) {
      const Real m = std::sqrt(std::max(As.col(j).cwiseAbs().maxCoeff(),
                                        Bs.col(j).cwiseAbs().maxCoeff()));
      if (m > 0) {
        As.col(j) /= m;
        Bs.col(j) /= m;
        cs[j] /= m;
      }
    }
  }

  Eigen::PartialPivLU<MatrixXd> Blu(Bs);
  if (!Blu.solve(As).allFinite()) throw std::runtime_error("eig_pair: B is singular");

  Eigen::EigenSolver<MatrixXd> right_solver(Blu.solve(As));
  if (right_solver.info() != Eigen::Success)
    throw std::runtime_error("eig_pair: eigen solver failed");
  Eigen::EigenSolver<MatrixXd> left_solver(Bs.transpose().partialPivLu().solve(As.transpose()));
  if (left_solver.info() != Eigen::Success)
    throw std::runtime_error("eig_pair: left eigen solver failed");

  std::vector<EigPair> pairs(N);
  for (int i = 0; i < N; ++i)
    pairs[i] = {right_solver.eigenvalues()[i],
                cs.asDiagonal() * right_solver.eigenvectors().col(i)};
  // underdamped pairs by |Im| ascending; real (overdamped) eigenvalues after
  // all pairs, so the leading entries are the low-frequency master candidates
  std::sort(pairs.begin(), pairs.end(), [](const EigPair& a, const EigPair& b) {
    const Real ia = std::abs(a.lambda.imag()), ib = std::abs(b.lambda.imag());
    const bool ra = ia < 1e-12 * (1 + std::abs(a.lambda.real()));
    const bool rb = ib < 1e-12 * (1 + std::abs(b.lambda.real()));
    if (ra != rb) return rb;
    if (std::abs(ia - ib) > 1e-12 * (1 + ia + ib)) return ia < ib;
    if (std::abs(a.lambda.real() - b.lambda.real()) > 1e-14) return a.lambda.real() > b.lambda.real();
    return a.lambda.imag() > b.lambda.imag();  // Im > 0 first within a pair
  });

  const VectorXcd lamL = left_solver.eigenvalues();
  std::vector<bool> used(N, false);

  Spectrum sp;
  sp.eigenvalues.resize(k);
  sp.right.resize(N, k);
  sp.left.resize(N, k);
  const Real anorm = sys.A.norm();
  const Real bnorm = sys.B.norm();

  for (int j = 0; j < k; ++j) {
    Complex lam = pairs[j].lambda;
    VectorXcd v = pairs[j].v;

    // scale: mass-normalized displacement part if available, else unit norm
    if (sys.mech) {
      const int n = sys.mech->n;
      VectorXcd phi = v.head(n);
      Complex s2 = phi.transpose() * (sys.mech->M * phi);
      Complex s = std::sqrt(s2);
      if (std::abs(s) > 1e-14) v /= s;
    } else {
      v /= v.norm();
    }
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    v *= std::polar(1.0, -std::arg(v[imax]));

    // left vector: eigenvector of (A^T, B^T) at conj(lambda)
    int best = -1;
    Real bestd = std::numeric_limits<Real>::max();
    for (int i = 0; i < sys.N; ++i) {
      if (used[i]) continue;
      Real d = std::abs(lamL[i] - std::conj(lam));
      if (d < bestd) {
        bestd = d;
        best = i;
      }
    }
    if (best < 0 || bestd > 1e-6 * (1.0 + std::abs(lam)))
      throw std::runtime_error("eig_pair: defective pencil, left/right matching failed");
    used[best] = true;
    VectorXcd u = rs.asDiagonal() * left_solver.eigenvectors().col(best);

    Complex s = u.adjoint() * (sys.B * v);
    if (std::abs(s) < 1e-14 * u.norm() * v.norm())
      throw std::runtime_error("eig_pair: defective pencil, u*Bv ~ 0");
    u /= std::conj(s);

    // backward error of the eigenpair
    const Real res = (sys.A * v - lam * (sys.B * v)).norm() /
                     ((anorm + std::abs(lam) * bnorm) * v.norm());
    if (res > 1e-8)
      throw std::runtime_error("eig_pair: eigenpair residual too large");

    sp.eigenvalues[j] = lam;
    sp.right.col(j) = v;
    sp.left.col(j) = u;
  }
  return sp;
}

std::vector<std::vector<ResonancePair>> detect_inner_resonances(const VectorXcd& lambda,
                                                                int max_order, Real tol_rel) {
  if (lambda.size() == 0) throw std::invalid_argument("detect_inner_resonances: empty spectrum");
  if (max_order < 2) throw std::invalid_argument("detect_inner_resonances: max_order < 2");
  const int m = static_cast<int>(lambda.size());
  std::vector<std::vector<ResonancePair>> R(m);
  for (int d = 2; d <= max_order; ++d) {
    enumerate_lj(m, d, [&](const std::vector<int>& l, const std::vector<int>& j) {
      Complex s(0, 0);
      for (int i = 0; i < m; ++i)
        s += Real(l[i]) * lambda[i] + Real(j[i]) * std::conj(lambda[i]);
      for (int i = 0; i < m; ++i) {
        const Real gap = std::abs(lambda[i] - s);
        if (gap <= tol_rel * std::abs(lambda[i].imag()))
          R[i].push_back({l, j, gap});
      }
    });
  }
  return R;
}

ExternalResonance detect_external_resonance(const VectorXcd& lambda, Real omega,
                                            Real tol_rel, int denominator_cap) {
  if (omega <= 0) throw std::invalid_argument("detect_external_resonance: Omega must be positive");
  ExternalResonance out;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const Real target = lambda[i].imag() / omega;
    bool found = false;
    for (int q = 1; q <= denominator_cap && !found; ++q) {
      const std::int64_t p = std::llround(target * q);
      Rational cand(p, q);
      if (std::abs(lambda[i].imag() - cand.value() * omega) <= tol_rel * omega) {
        out.r.push_back(cand);
        found = true;
      }
    }
    if (!found)
      throw std::runtime_error("detect_external_resonance: no admissible rational for mode " +
                               std::to_string(i + 1));
  }
  Rational g = out.r[0];
  for (std::size_t i = 1; i < out.r.size(); ++i) g = Rational::gcd(g, out.r[i]);
  out.r_d = g;
  return out;
}

int spectral_quotient(const VectorXcd& full_spectrum, const VectorXcd& master_spectrum) {
  Real min_full = 0, max_master = -std::numeric_limits<Real>::max();
  min_full = std::numeric_limits<Real>::max();
  for (Eigen::Index i = 0; i < full_spectrum.size(); ++i)
    min_full = std::min(min_full, full_spectrum[i].real());
  for (Eigen::Index i = 0; i < master_spectrum.size(); ++i)
    max_master = std::max(max_master, master_spectrum[i].real());
  if (max_master >= 0)
    throw std::runtime_error("spectral_quotient: master spectrum touches the imaginary axis");
  return static_cast<int>(std::floor(min_full / max_master));
}

NonResonanceReport check_nonresonance(const Spectrum& spectrum, const VectorXcd& master,
                                      Real tol, int max_check_order) {
  NonResonanceReport rep;
  rep.sigma = spectral_quotient(spectrum.eigenvalues, master);
  rep.checked_order = std::min(rep.sigma, max_check_order);
  const int m = static_cast<int>(master.size());

  // outer set: spectrum members not in the master set (conjugates included)
  std::vector<int> outer;
  for (Eigen::Index k = 0; k < spectrum.eigenvalues.size(); ++k) {
    bool is_master = false;
    for (int i = 0; i < m; ++i) {
      if (std::abs(spectrum.eigenvalues[k] - master[i]) < 1e-10 ||
          std::abs(spectrum.eigenvalues[k] - std::conj(master[i])) < 1e-10)
        is_master = true;
    }
    if (!is_master) outer.push_back(static_cast<int>(k));
  }

  for (int d = 2; d <= rep.checked_order; ++d) {
    enumerate_lj(m, d, [&](const std::vector<int>& a, const std::vector<int>& b) {
      Real lhs = 0;
      for (int i = 0; i < m; ++i) lhs += (a[i] + b[i]) * master[i].real();
      for (int k : outer) {
        const Real gap = std::abs(lhs - spectrum.eigenvalues[k].real());
        if (gap <= tol) rep.violations.push_back({k, a, b, gap});
      }
    });
  }
  return rep;
}

MasterSubspace select_master(const Spectrum& sp, const std::vector<int>& pair_indices,
                             int max_order, Real omega, Real tol_rel, int denominator_cap) {
  // positions of Im > 0 representatives in the sorted spectrum
  std::vector<int> pos;
  for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i)
    if (sp.eigenvalues[i].imag() > 0) pos.push_back(static_cast<int>(i));

  MasterSubspace ms;
  ms.m = static_cast<int>(pair_indices.size());
  ms.lambda.resize(ms.m);
  ms.V.resize(sp.right.rows(), ms.m);
  ms.U.resize(sp.right.rows(), ms.m);
  for (int i = 0; i < ms.m; ++i) {
    const int pi = pair_indices[i];
    if (pi < 0 || pi >= static_cast<int>(pos.size()))
      throw std::invalid_argument("select_master: pair index out of range");
    const int k = pos[pi];
    ms.lambda[i] = sp.eigenvalues[k];
    if (ms.lambda[i].real() >= 0)
      throw std::runtime_error("select_master: selected mode is not asymptotically stable");
    ms.V.col(i) = sp.right.col(k);
    ms.U.col(i) = sp.left.col(k);
  }
  ms.tol_rel = tol_rel;
  ms.R = detect_inner_resonances(ms.lambda, max_order, tol_rel);
  auto ext = detect_external_resonance(ms.lambda, omega, tol_rel, denominator_cap);
  ms.r = ext.r;
  ms.r_d = ext.r_d;
  ms.omega_ref = omega;
  return ms;
}

}  // namespace ssmkit
