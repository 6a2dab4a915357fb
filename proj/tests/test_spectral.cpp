#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "ssmkit/model.hpp"
#include "ssmkit/spectral.hpp"

using namespace ssmkit;

namespace {

FirstOrderSystem one_dof_sys(Real c) {
  MechSystem m;
  m.n = 1;
  m.M = MatrixXd::Identity(1, 1);
  m.C = MatrixXd::Constant(1, 1, c);
  m.K = MatrixXd::Identity(1, 1);
  m.f_nl = PolynomialForce(2, 1);
  m.f_ext = VectorXd::Ones(1);
  return assemble_first_order(m);
}

bool contains(const std::vector<ResonancePair>& R, std::vector<int> l, std::vector<int> j) {
  return std::any_of(R.begin(), R.end(),
                     [&](const ResonancePair& p) { return p.l == l && p.j == j; });
}

}  // namespace

TEST(Spectral, OneDofEigenvalues) {
  const auto sp = eig_pair(one_dof_sys(0.01), 2);
  const Real re = -0.005, im = std::sqrt(1.0 - 0.005 * 0.005);
  EXPECT_NEAR(sp.eigenvalues[0].real(), re, 1e-12);
  EXPECT_NEAR(sp.eigenvalues[0].imag(), im, 1e-12);
  EXPECT_NEAR(sp.eigenvalues[1].real(), re, 1e-12);
  EXPECT_NEAR(sp.eigenvalues[1].imag(), -im, 1e-12);
}

TEST(Spectral, CoupledOscillatorEigenvalues) {
  const auto sys = assemble_first_order(build_coupled_oscillators(0.005, 0.01, 0.3, 1, 1, 0));
  const auto sp = eig_pair(sys, 4);
  EXPECT_NEAR(sp.eigenvalues[0].imag(), std::sqrt(1 - 0.25 * 0.005 * 0.005), 1e-12);
  EXPECT_NEAR(sp.eigenvalues[0].real(), -0.0025, 1e-12);
  EXPECT_NEAR(sp.eigenvalues[2].imag(), std::sqrt(4 - 0.25 * 0.01 * 0.01), 1e-12);
  EXPECT_NEAR(sp.eigenvalues[2].real(), -0.005, 1e-12);
}

TEST(Spectral, BeamMasterFrequencies) {
  const auto sys = assemble_first_order(build_bernoulli_beam(40, 27.0, 60.0, 1.25e-4, 2.5e-5));
  const auto sp = eig_pair(sys, 4);
  EXPECT_NEAR(sp.eigenvalues[0].imag(), 15.60, 0.02);
  EXPECT_NEAR(sp.eigenvalues[2].imag(), 46.58, 0.05);
}

TEST(Spectral, Binormalization) {
  const auto sys = assemble_first_order(build_coupled_oscillators(0.005, 0.01, 0.3, 1, 1, 0));
  const auto sp = eig_pair(sys, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const Complex uBv = (sp.left.col(i).adjoint() * (sys.B * sp.right.col(j)))(0);
      EXPECT_NEAR(std::abs(uBv - (i == j ? Complex(1, 0) : Complex(0, 0))), 0.0, 1e-8);
    }
  // eigenpair residuals
  for (int i = 0; i < 4; ++i) {
    const VectorXcd r = sys.A.cast<Complex>() * sp.right.col(i) -
                        sp.eigenvalues[i] * (sys.B.cast<Complex>() * sp.right.col(i));
    EXPECT_LT(r.norm(), 1e-8 * sys.A.norm());
  }
}

TEST(Spectral, InnerResonanceOneTwo) {
  VectorXcd lam(2);
  lam << Complex(0, 1), Complex(0, 2);
  const auto R = detect_inner_resonances(lam, 2, 0.05);
  ASSERT_EQ(R[0].size(), 1u);
  EXPECT_TRUE(contains(R[0], {0, 1}, {1, 0}));
  ASSERT_EQ(R[1].size(), 1u);
  EXPECT_TRUE(contains(R[1], {2, 0}, {0, 0}));
}

TEST(Spectral, InnerResonanceOneThree) {
  VectorXcd lam(2);
  lam << Complex(0, 1), Complex(0, 3);
  const auto R = detect_inner_resonances(lam, 3, 0.05);
  EXPECT_TRUE(contains(R[1], {3, 0}, {0, 0}));
  EXPECT_TRUE(contains(R[0], {2, 0}, {1, 0}));
  EXPECT_TRUE(contains(R[0], {0, 1}, {2, 0}));
}

TEST(Spectral, InnerResonanceSingleMode) {
  VectorXcd lam(1);
  lam << Complex(-0.01, 1);
  const auto R = detect_inner_resonances(lam, 3, 0.05);
  ASSERT_EQ(R[0].size(), 1u);
  EXPECT_TRUE(contains(R[0], {2}, {1}));  // the q|q|^2 monomial
}

TEST(Spectral, InnerResonanceMatchesEnumerationOracle) {
  std::vector<Complex> lam = {Complex(-0.003, 1.001), Complex(-0.008, 2.03)};
  const auto oracle = oracles::enumerate_resonances(lam, 4, 0.05);
  VectorXcd lv(2);
  lv << lam[0], lam[1];
  const auto R = detect_inner_resonances(lv, 4, 0.05);
  for (int i = 0; i < 2; ++i) {
    ASSERT_EQ(R[i].size(), oracle[i].size());
    for (const auto& o : oracle[i]) EXPECT_TRUE(contains(R[i], o.l, o.j));
  }
}

TEST(Spectral, InnerResonancePermutationInvariance) {
  VectorXcd lam(2), lam_swapped(2);
  lam << Complex(-0.0025, 1.0), Complex(-0.005, 2.0);
  lam_swapped << lam[1], lam[0];
  const auto R = detect_inner_resonances(lam, 3, 0.05);
  const auto Rs = detect_inner_resonances(lam_swapped, 3, 0.05);
  ASSERT_EQ(R[0].size(), Rs[1].size());
  ASSERT_EQ(R[1].size(), Rs[0].size());
  for (const auto& p : R[0]) {
    // swap the mode axes of (l, j)
    std::vector<int> l = {p.l[1], p.l[0]}, j = {p.j[1], p.j[0]};
    EXPECT_TRUE(contains(Rs[1], l, j));
  }
}

TEST(Spectral, ExternalResonanceOneTwo) {
  VectorXcd lam(2);
  lam << Complex(-0.0025, 1.0), Complex(-0.005, 2.0);
  const auto ext = detect_external_resonance(lam, 1.0, 0.05);
  EXPECT_EQ(ext.r[0], Rational(1));
  EXPECT_EQ(ext.r[1], Rational(2));
  EXPECT_EQ(ext.r_d, Rational(1));
}

TEST(Spectral, RationalGcd) {
  const Rational g = Rational::gcd(Rational(1, 2), Rational(3, 4));
  EXPECT_EQ(g, Rational(1, 4));
  // gcd divides each entry with integer quotient, and no multiple of it does better
  for (const auto& r : {Rational(1, 2), Rational(3, 4)}) EXPECT_TRUE(g.divides(r));
  for (int num = 1; num <= 8; ++num)
    for (int den = 1; den <= 8; ++den) {
      const Rational cand(num, den);
      if (cand.value() <= g.value()) continue;
      EXPECT_FALSE(cand.divides(Rational(1, 2)) && cand.divides(Rational(3, 4)));
    }
}

TEST(Spectral, ExternalResonanceOneThree) {
  VectorXcd lam(2);
  lam << Complex(-0.001, 1.0002), Complex(-0.002, 2.997);
  const auto ext = detect_external_resonance(lam, 1.0001, 0.05, 10);
  EXPECT_EQ(ext.r[0], Rational(1));
  EXPECT_EQ(ext.r[1], Rational(3));
  // oracle: brute force over all denominators <= cap, admissibility check
  for (int q = 1; q <= 10; ++q) {
    const double p = std::round(3.0 * q);
    if (std::abs(2.997 - p / q * 1.0001) <= 0.05 * 1.0001) {
      EXPECT_LE(ext.r[1].den(), q);
      break;
    }
  }
}

TEST(Spectral, ExternalResonanceFailure) {
  VectorXcd lam(1);
  lam << Complex(-0.001, 0.03);  // 0.03/Omega inadmissible for Omega = 1, cap 10
  EXPECT_THROW(detect_external_resonance(lam, 1.0, 0.001, 10), std::runtime_error);
}

TEST(Spectral, SpectralQuotientBasic) {
  VectorXcd full(2), master(1);
  full << Complex(-1, 1), Complex(-10, 5);
  master << Complex(-1, 1);
  EXPECT_EQ(spectral_quotient(full, master), 10);
}

TEST(Spectral, NonResonanceWholeSpectrumMaster) {
  const auto sys = assemble_first_order(build_coupled_oscillators(0.005, 0.01, 0.3, 1, 1, 0));
  const auto sp = eig_pair(sys, 4);
  VectorXcd master(2);
  master << sp.eigenvalues[0], sp.eigenvalues[2];
  const auto rep = check_nonresonance(sp, master);
  EXPECT_TRUE(rep.satisfied());  // empty outer set
}

TEST(Spectral, NonResonanceMatchesBruteForceOnBeam) {
  const auto sys = assemble_first_order(build_bernoulli_beam(4, 27.0, 60.0, 1.25e-4, 2.5e-5));
  const auto sp = eig_pair(sys, sys.N);
  VectorXcd master(2);
  master << sp.eigenvalues[0], sp.eigenvalues[2];
  const auto rep = check_nonresonance(sp, master, 1e-8, 8);
  const int sigma = spectral_quotient(sp.eigenvalues, master);
  EXPECT_EQ(rep.sigma, sigma);
  EXPECT_GT(sigma, 1000);  // FE damping makes the quotient huge; the scan is capped

  // brute-force scan of all (a, b) up to the capped order
  int violations = 0;
  for (int d = 2; d <= rep.checked_order; ++d)
    for (int a1 = 0; a1 <= d; ++a1)
      for (int a2 = 0; a2 <= d - a1; ++a2)
        for (int b1 = 0; b1 <= d - a1 - a2; ++b1) {
          const int b2 = d - a1 - a2 - b1;
          const Real lhs = (a1 + b1) * master[0].real() + (a2 + b2) * master[1].real();
          for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k) {
            bool in_master = false;
            for (int i = 0; i < 2; ++i)
              if (std::abs(sp.eigenvalues[k] - master[i]) < 1e-10 ||
                  std::abs(sp.eigenvalues[k] - std::conj(master[i])) < 1e-10)
                in_master = true;
            if (!in_master && std::abs(lhs - sp.eigenvalues[k].real()) <= 1e-8) ++violations;
          }
        }
  EXPECT_EQ(static_cast<int>(rep.violations.size()), violations);
}

TEST(Spectral, SelectMasterBeamOneThree) {
  const auto sys = assemble_first_order(build_bernoulli_beam(40, 27.0, 60.0, 1.25e-4, 2.5e-5));
  const auto sp = eig_pair(sys, 4);
  const auto ms = select_master(sp, {0, 1}, 3, 15.60);
  EXPECT_EQ(ms.m, 2);
  EXPECT_EQ(ms.r[0], Rational(1));
  EXPECT_EQ(ms.r[1], Rational(3));
  // the 1:3 relation shows up in the resonance sets at max_order 3
  EXPECT_TRUE(contains(ms.R[1], {3, 0}, {0, 0}));
  EXPECT_TRUE(contains(ms.R[0], {0, 1}, {2, 0}));
}
