#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "oracles.hpp"
#include "ssmkit/model.hpp"

using namespace ssmkit;

namespace {

MechSystem one_dof(Real m, Real c, Real k, Real f) {
  MechSystem sys;
  sys.n = 1;
  sys.M = MatrixXd::Constant(1, 1, m);
  sys.C = MatrixXd::Constant(1, 1, c);
  sys.K = MatrixXd::Constant(1, 1, k);
  sys.f_nl = PolynomialForce(2, 1);
  sys.f_ext = VectorXd::Constant(1, f);
  return sys;
}

}  // namespace

TEST(Model, AssembleOneDofBlocks) {
  const auto sys = assemble_first_order(one_dof(1, 1, 1, 1));
  MatrixXd A_ref(2, 2), B_ref(2, 2);
  A_ref << -1, 0, 0, 1;
  B_ref << 1, 1, 1, 0;
  EXPECT_LT((sys.A - A_ref).norm(), 1e-14);
  EXPECT_LT((sys.B - B_ref).norm(), 1e-14);
  ASSERT_EQ(sys.F_a.size(), 2);
  EXPECT_EQ(sys.F_a[0], Complex(0.5, 0.0));
  EXPECT_EQ(sys.F_a[1], Complex(0.0, 0.0));
}

TEST(Model, CoupledOscillatorsPencil) {
  const auto mech = build_coupled_oscillators(0.005, 0.01, 0.3, 1.0, 1.0, 0.0);
  const auto sys = assemble_first_order(mech);
  EXPECT_EQ(sys.N, 4);
  // quadratic coupling terms b1 x1 x2 and b2 x1^2, negated in the F block
  ASSERT_EQ(sys.F_nl.terms().size(), 2u);
  VectorXd z(4);
  z << 2.0, 3.0, 0.0, 0.0;
  const VectorXd F = sys.F_nl.eval(z);
  EXPECT_NEAR(F[0], -0.3 * 2.0 * 3.0, 1e-14);
  EXPECT_NEAR(F[1], -1.0 * 4.0, 1e-14);
  EXPECT_NEAR(F[2], 0.0, 1e-14);
  EXPECT_NEAR(F[3], 0.0, 1e-14);
}

TEST(Model, CoupledOscillatorsLinearLimit) {
  const auto mech = build_coupled_oscillators(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
  EXPECT_TRUE(mech.f_nl.empty());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(mech.K, mech.M);
  EXPECT_NEAR(std::sqrt(es.eigenvalues()[0]), 1.0, 1e-12);
  EXPECT_NEAR(std::sqrt(es.eigenvalues()[1]), 2.0, 1e-12);
}

TEST(Model, CoupledOscillatorsZeroForcing) {
  const auto sys = assemble_first_order(build_coupled_oscillators(0.005, 0.01, 0.3, 1.0, 0.0, 0.0));
  EXPECT_NEAR(sys.F_a.norm(), 0.0, 1e-16);
  EXPECT_NEAR(sys.f_ext(0.7).norm(), 0.0, 1e-16);
}

TEST(Model, BeamTargetFrequencies) {
  const auto mech = build_bernoulli_beam(40, 27.0, 60.0, 1.25e-4, 2.5e-5);
  EXPECT_EQ(mech.n, 80);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(mech.K, mech.M);
  const Real om1 = std::sqrt(es.eigenvalues()[0]);
  const Real om2 = std::sqrt(es.eigenvalues()[1]);
  EXPECT_NEAR(om1, 15.60, 15.60 * 1e-3);
  EXPECT_NEAR(om2, 46.58, 46.58 * 1e-3);
}

TEST(Model, BeamLinearWhenCubicSpringOff) {
  const auto mech = build_bernoulli_beam(4, 27.0, 0.0, 1.25e-4, 2.5e-5);
  EXPECT_TRUE(mech.f_nl.empty());
}

TEST(Model, BeamTwoElementsMatchesDenseEigenOracle) {
  const auto mech = build_bernoulli_beam(2, 27.0, 60.0, 1.25e-4, 2.5e-5);
  ASSERT_EQ(mech.n, 4);
  // oracle: unsymmetric dense eigensolve of M^{-1} K on the same matrices
  Eigen::EigenSolver<MatrixXd> es(mech.M.inverse() * mech.K);
  std::vector<Real> oms;
  for (int i = 0; i < 4; ++i) oms.push_back(std::sqrt(std::abs(es.eigenvalues()[i].real())));
  std::sort(oms.begin(), oms.end());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> gs(mech.K, mech.M);
  EXPECT_NEAR(std::sqrt(gs.eigenvalues()[0]), oms[0], 1e-8 * oms[0]);
}

TEST(Model, BeamFrequencyLengthScaling) {
  // Euler-Bernoulli similarity: without the support spring, omega ~ 1/l^2
  const auto a = build_bernoulli_beam_length(10, 0.0, 0.0, 0.0, 0.0, 2.7);
  const auto b = build_bernoulli_beam_length(10, 0.0, 0.0, 0.0, 0.0, 5.4);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ea(a.K, a.M), eb(b.K, b.M);
  const Real ra = std::sqrt(ea.eigenvalues()[0]);
  const Real rb = std::sqrt(eb.eigenvalues()[0]);
  EXPECT_NEAR(ra / rb, 4.0, 4.0 * 1e-10);
}

TEST(Model, BeamForcingExcitesOnlyFirstMode) {
  const auto mech = build_bernoulli_beam(6, 27.0, 60.0, 1.25e-4, 2.5e-5);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(mech.K, mech.M);
  const MatrixXd phi = es.eigenvectors();
  const VectorXd proj = phi.transpose() * mech.f_ext;
  EXPECT_GT(std::abs(proj[0]), 1.0);
  for (int i = 1; i < mech.n; ++i) EXPECT_NEAR(proj[i], 0.0, 1e-8 * std::abs(proj[0]));
}

TEST(Model, EvalForceTrivialCases) {
  PolynomialForce F(2, 2);
  VectorXd z(2);
  z << 3.0, -1.0;
  EXPECT_NEAR(F.eval(z).norm(), 0.0, 1e-16);

  F.add_term(2.0, 0, {{0, 2}});
  EXPECT_NEAR(F.eval(z)[0], 18.0, 1e-14);
}

TEST(Model, ForceTermDeduplication) {
  PolynomialForce F(2, 1);
  F.add_term(1.0, 0, {{0, 1}, {1, 1}});
  F.add_term(0.5, 0, {{1, 1}, {0, 1}});  // same monomial, different order
  ASSERT_EQ(F.terms().size(), 1u);
  EXPECT_NEAR(F.terms()[0].coeff, 1.5, 1e-15);
}

TEST(Model, ForceJacobianMatchesFiniteDifferences) {
  PolynomialForce F(3, 3);
  F.add_term(0.7, 0, {{0, 1}, {1, 2}});
  F.add_term(-1.3, 1, {{2, 3}});
  F.add_term(2.1, 2, {{0, 1}, {1, 1}, {2, 1}});
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd z(3);
    for (int i = 0; i < 3; ++i) z[i] = oracles::urand(-1.5, 1.5);
    const MatrixXd J = F.jacobian(z);
    const MatrixXd Jfd = oracles::fd_jacobian([&](const VectorXd& x) { return F.eval(x); }, z);
    EXPECT_LT((J - Jfd).norm() / std::max(1.0, J.norm()), 1e-7);
  }
}

TEST(Model, ForcingIsRealForAllPhases) {
  const auto sys = assemble_first_order(build_coupled_oscillators(0.005, 0.01, 0.3, 1.0, 1.0, 0.5));
  for (Real phi = 0.0; phi < 6.4; phi += 0.37) {
    const VectorXcd full = sys.F_a * std::polar(1.0, phi) + sys.F_a.conjugate() * std::polar(1.0, -phi);
    EXPECT_NEAR(full.imag().cwiseAbs().maxCoeff(), 0.0, 1e-15);
    EXPECT_NEAR((sys.f_ext(phi).head(2) - std::cos(phi) * VectorXd{{1.0, 0.5}}).norm(), 0.0, 1e-14);
  }
}

TEST(Model, FirstOrderTrajectoriesSatisfySecondOrderEquation) {
  const auto mech = build_coupled_oscillators(0.005, 0.01, 0.3, 1.0, 1.0, 0.0);
  const auto sys = assemble_first_order(mech);
  const Real om = 0.9, eps = 0.01;
  VectorXd z(4);
  z << 0.1, -0.05, 0.02, 0.03;
  for (Real t : {0.0, 0.4, 1.7}) {
    const VectorXd zdot = sys.rhs(z, om * t, eps);
    // z = (x, xd); zdot = (xd, xdd)
    EXPECT_LT((zdot.head(2) - z.tail(2)).norm(), 1e-12);
    const VectorXd res =
        second_order_residual(mech, z.head(2), z.tail(2), zdot.tail(2), t, om, eps);
    EXPECT_LT(res.norm(), 1e-10);
    z = oracles::rk4([&](Real tt, const VectorXd& x) { return sys.rhs(x, om * tt, eps); }, t, z,
                     0.1, 20);
  }
}

TEST(Model, ValidationErrors) {
  MechSystem bad = build_coupled_oscillators(0.005, 0.01, 0.3, 1.0, 1.0, 0.0);
  bad.f_ext = VectorXd::Zero(3);
  EXPECT_THROW(assemble_first_order(bad), std::invalid_argument);
  EXPECT_THROW(build_coupled_oscillators(-0.1, 0.0, 0.0, 0.0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(build_bernoulli_beam(1, 27.0, 60.0, 0.0, 0.0), std::invalid_argument);

  PolynomialForce lin(2, 1);
  lin.add_term(1.0, 0, {{0, 1}});  // linear term: not a valid nonlinearity
  EXPECT_THROW(lin.validate(), std::invalid_argument);
}
