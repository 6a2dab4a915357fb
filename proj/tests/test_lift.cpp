#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ssmkit/continuation.hpp"
#include "ssmkit/lift.hpp"
#include "ssmkit/model.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/ssm.hpp"

using namespace ssmkit;

namespace {

ReducedModel example1_rom(Real b1 = 0.3, Real b2 = 1.0, int order = 3) {
  const auto sys = assemble_first_order(build_coupled_oscillators(0.005, 0.01, b1, b2, 2.0, 0.0));
  const auto sp = eig_pair(sys, 4);
  const auto ms = select_master(sp, {0, 1}, order, 1.0);
  return expand_autonomous(sys, ms, order);
}

POSolution example1_cycle(const ReducedModel& rm, Real omega = 0.995) {
  const ParamVectorField vf = rom_vector_field(rm);
  // land on the attracting cycle by integrating from a generic point
  auto rhs = [&](Real, const VectorXd& y) { return vf.f(0, y, omega, 0.01); };
  VectorXd x = VectorXd::Constant(4, 0.1);
  x = oracles::rk4(rhs, 0, x, 12000.0, 300000);
  // find the period via the recurrence of the first coordinate maximum
  const Real dt = 0.05;
  VectorXd xp = x;
  std::vector<Real> crossings;
  Real t = 0;
  const Real x0ref = x[1];
  while (crossings.size() < 3 && t < 2000) {
    VectorXd xn = oracles::rk4(rhs, t, xp, dt, 4);
    if (xp[1] < x0ref && xn[1] >= x0ref)
      crossings.push_back(t + dt * (x0ref - xp[1]) / (xn[1] - xp[1]));
    xp = xn;
    t += dt;
  }
  const Real T_guess = crossings.size() >= 2 ? crossings[1] - crossings[0] : 300.0;
  const auto mesh = CollocationMesh::make(10, 5);
  MatrixXd guess(4, mesh.n_points());
  const Real w = 1.0 / mesh.n_int;
  for (int i = 0; i < mesh.n_int; ++i)
    for (int b = 0; b < mesh.n_base; ++b) {
      const Real tau = (i + mesh.base_nodes[b]) * w;
      guess.col(i * (mesh.n_base - 1) + b) =
          oracles::rk4(rhs, 0, x, tau * T_guess, std::max(1, int(tau * 4000)));
    }
  return collocate_po(rom_vector_field(rm), guess, T_guess, omega, 0.01, mesh);
}

}  // namespace

TEST(Lift, PointLiftBasics) {
  const auto rm = example1_rom();
  // p = 0, eps = 0 -> origin
  EXPECT_NEAR(lift_point(rm, VectorXcd::Zero(2), 0.3, 1.0, 0.0).norm(), 0.0, 1e-16);
  // p = 0, eps > 0 -> the non-autonomous ellipse 2 eps Re(x0 e^{i phi})
  const auto na = rm.nonautonomous(1.02);
  for (Real phi : {0.0, 0.7, 2.9}) {
    const VectorXd z = lift_point(rm, VectorXcd::Zero(2), phi, 1.02, 0.01);
    const VectorXd expect = 2 * 0.01 * (na.x0 * std::polar(1.0, phi)).real();
    EXPECT_LT((z - expect).norm(), 1e-14);
  }
}

TEST(Lift, LinearModelMatchesLinearResponse) {
  // with the nonlinearity off, the lifted resonant steady state reproduces the
  // closed-form linear periodic response
  const auto rm = example1_rom(0.0, 0.0);
  const Real om = 1.03, eps = 0.01;
  const VectorXd q_eq = solve_equilibrium(rm, om, eps);
  const int n_pt = 256;
  const MatrixXd orbit = eq_to_po(rm, q_eq, om, eps, n_pt);
  const MatrixXd ref = linear_response(rm.sys, om, eps, n_pt);
  // compare amplitudes of both displacement components
  for (int d = 0; d < 2; ++d)
    EXPECT_NEAR(orbit.row(d).cwiseAbs().maxCoeff(), ref.row(d).cwiseAbs().maxCoeff(),
                1e-3 * std::max(1e-12, ref.row(d).cwiseAbs().maxCoeff()));
}

TEST(Lift, TrivialEquilibriumLiftsToZeroOrbit) {
  const auto rm = example1_rom();
  const MatrixXd orbit = eq_to_po(rm, VectorXd::Zero(4), 0.9, 0.0, 64);
  EXPECT_NEAR(orbit.norm(), 0.0, 1e-14);
}

TEST(Lift, SecondModeOscillatesAtTwiceOmega) {
  const auto rm = example1_rom();
  const Real om = 0.97, eps = 0.01;
  const VectorXd q_eq = solve_equilibrium(rm, om, eps);
  const int n_pt = 512;
  const MatrixXd orbit = eq_to_po(rm, q_eq, om, eps, n_pt);
  const Real T = 2 * kPi / om;
  // Fourier coefficients of x2(t) at Omega and 2 Omega
  Complex c1(0, 0), c2(0, 0);
  for (int k = 0; k < n_pt; ++k) {
    const Real t = T * k / n_pt;
    c1 += orbit(1, k) * std::polar(1.0, -om * t);
    c2 += orbit(1, k) * std::polar(1.0, -2 * om * t);
  }
  EXPECT_GT(std::abs(c2), 10 * std::abs(c1));
  // period check: the lifted orbit closes over T = 2 pi / Omega (r_d = 1)
  const MatrixXd wrap = eq_to_po(rm, q_eq, om, eps, 2);  // samples at 0 and T/2
  (void)wrap;
  VectorXcd q(2);
  const VectorXcd qs = q_from_cartesian(q_eq);
  for (int i = 0; i < 2; ++i)
    q[i] = qs[i] * std::polar(1.0, rm.master.r[i].value() * om * T);
  EXPECT_LT((lift_point(rm, q, om * T, om, eps) - orbit.col(0)).norm(), 1e-10);
}

TEST(Lift, DegenerateCycleCollapsesToPeriodicOrbit) {
  const auto rm = example1_rom();
  const Real om = 0.97, eps = 0.01;
  const VectorXd q_eq = solve_equilibrium(rm, om, eps);
  POSolution po;
  po.mesh = CollocationMesh::make(10, 5);
  po.dim = 4;
  po.states = q_eq.replicate(1, po.mesh.n_points());
  po.period = 300.0;
  po.omega = om;
  po.eps = eps;
  const PhysicalTorus tor = po_to_torus2(rm, po, 64);
  ASSERT_EQ(tor.trajectories.size(), 1u);
  const MatrixXd orbit = eq_to_po(rm, q_eq, om, eps, static_cast<int>(tor.trajectories[0].cols()));
  EXPECT_LT((tor.trajectories[0] - orbit).norm(), 1e-10 * (1 + orbit.norm()));
}

TEST(Lift, ClosurePropertyOfShiftedTrajectories) {
  const auto rm = example1_rom();
  const POSolution po = example1_cycle(rm);
  const Real om = po.omega, Ts = po.period;
  const Real T = 2 * kPi / om;
  const ParamVectorField vf = rom_vector_field(rm);
  // R(p_sigma(T)) must land back on the cycle curve Gamma: integrating the
  // slow system for T from w(sigma) gives w(sigma + T), which lies on Gamma
  auto rhs = [&](Real, const VectorXd& y) { return vf.f(0, y, om, po.eps); };
  for (Real frac : {0.0, 0.21, 0.52, 0.83}) {
    const VectorXd start = po.state_at(frac);
    const VectorXd end = oracles::rk4(rhs, 0, start, T, 4000);
    const VectorXd expect = po.state_at(frac + T / Ts);
    EXPECT_LT((end - expect).norm(), 1e-6 * (1 + expect.norm()));
  }
}

TEST(Lift, ReducedFlowConsistencyOfLiftedTrajectories) {
  const auto rm = example1_rom();
  const POSolution po = example1_cycle(rm);
  const PhysicalTorus tor = po_to_torus2(rm, po, 128);
  // finite-difference d/dt of p_sigma(t) against the rotating-frame field
  const Real dt = tor.times[1] - tor.times[0];
  const int traj = 3;
  const Real sigma = po.base_taus()[traj] * po.period;
  const ParamVectorField vf = rom_vector_field(rm);
  for (int k = 1; k + 1 < 40; ++k) {
    const Real t = tor.times[k];
    // reconstruct q(t) of this trajectory from the stored cycle
    const VectorXd w = po.state_at((t + sigma) / po.period);
    VectorXcd q(2), qdot_expect(2);
    const VectorXd wdot = vf.f(0, w, po.omega, po.eps);
    for (int i = 0; i < 2; ++i) {
      const Real ri = rm.master.r[i].value();
      const Complex rot = std::polar(1.0, ri * po.omega * t);
      q[i] = Complex(w[2 * i], w[2 * i + 1]) * rot;
      qdot_expect[i] = (Complex(wdot[2 * i], wdot[2 * i + 1]) +
                        Complex(0, ri * po.omega) * Complex(w[2 * i], w[2 * i + 1])) *
                       rot;
    }
    // central difference on the same construction
    const VectorXd wm = po.state_at((t - dt + sigma) / po.period);
    const VectorXd wp = po.state_at((t + dt + sigma) / po.period);
    for (int i = 0; i < 2; ++i) {
      const Real ri = rm.master.r[i].value();
      const Complex qm = Complex(wm[2 * i], wm[2 * i + 1]) * std::polar(1.0, ri * po.omega * (t - dt));
      const Complex qp = Complex(wp[2 * i], wp[2 * i + 1]) * std::polar(1.0, ri * po.omega * (t + dt));
      const Complex fd = (qp - qm) / (2 * dt);
      EXPECT_LT(std::abs(fd - qdot_expect[i]), 5e-4 * (1.0 + std::abs(qdot_expect[i])));
    }
  }
}

TEST(Lift, ShiftCovarianceOfTorusPointSet) {
  const auto rm = example1_rom();
  const POSolution po = example1_cycle(rm);
  PhysicalTorus a = po_to_torus2(rm, po, 32);
  // globally shift all sigmas: roll the cycle representation by half a period
  POSolution shifted = po;
  const int np = po.mesh.n_points();
  const int half = (np - 1) / 2;
  for (int k = 0; k < np; ++k)
    shifted.states.col(k) = po.state_at(po.base_taus()[k] + Real(half) / (np - 1));
  PhysicalTorus b = po_to_torus2(rm, shifted, 32);
  // same point set up to reordering: compare symmetric nearest-neighbour gaps
  auto nn_gap = [](const PhysicalTorus& t1, const PhysicalTorus& t2) {
    Real worst = 0;
    for (std::size_t i = 0; i < t1.trajectories.size(); i += 5)
      for (int k = 0; k < t1.trajectories[i].cols(); k += 7) {
        Real best = 1e18;
        const VectorXd pt = t1.trajectories[i].col(k);
        for (const auto& tr : t2.trajectories)
          for (int c = 0; c < tr.cols(); ++c) best = std::min(best, (pt - tr.col(c)).norm());
        worst = std::max(worst, best);
      }
    return worst;
  };
  const Real scale = amplitude_inf(a, 0);
  EXPECT_LT(nn_gap(a, b), 0.02 * scale);
}

TEST(Lift, ClassifyRotationCases) {
  // omega_s = 0.1, Omega = 1, r_d = 1: rho = 0.1 -> periodic with period 10 T
  const RotationClass rc = classify_rotation(2 * kPi / 0.1, 1.0, Rational(1), 100);
  EXPECT_TRUE(rc.periodic);
  EXPECT_EQ(rc.m_p, 10);
  EXPECT_NEAR(rc.period, 10 * 2 * kPi, 1e-9);

  // golden-ratio conjugate: quasi-periodic at cap 100
  const Real golden = 0.5 * (std::sqrt(5.0) - 1.0);
  const RotationClass qc = classify_rotation(2 * kPi / golden, 1.0, Rational(1), 100);
  EXPECT_FALSE(qc.periodic);

  // cap sensitivity at rho = 0.333333
  const Real Ts = 2 * kPi / 0.333333;
  EXPECT_TRUE(classify_rotation(Ts, 1.0, Rational(1), 3).periodic);
  EXPECT_EQ(classify_rotation(Ts, 1.0, Rational(1), 3).m_p, 3);
  EXPECT_FALSE(classify_rotation(Ts, 1.0, Rational(1), 2).periodic);
}

TEST(Lift, AmplitudeInf) {
  std::vector<MatrixXd> trajs;
  trajs.push_back(MatrixXd::Constant(2, 10, -0.7));
  EXPECT_NEAR(amplitude_inf(trajs, 0), 0.7, 1e-15);

  MatrixXd s(1, 4096);
  for (int k = 0; k < 4096; ++k) s(0, k) = std::sin(2 * kPi * k / 4096.0);
  trajs = {s};
  EXPECT_NEAR(amplitude_inf(trajs, 0), 1.0, 1e-5);

  MatrixXd q(1, 200000);
  for (int k = 0; k < 200000; ++k) {
    const Real t = 400.0 * k / 200000.0;
    q(0, k) = std::sin(t) + 0.5 * std::sin(std::sqrt(2.0) * t);
  }
  trajs = {q};
  EXPECT_NEAR(amplitude_inf(trajs, 0), 1.5, 1e-3);
}

TEST(Lift, PoincareCircleSyntheticRecovery) {
  PhysicalTorus tor;
  tor.dim = 2;
  tor.omega = 1.0;
  tor.omega_s = 0.1;
  tor.eps = 0.0;
  const int ntraj = 11;
  const Real Ts = 2 * kPi / tor.omega_s;
  tor.times = VectorXd::LinSpaced(3, 0.0, 2 * 2 * kPi);  // 0, T_exc, 2 T_exc
  for (int i = 0; i < ntraj; ++i) {
    const Real sigma = Ts * i / (ntraj - 1);
    MatrixXd tr(2, 3);
    for (int k = 0; k < 3; ++k) {
      const Real phase = 2 * kPi * (sigma + tor.times[k]) / Ts;
      tr.col(k) = Vector2d(std::cos(phase), std::sin(phase));
    }
    tor.trajectories.push_back(tr);
  }
  const MatrixXd circle = poincare_circle(tor);
  // all recovered points on the unit circle, ordered by phase; a single
  // wraparound of the geometric angle is allowed
  int decreases = 0;
  Real prev = -10.0;
  for (int c = 0; c < circle.cols(); ++c) {
    EXPECT_NEAR(circle.col(c).norm(), 1.0, 1e-12);
    const Real ph = std::atan2(circle(1, c), circle(0, c));
    const Real wrapped = ph < 0 ? ph + 2 * kPi : ph;
    if (wrapped < prev - 1e-9) ++decreases;
    prev = wrapped;
  }
  EXPECT_LE(decreases, 1);
}

TEST(Lift, PeriodicSplineReproducesTrig) {
  const int n = 64;
  MatrixXd vals(2, n);
  for (int k = 0; k < n; ++k) {
    const Real t = 2 * kPi * k / n;
    vals.col(k) = Vector2d(std::sin(t), std::cos(2 * t));
  }
  const PeriodicSpline sp(vals, 2 * kPi);
  for (Real t : {0.1, 1.7, 4.4, 6.2, 7.0, -0.3}) {
    const Real tm = t - 2 * kPi * std::floor(t / (2 * kPi));
    EXPECT_NEAR(sp.eval(t)[0], std::sin(tm), 1e-6);
    EXPECT_NEAR(sp.eval(t)[1], std::cos(2 * tm), 1e-5);
  }
}
