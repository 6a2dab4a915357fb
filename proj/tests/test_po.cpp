#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ssmkit/periodic_orbit.hpp"

using namespace ssmkit;

namespace {

// q' = (mu + i om) q - q |q|^2 in real coordinates; limit cycle radius sqrt(mu)
ParamVectorField hopf_normal_form(Real om, Real cubic_sign = -1.0) {
  ParamVectorField vf;
  vf.dim = 2;
  vf.f = [om, cubic_sign](Real, const VectorXd& x, Real mu, Real) {
    const Real r2 = x.squaredNorm();
    VectorXd f(2);
    f[0] = mu * x[0] - om * x[1] + cubic_sign * x[0] * r2;
    f[1] = om * x[0] + mu * x[1] + cubic_sign * x[1] * r2;
    return f;
  };
  vf.dfdx = [om, cubic_sign](Real, const VectorXd& x, Real mu, Real) {
    const Real r2 = x.squaredNorm();
    MatrixXd J(2, 2);
    J(0, 0) = mu + cubic_sign * (r2 + 2 * x[0] * x[0]);
    J(0, 1) = -om + cubic_sign * 2 * x[0] * x[1];
    J(1, 0) = om + cubic_sign * 2 * x[0] * x[1];
    J(1, 1) = mu + cubic_sign * (r2 + 2 * x[1] * x[1]);
    return J;
  };
  vf.dfdom = [](Real, const VectorXd& x, Real, Real) {
    VectorXd d(2);
    d[0] = x[0];
    d[1] = x[1];
    return d;  // d/dmu
  };
  vf.dfdeps = [](Real, const VectorXd&, Real, Real) { return VectorXd::Zero(2); };
  return vf;
}

MatrixXd circle_guess(const CollocationMesh& mesh, Real radius) {
  MatrixXd g(2, mesh.n_points());
  const Real w = 1.0 / mesh.n_int;
  for (int i = 0; i < mesh.n_int; ++i)
    for (int b = 0; b < mesh.n_base; ++b) {
      const Real tau = (i + mesh.base_nodes[b]) * w;
      g.col(i * (mesh.n_base - 1) + b) =
          radius * Vector2d(std::cos(2 * kPi * tau), std::sin(2 * kPi * tau));
    }
  return g;
}

POSolution analytic_po(const CollocationMesh& mesh,
                       const std::function<VectorXd(Real)>& f, int dim, Real period) {
  POSolution po;
  po.mesh = mesh;
  po.dim = dim;
  po.period = period;
  po.states.resize(dim, mesh.n_points());
  const Real w = 1.0 / mesh.n_int;
  for (int i = 0; i < mesh.n_int; ++i)
    for (int b = 0; b < mesh.n_base; ++b)
      po.states.col(i * (mesh.n_base - 1) + b) = f((i + mesh.base_nodes[b]) * w);
  return po;
}

}  // namespace

TEST(Po, MeshDifferentiationExactForPolynomials) {
  const auto mesh = CollocationMesh::make(10, 5);
  // degree-4 polynomial is represented exactly
  auto poly = [](Real s) { return 1.0 + s * (2.0 + s * (-1.0 + s * (0.5 + 0.25 * s))); };
  auto dpoly = [](Real s) { return 2.0 + s * (-2.0 + s * (1.5 + s)); };
  for (int c = 0; c < mesh.n_col(); ++c) {
    Real v = 0, d = 0;
    for (int b = 0; b < mesh.n_base; ++b) {
      v += mesh.L(c, b) * poly(mesh.base_nodes[b]);
      d += mesh.D(c, b) * poly(mesh.base_nodes[b]);
    }
    EXPECT_NEAR(v, poly(mesh.gauss_nodes[c]), 1e-13);
    EXPECT_NEAR(d, dpoly(mesh.gauss_nodes[c]), 1e-12);
  }
  // Gauss weights integrate degree-7 polynomials exactly
  Real q = 0;
  for (int c = 0; c < mesh.n_col(); ++c) {
    const Real s = mesh.gauss_nodes[c];
    q += mesh.gauss_weights[c] * s * s * s * s * s * s * s;
  }
  EXPECT_NEAR(q, 1.0 / 8.0, 1e-14);
}

TEST(Po, HarmonicOscillatorCircle) {
  ParamVectorField vf;
  vf.dim = 2;
  vf.f = [](Real, const VectorXd& x, Real, Real) {
    VectorXd f(2);
    f[0] = -x[1];
    f[1] = x[0];
    return f;
  };
  vf.dfdx = [](Real, const VectorXd&, Real, Real) {
    MatrixXd J(2, 2);
    J << 0, -1, 1, 0;
    return J;
  };
  const auto mesh = CollocationMesh::make(10, 5);
  const POSolution po = collocate_po(vf, circle_guess(mesh, 1.1), 6.0, 0.0, 0.0, mesh);
  EXPECT_NEAR(po.period, 2 * kPi, 1e-4);  // discretization-level accuracy
  // some circle: all base points at a common radius
  const Real r0 = po.states.col(0).norm();
  for (int k = 0; k < po.states.cols(); ++k) EXPECT_NEAR(po.states.col(k).norm(), r0, 1e-6);
}

TEST(Po, HopfCycleRadiusSqrtMu) {
  const auto vf = hopf_normal_form(1.0);
  const auto mesh = CollocationMesh::make(10, 5);
  const Real mu = 0.04;
  const POSolution po = collocate_po(vf, circle_guess(mesh, 0.3), 2 * kPi, mu, 0.0, mesh);
  EXPECT_NEAR(po.states.col(0).norm(), std::sqrt(mu), 0.01 * std::sqrt(mu));
  EXPECT_NEAR(po.period, 2 * kPi, 1e-6);
}

TEST(Po, VanDerPolPeriodMatchesIntegrationOracle) {
  ParamVectorField vf;
  vf.dim = 2;
  vf.f = [](Real, const VectorXd& x, Real, Real) {
    VectorXd f(2);
    f[0] = x[1];
    f[1] = (1.0 - x[0] * x[0]) * x[1] - x[0];
    return f;
  };
  vf.dfdx = [](Real, const VectorXd& x, Real, Real) {
    MatrixXd J(2, 2);
    J << 0, 1, -2 * x[0] * x[1] - 1, 1 - x[0] * x[0];
    return J;
  };

  // oracle: integrate to the attractor, measure the period from upward
  // zero crossings of x with linear interpolation
  auto rhs = [&](Real, const VectorXd& x) { return vf.f(0, x, 0, 0); };
  VectorXd x = oracles::rk4(rhs, 0.0, VectorXd::Constant(2, 1.0), 100.0, 200000);
  const Real dt = 1e-4;
  Real t = 0.0;
  std::vector<Real> crossings;
  VectorXd xp = x;
  while (crossings.size() < 4 && t < 40.0) {
    VectorXd xn = oracles::rk4(rhs, t, xp, dt, 1);
    if (xp[0] < 0 && xn[0] >= 0) crossings.push_back(t + dt * xp[0] / (xp[0] - xn[0]));
    xp = xn;
    t += dt;
  }
  ASSERT_GE(crossings.size(), 3u);
  const Real T_oracle = crossings[2] - crossings[1];
  EXPECT_NEAR(T_oracle, 6.6633, 5e-3);  // sanity on the oracle itself

  const auto mesh = CollocationMesh::make(25, 5);
  MatrixXd guess(2, mesh.n_points());
  const Real w = 1.0 / mesh.n_int;
  VectorXd xc = xp;
  for (int i = 0; i < mesh.n_int; ++i)
    for (int b = 0; b < mesh.n_base; ++b) {
      const Real tau = (i + mesh.base_nodes[b]) * w;
      guess.col(i * (mesh.n_base - 1) + b) =
          oracles::rk4(rhs, 0.0, xp, tau * T_oracle, std::max(1, int(tau * 2000)));
    }
  const POSolution po = collocate_po(vf, guess, T_oracle, 0.0, 0.0, mesh);
  EXPECT_NEAR(po.period, T_oracle, 1e-4 * T_oracle);
}

TEST(Po, FloquetConstantLinearSystem) {
  ParamVectorField vf;
  vf.dim = 2;
  MatrixXd A(2, 2);
  A << -0.1, 1.0, -1.0, -0.2;
  vf.f = [A](Real, const VectorXd& x, Real, Real) { return VectorXd(A * x); };
  vf.dfdx = [A](Real, const VectorXd&, Real, Real) { return A; };

  const Real T = 1.7;
  const auto mesh = CollocationMesh::make(10, 5);
  const POSolution po = analytic_po(mesh, [](Real) { return VectorXd::Zero(2); }, 2, T);
  POSolution pot = po;
  pot.omega = 0;
  pot.eps = 0;
  const VectorXcd mult = floquet(pot, vf);
  Eigen::EigenSolver<MatrixXd> es(A);
  std::vector<Complex> expect = {std::exp(es.eigenvalues()[0] * T),
                                 std::exp(es.eigenvalues()[1] * T)};
  for (const Complex& e : expect) {
    Real best = 1e9;
    for (Eigen::Index i = 0; i < mult.size(); ++i) best = std::min(best, std::abs(mult[i] - e));
    EXPECT_LT(best, 1e-8);
  }
}

TEST(Po, TrivialMultiplierAndRadialExponent) {
  const auto vf = hopf_normal_form(1.0);
  const auto mesh = CollocationMesh::make(12, 5);
  const Real mu = 0.04;
  const POSolution po = collocate_po(vf, circle_guess(mesh, 0.2), 2 * kPi, mu, 0.0, mesh);
  const VectorXcd mult = po.multipliers;
  // one multiplier at +1
  Real dtriv = 1e9;
  for (Eigen::Index i = 0; i < mult.size(); ++i)
    dtriv = std::min(dtriv, std::abs(mult[i] - 1.0));
  EXPECT_LT(dtriv, 1e-6);
  // nontrivial multiplier e^{-2 mu T} (radial exponent of the normal form)
  const Real expect = std::exp(-2 * mu * po.period);
  Real dnon = 1e9;
  for (Eigen::Index i = 0; i < mult.size(); ++i)
    if (std::abs(mult[i] - 1.0) > 1e-5) dnon = std::min(dnon, std::abs(mult[i] - expect));
  EXPECT_LT(dnon, 1e-4);

  // variational integration oracle for the same multiplier
  auto rhs_var = [&](Real, const VectorXd& y) {
    const VectorXd x = y.head(2);
    VectorXd out(6);
    out.head(2) = vf.f(0, x, mu, 0);
    const MatrixXd J = vf.dfdx(0, x, mu, 0);
    Eigen::Map<const MatrixXd> Phi(y.data() + 2, 2, 2);
    Eigen::Map<MatrixXd>(out.data() + 2, 2, 2) = J * Phi;
    return out;
  };
  VectorXd y0(6);
  y0.head(2) = po.states.col(0);
  Eigen::Map<MatrixXd>(y0.data() + 2, 2, 2) = MatrixXd::Identity(2, 2);
  const VectorXd yT = oracles::rk4(rhs_var, 0.0, y0, po.period, 20000);
  Eigen::Map<const MatrixXd> PhiT(yT.data() + 2, 2, 2);
  Eigen::EigenSolver<MatrixXd> es(PhiT);
  Real omin = 1e9;
  for (int i = 0; i < 2; ++i)
    if (std::abs(es.eigenvalues()[i] - 1.0) > 1e-4)
      omin = std::min(omin, std::abs(es.eigenvalues()[i] - expect));
  EXPECT_LT(omin, 1e-4);
}

TEST(Po, TestFunctionArithmetic) {
  VectorXcd m(2);
  m << Complex(0.5, 0), Complex(2.0, 0);
  const auto tf = po_test_functions(m, false);
  EXPECT_NEAR(tf.psi_sn, -0.5, 1e-14);
  EXPECT_NEAR(tf.psi_pd, 4.5, 1e-14);

  VectorXcd pair(2);
  pair << std::polar(0.9, kPi / 3), std::polar(0.9, -kPi / 3);
  const auto tf2 = po_test_functions(pair, false);
  EXPECT_NEAR(tf2.psi_tr, 0.81 - 1.0, 1e-12);

  VectorXcd one(1);
  one << Complex(0.3, 0);
  EXPECT_NEAR(po_test_functions(one, false).psi_tr, 1.0, 1e-14);  // N = 1 convention
  EXPECT_THROW(po_test_functions(one, false, 5), std::invalid_argument);
}

TEST(Po, SubsetSelectionRescuesUnderflowingProducts) {
  // many contracting multipliers drive the full products toward zero while a
  // near-critical pair keeps the subset product informative
  const int n = 160;
  auto build = [&](Real crit_mod) {
    VectorXcd m(n);
    int k = 0;
    m[k++] = Complex(1.0, 0.0);  // trivial
    m[k++] = std::polar(crit_mod, 0.35);
    m[k++] = std::polar(crit_mod, -0.35);
    int idx = 0;
    while (k < n) {
      const Real mod = 0.35 + 0.4 * ((idx * 37) % 100) / 100.0;  // 0.35 .. 0.75
      const Real ang = 0.12 + 0.5 * ((idx * 61) % 100) / 100.0;
      m[k++] = std::polar(mod, ang);
      if (k < n) m[k++] = std::polar(mod, -ang);
      ++idx;
    }
    return m;
  };
  const auto full_lo = po_test_functions(build(0.995), true, 0);
  const auto full_hi = po_test_functions(build(1.005), true, 0);
  EXPECT_LT(std::abs(full_lo.psi_tr), 1e-12);  // underflow toward zero
  EXPECT_LT(std::abs(full_hi.psi_tr), 1e-12);
  const auto sub_lo = po_test_functions(build(0.995), true, 3);
  const auto sub_hi = po_test_functions(build(1.005), true, 3);
  EXPECT_GT(std::abs(sub_lo.psi_tr), 1e-6);
  EXPECT_GT(std::abs(sub_hi.psi_tr), 1e-6);
  EXPECT_LT(sub_lo.psi_tr * sub_hi.psi_tr, 0.0);  // detectable sign change
}

TEST(Po, SizeMeasure) {
  const auto mesh = CollocationMesh::make(10, 5);
  // constant orbit
  POSolution c = analytic_po(mesh, [](Real) { return VectorXd::Constant(2, 0.7); }, 2, 1.0);
  EXPECT_NEAR(po_size(c), 0.0, 1e-14);

  // scalar A sin(2 pi tau): size A / sqrt(2)
  const Real A = 1.3;
  POSolution s = analytic_po(
      mesh, [A](Real tau) { return VectorXd::Constant(1, A * std::sin(2 * kPi * tau)); }, 1, 1.0);
  EXPECT_NEAR(po_size(s), A / std::sqrt(2.0), 2e-5 * A);

  // fine-grid quadrature oracle on the same interpolant
  POSolution r = analytic_po(
      mesh,
      [](Real tau) {
        VectorXd v(2);
        v << 0.3 * std::sin(2 * kPi * tau) + 0.1 * std::cos(4 * kPi * tau),
            -0.2 + 0.5 * std::cos(2 * kPi * tau);
        return v;
      },
      2, 2.0);
  const int fine = 200000;
  VectorXd mean = VectorXd::Zero(2);
  for (int k = 0; k < fine; ++k) mean += r.state_at((k + 0.5) / fine);
  mean /= fine;
  Real acc = 0;
  for (int k = 0; k < fine; ++k) acc += (r.state_at((k + 0.5) / fine) - mean).squaredNorm();
  const Real oracle = std::sqrt(acc / fine);
  EXPECT_NEAR(po_size(r), oracle, 1e-8);

  // invariance under time shift and linearity under scaling
  POSolution shifted = analytic_po(
      mesh,
      [](Real tau) {
        VectorXd v(2);
        v << 0.3 * std::sin(2 * kPi * (tau + 0.37)) + 0.1 * std::cos(4 * kPi * (tau + 0.37)),
            -0.2 + 0.5 * std::cos(2 * kPi * (tau + 0.37));
        return v;
      },
      2, 2.0);
  EXPECT_NEAR(po_size(shifted), po_size(r), 1e-6);
  POSolution scaled = r;
  scaled.states *= 3.0;
  EXPECT_NEAR(po_size(scaled), 3.0 * po_size(r), 1e-12);
}

TEST(Po, HopfSwitchAndAmplitudeLaw) {
  const auto vf = hopf_normal_form(1.0);
  const auto mesh = CollocationMesh::make(10, 5);
  // HB of the origin at mu = 0: J has eigenvalues mu +- i om
  BranchPoint hb;
  hb.state = VectorXd::Zero(2);
  hb.omega = 0.0;  // mu plays the continuation-parameter role
  hb.eps = 0.0;
  const MatrixXd J = vf.dfdx(0, VectorXd::Zero(2), 0.0, 0.0);
  EXPECT_NEAR(hb_switch(hb, J, mesh, 1e-3).period, 2 * kPi, 1e-12);

  // the robust switch lands on the genuine bifurcating cycle, whose radius
  // then follows the sqrt(mu - mu_c) law along the family
  const POSolution first = hb_switch_solve(vf, hb, J, 0.0, mesh);
  EXPECT_GT(po_size(first), 1e-6);
  POSolution po = first;
  for (Real mu : {0.001, 0.004, 0.01, 0.04, 0.09}) {
    po = collocate_po(vf, po.states, po.period, mu, 0.0, mesh);
    EXPECT_NEAR(po.states.col(0).norm(), std::sqrt(mu), 0.02 * std::sqrt(mu));
  }
}

TEST(Po, SubcriticalBranchContinuesBackward) {
  const auto vf = hopf_normal_form(1.0, +1.0);  // subcritical: cycles at mu < 0
  const auto mesh = CollocationMesh::make(10, 5);
  const POSolution po = collocate_po(vf, circle_guess(mesh, 0.2), 2 * kPi, -0.04, 0.0, mesh);
  EXPECT_NEAR(po.states.col(0).norm(), 0.2, 0.01);
  EXPECT_FALSE([&] {
    std::vector<Complex> m(po.multipliers.data(), po.multipliers.data() + po.multipliers.size());
    auto it = std::min_element(m.begin(), m.end(), [](Complex a, Complex b) {
      return std::abs(a - 1.0) < std::abs(b - 1.0);
    });
    m.erase(it);
    return std::all_of(m.begin(), m.end(), [](Complex z) { return std::abs(z) < 1.0; });
  }());  // unstable cycle
}

TEST(Po, ContinuationOfHopfFamily) {
  const auto vf = hopf_normal_form(1.0);
  const auto mesh = CollocationMesh::make(10, 5);
  const POSolution seed = collocate_po(vf, circle_guess(mesh, 0.2), 2 * kPi, 0.04, 0.0, mesh);
  POContinuationOptions opts;
  opts.settings.initial_step = 0.05;
  opts.settings.max_step = 0.2;
  opts.settings.max_points = 200;
  opts.param_lo = 0.01;
  opts.param_hi = 0.5;
  const POBranch br = continue_po(vf, seed, opts);
  ASSERT_GT(br.orbits.size(), 5u);
  for (const auto& po : br.orbits) {
    EXPECT_NEAR(po.period, 2 * kPi, 1e-6);  // T_s constant for the normal form
    EXPECT_NEAR(po.states.col(0).norm(), std::sqrt(po.omega), 0.02 * std::sqrt(po.omega));
    EXPECT_TRUE(po.stable);
  }
}
