#include "ssmkit/continuation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssmkit {

std::string to_string(EventType t) {
  switch (t) {
    case EventType::SN: return "SN";
    case EventType::HB: return "HB";
    case EventType::PD: return "PD";
    case EventType::TR: return "TR";
    case EventType::BP: return "BP";
  }
  return "?";
}

void ContinuationSettings::validate() const {
  if (!(min_step <= initial_step && initial_step <= max_step))
    throw std::invalid_argument("ContinuationSettings: need min <= initial <= max step");
}

namespace {

// Newton corrector for [F(y); t.(y - y_pred)] = 0
bool correct(const ZeroProblem& zp, const VectorXd& tangent, const VectorXd& y_pred,
             const ContinuationSettings& s, VectorXd& y_out) {
  VectorXd y = y_pred;
  for (int it = 0; it < s.max_corrector_iters; ++it) {
    VectorXd f = zp.residual(y);
    const Real arc = tangent.dot(y - y_pred);
    Real norm = std::max(f.lpNorm<Eigen::Infinity>(), std::abs(arc));
    if (!std::isfinite(norm)) return false;
    if (norm < s.corrector_tol) {
      y_out = y;
      return true;
    }
    MatrixXd J(zp.dim, zp.dim);
    J.topRows(zp.dim - 1) = zp.jacobian(y);
    J.row(zp.dim - 1) = tangent.transpose();
    VectorXd rhs(zp.dim);
    rhs.head(zp.dim - 1) = f;
    rhs[zp.dim - 1] = arc;
    const VectorXd dy = J.partialPivLu().solve(rhs);
    if (!dy.allFinite()) return false;
    y -= dy;
  }
  VectorXd f = zp.residual(y);
  if (f.lpNorm<Eigen::Infinity>() < s.corrector_tol) {
    y_out = y;
    return true;
  }
  return false;
}

VectorXd next_tangent(const ZeroProblem& zp, const VectorXd& y, const VectorXd& prev_tangent) {
  MatrixXd J(zp.dim, zp.dim);
  J.topRows(zp.dim - 1) = zp.jacobian(y);
  J.row(zp.dim - 1) = prev_tangent.transpose();
  VectorXd rhs = VectorXd::Zero(zp.dim);
  rhs[zp.dim - 1] = 1.0;
  VectorXd t = J.partialPivLu().solve(rhs);
  const Real n = t.norm();
  if (!(n > 0) || !t.allFinite())
    throw std::runtime_error("continue_branch: singular tangent computation");
  t /= n;
  if (t.dot(prev_tangent) < 0) t = -t;  // keep orientation
  return t;
}

}  // namespace

Branch continue_branch(const ZeroProblem& zp, const VectorXd& seed,
                       const ContinuationSettings& settings) {
  settings.validate();
  Branch br;

  // converge the seed with plain Newton (no arclength constraint on y[dim-1])
  VectorXd y = seed;
  {
    bool ok = false;
    for (int it = 0; it < 4 * settings.max_corrector_iters; ++it) {
      VectorXd f = zp.residual(y);
      if (f.lpNorm<Eigen::Infinity>() < settings.corrector_tol) {
        ok = true;
        break;
      }
      MatrixXd Je = zp.jacobian(y);
      // minimum-norm correction for the underdetermined system
      VectorXd dy = Je.completeOrthogonalDecomposition().solve(f);
      if (!dy.allFinite()) break;
      y -= dy;
    }
    if (!ok) {
      br.status = BranchStatus::SeedFailure;
      return br;
    }
  }

  VectorXd tangent;
  {
    MatrixXd J(zp.dim, zp.dim);
    J.topRows(zp.dim - 1) = zp.jacobian(y);
    VectorXd pref = VectorXd::Zero(zp.dim);
    pref[zp.dim - 1] = 1.0;  // prefer increasing final coordinate initially
    J.row(zp.dim - 1) = pref.transpose();
    VectorXd rhs = VectorXd::Zero(zp.dim);
    rhs[zp.dim - 1] = 1.0;
    tangent = J.partialPivLu().solve(rhs);
    tangent /= tangent.norm();
    if (tangent[zp.dim - 1] * settings.initial_direction < 0) tangent = -tangent;
  }

  auto record = [&](const VectorXd& yy) {
    BranchPoint p;
    p.state = yy;
    br.points.push_back(std::move(p));
  };
  record(y);

  std::vector<Real> tests;
  if (zp.test_functions) tests = zp.test_functions(y);

  const VectorXd y_start = y;
  Real h = settings.initial_step;
  bool moved_away = false;

  while (static_cast<int>(br.points.size()) < settings.max_points) {
    VectorXd y_new;
    if (!correct(zp, tangent, y + h * tangent, settings, y_new)) {
      h *= 0.5;
      if (h < settings.min_step) {
        br.status = BranchStatus::StepUnderflow;
        return br;
      }
      continue;
    }

    // event detection across [y, y_new]
    if (zp.test_functions) {
      std::vector<Real> tests_new = zp.test_functions(y_new);
      for (std::size_t w = 0; w < tests.size(); ++w) {
        if (!(tests[w] * tests_new[w] < 0)) continue;
        // bisection in arclength step from y along tangent
        Real a = 0.0, b = h;
        Real fa = tests[w];
        VectorXd y_loc = y_new;
        for (int it = 0; it < 100; ++it) {
          const Real mid = 0.5 * (a + b);
          VectorXd ym;
          if (!correct(zp, tangent, y + mid * tangent, settings, ym)) break;
          const Real fm = zp.test_functions(ym)[w];
          y_loc = ym;
          if (std::abs(fm) <= settings.event_tol) break;
          if (fa * fm < 0)
            b = mid;
          else {
            a = mid;
            fa = fm;
          }
        }
        if (!zp.event_filter || zp.event_filter(y_loc, static_cast<int>(w))) {
          BranchEvent ev;
          ev.type = zp.event_types[w];
          ev.interval_lo = static_cast<int>(br.points.size()) - 1;
          ev.interval_hi = static_cast<int>(br.points.size());
          ev.solution.state = y_loc;
          br.events.push_back(std::move(ev));
        }
      }
      tests = std::move(tests_new);
    }

    tangent = next_tangent(zp, y_new, tangent);
    y = y_new;
    record(y);
    h = std::min(h * 1.3, settings.max_step);

    if (zp.out_of_window && zp.out_of_window(y)) {
      br.status = BranchStatus::WindowExit;
      return br;
    }
    const Real dist_start = (y - y_start).norm();
    if (moved_away && dist_start < h) {
      br.status = BranchStatus::Closed;
      return br;
    }
    if (dist_start > 4 * settings.max_step) moved_away = true;
  }
  br.status = BranchStatus::PointBudget;
  return br;
}

std::pair<Real, Real> eq_test_functions(const MatrixXd& J) {
  Eigen::EigenSolver<MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eq_test_functions: eigen solve failed");
  const VectorXcd mu = es.eigenvalues();
  const Real psi_sn = J.determinant();
  Real psi_hb = 1.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) psi_hb *= (mu[i] + mu[j]).real();
  return {psi_sn, psi_hb};
}

namespace {

// eigenvalues of the reduced Jacobian at a (state, Omega, eps) point
VectorXcd eq_eigs(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps) {
  Eigen::EigenSolver<MatrixXd> es(cartesian_jacobian(rm, x, omega, eps));
  return es.eigenvalues();
}

// genuine Hopf: the eigenvalue pair with the smallest |mu_i + mu_j| must be a
// complex conjugate pair (rejects neutral saddles where two real eigenvalues
// sum to zero)
bool genuine_hopf(const VectorXcd& mu) {
  Real best = std::numeric_limits<Real>::max();
  Eigen::Index bi = 0, bj = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const Real v = std::abs(mu[i] + mu[j]);
      if (v < best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  const Complex a = mu[bi], b = mu[bj];
  const Real scale = std::max(1e-12, std::abs(a) + std::abs(b));
  return std::abs(a - std::conj(b)) < 1e-6 * scale && std::abs(a.imag()) > 1e-9;
}

}  // namespace

VectorXd solve_equilibrium(const ReducedModel& rm, Real omega, Real eps, const VectorXd* seed,
                           Real tol) {
  const int n = rm.dim();
  VectorXd x;
  if (seed) {
    x = *seed;
  } else {
    // linearized response q_lin = -(Lambda_rot)^{-1} eps f  (small-eps predictor)
    x = VectorXd::Zero(n);
    MatrixXd J0 = cartesian_jacobian(rm, x, omega, eps);
    x = -J0.partialPivLu().solve(eps * cartesian_deps(rm, x, omega, eps));
  }
  for (int it = 0; it < 50; ++it) {
    const VectorXd f = cartesian_vf(rm, x, omega, eps);
    if (f.lpNorm<Eigen::Infinity>() < tol) return x;
    const MatrixXd J = cartesian_jacobian(rm, x, omega, eps);
    VectorXd dx = J.partialPivLu().solve(f);
    if (!dx.allFinite()) break;
    // damped step guard for cold starts
    const Real nx = dx.norm();
    if (nx > 0.5) dx *= 0.5 / nx;
    x -= dx;
  }
  const VectorXd f = cartesian_vf(rm, x, omega, eps);
  if (f.lpNorm<Eigen::Infinity>() >= tol)
    throw std::runtime_error("solve_equilibrium: Newton did not converge");
  return x;
}

Branch continue_equilibria(const ReducedModel& rm, Real omega_lo, Real omega_hi, Real eps,
                           const ContinuationSettings& settings) {
  const int n = rm.dim();
  ZeroProblem zp;
  zp.dim = n + 1;  // (x, Omega)
  zp.residual = [&rm, eps](const VectorXd& y) {
    return cartesian_vf(rm, y.head(y.size() - 1), y[y.size() - 1], eps);
  };
  zp.jacobian = [&rm, eps, n](const VectorXd& y) {
    MatrixXd J(n, n + 1);
    const VectorXd x = y.head(n);
    const Real om = y[n];
    J.leftCols(n) = cartesian_jacobian(rm, x, om, eps);
    J.col(n) = cartesian_domega(rm, x, om, eps);
    return J;
  };
  zp.test_functions = [&rm, eps, n](const VectorXd& y) {
    const auto [sn, hb] = eq_test_functions(cartesian_jacobian(rm, y.head(n), y[n], eps));
    return std::vector<Real>{sn, hb};
  };
  zp.event_types = {EventType::SN, EventType::HB};
  zp.event_filter = [&rm, eps, n](const VectorXd& y, int which) {
    if (which != 1) return true;
    return genuine_hopf(eq_eigs(rm, y.head(n), y[n], eps));
  };
  zp.out_of_window = [omega_lo, omega_hi, n](const VectorXd& y) {
    return y[n] < omega_lo || y[n] > omega_hi;
  };

  VectorXd seed(n + 1);
  seed.head(n) = solve_equilibrium(rm, omega_lo, eps);
  seed[n] = omega_lo;

  Branch br = continue_branch(zp, seed, settings);
  br.kind = BranchKind::Equilibrium;

  auto annotate = [&](BranchPoint& p) {
    const VectorXd x = p.state.head(n);
    p.omega = p.state[n];
    p.eps = eps;
    p.period = 2.0 * kPi / (rm.master.r_d.value() * p.omega);
    p.eig = eq_eigs(rm, x, p.omega, eps);
    p.stable = (p.eig.real().maxCoeff() < 0);
    p.size = x.norm();
  };
  for (auto& p : br.points) annotate(p);
  for (auto& e : br.events) annotate(e.solution);
  return br;
}

Branch continue_codim1_vf(const ParamVectorField& vf, EventType type, Real omega_lo,
                          Real omega_hi, Real eps_lo, Real eps_hi, const VectorXd& x_seed,
                          Real omega_seed, Real eps_seed, const ContinuationSettings& settings) {
  if (type != EventType::SN && type != EventType::HB)
    throw std::invalid_argument("continue_codim1: only SN and HB curves are supported");
  const int n = vf.dim;
  const bool want_sn = (type == EventType::SN);

  auto psi = [&vf, want_sn](const VectorXd& x, Real om, Real ep) {
    const auto [sn, hb] = eq_test_functions(vf.dfdx(0.0, x, om, ep));
    return want_sn ? sn : hb;
  };

  ZeroProblem zp;
  zp.dim = n + 2;  // (x, Omega, eps)
  zp.residual = [&vf, &psi, n](const VectorXd& y) {
    const VectorXd x = y.head(n);
    const Real om = y[n], ep = y[n + 1];
    VectorXd f(n + 1);
    f.head(n) = vf.f(0.0, x, om, ep);
    f[n] = psi(x, om, ep);
    return f;
  };
  zp.jacobian = [&vf, &psi, n](const VectorXd& y) {
    const VectorXd x = y.head(n);
    const Real om = y[n], ep = y[n + 1];
    MatrixXd J = MatrixXd::Zero(n + 1, n + 2);
    J.topLeftCorner(n, n) = vf.dfdx(0.0, x, om, ep);
    J.block(0, n, n, 1) = vf.dfdom(0.0, x, om, ep);
    J.block(0, n + 1, n, 1) = vf.dfdeps(0.0, x, om, ep);
    // finite differences for the test-function row
    for (int c = 0; c < n + 2; ++c) {
      VectorXd yp = y, ym = y;
      const Real hstep = 1e-6 * std::max(1.0, std::abs(y[c]));
      yp[c] += hstep;
      ym[c] -= hstep;
      const Real fp = psi(yp.head(n), yp[n], yp[n + 1]);
      const Real fm = psi(ym.head(n), ym[n], ym[n + 1]);
      J(n, c) = (fp - fm) / (2 * hstep);
    }
    return J;
  };
  zp.out_of_window = [=](const VectorXd& y) {
    return y[n] < omega_lo || y[n] > omega_hi || y[n + 1] < eps_lo || y[n + 1] > eps_hi;
  };

  VectorXd seed(n + 2);
  seed.head(n) = x_seed;
  seed[n] = omega_seed;
  seed[n + 1] = eps_seed;

  Branch br = continue_branch(zp, seed, settings);
  br.kind = BranchKind::EventCurve;
  for (auto& p : br.points) {
    p.omega = p.state[n];
    p.eps = p.state[n + 1];
    Eigen::EigenSolver<MatrixXd> es(vf.dfdx(0.0, p.state.head(n), p.omega, p.eps));
    p.eig = es.eigenvalues();
    p.stable = (p.eig.real().maxCoeff() < 0);
    p.size = p.state.head(n).norm();
  }
  return br;
}

Branch continue_codim1(const ReducedModel& rm, EventType type, Real omega_lo, Real omega_hi,
                       Real eps_lo, Real eps_hi, const BranchPoint& seed_event,
                       const ContinuationSettings& settings) {
  const ParamVectorField vf = rom_vector_field(rm);
  Branch br = continue_codim1_vf(vf, type, omega_lo, omega_hi, eps_lo, eps_hi,
                                 seed_event.state.head(rm.dim()), seed_event.omega,
                                 seed_event.eps, settings);
  const Real rd = rm.master.r_d.value();
  for (auto& p : br.points) p.period = 2.0 * kPi / (rd * p.omega);
  return br;
}

}  // namespace ssmkit
