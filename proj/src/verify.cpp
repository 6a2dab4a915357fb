#include "ssmkit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssmkit {

MatrixXd newmark_integrate(const MechSystem& mech, const VectorXd& z0, Real omega, Real eps,
                           int steps_per_cycle, int n_cycles, Real alpha) {
  mech.validate();
  const int n = mech.n;
  if (z0.size() != 2 * n) throw std::invalid_argument("newmark_integrate: bad initial state");
  const Real gamma = 0.5 + alpha;
  const Real beta = 0.25 * (1.0 + alpha) * (1.0 + alpha);
  const Real h = 2.0 * kPi / (steps_per_cycle * omega);
  const int nsteps = steps_per_cycle * n_cycles;

  VectorXd x = z0.head(n), v = z0.tail(n);
  auto fnl = [&](const VectorXd& xx, const VectorXd& vv) {
    if (mech.f_nl.empty()) return VectorXd(VectorXd::Zero(n));
    VectorXd s(2 * n);
    s << xx, vv;
    return mech.f_nl.eval(s);
  };
  auto fnl_jac = [&](const VectorXd& xx, const VectorXd& vv) {
    if (mech.f_nl.empty()) return MatrixXd(MatrixXd::Zero(n, 2 * n));
    VectorXd s(2 * n);
    s << xx, vv;
    return mech.f_nl.jacobian(s);
  };

  // initial acceleration
  VectorXd a = mech.M.partialPivLu().solve(eps * mech.f_ext - mech.C * v - mech.K * x - fnl(x, v));

  MatrixXd out(2 * n, nsteps + 1);
  out.col(0) << x, v;
  Real t = 0.0;
  for (int step = 0; step < nsteps; ++step) {
    t += h;
    const VectorXd p = eps * std::cos(omega * t) * mech.f_ext;
    // predictors at a_{n+1} = 0
    const VectorXd xp = x + h * v + h * h * (0.5 - beta) * a;
    const VectorXd vp = v + h * (1.0 - gamma) * a;
    VectorXd xn = x;  // Newton unknown: x_{n+1}
    bool ok = false;
    for (int it = 0; it < 30; ++it) {
      const VectorXd an = (xn - xp) / (beta * h * h);
      const VectorXd vn = vp + gamma * h * an;
      const VectorXd r = mech.M * an + mech.C * vn + mech.K * xn + fnl(xn, vn) - p;
      if (r.lpNorm<Eigen::Infinity>() < 1e-11 * (1.0 + p.lpNorm<Eigen::Infinity>())) {
        ok = true;
        break;
      }
      const MatrixXd Jnl = fnl_jac(xn, vn);
      MatrixXd Keff = mech.K + Jnl.leftCols(n);
      Keff += (1.0 / (beta * h * h)) * mech.M;
      Keff += (gamma / (beta * h)) * (mech.C + Jnl.rightCols(n));
      const VectorXd dx = Keff.partialPivLu().solve(r);
      if (!dx.allFinite()) break;
      xn -= dx;
    }
    if (!ok) throw std::runtime_error("newmark_integrate: Newton failed inside a step");
    a = (xn - xp) / (beta * h * h);
    v = vp + gamma * h * a;
    x = xn;
    out.col(step + 1) << x, v;
  }
  return out;
}

FinalTime select_tf(Real rho_s, const VectorXcd& multipliers, Real delta, int M_bar, Real omega) {
  if (multipliers.size() == 0)
    throw std::invalid_argument("select_tf: empty multiplier set");
  // drop the trivial multiplier, take the largest remaining magnitude
  std::vector<Complex> m(multipliers.data(), multipliers.data() + multipliers.size());
  auto it = std::min_element(m.begin(), m.end(), [](Complex a, Complex b) {
    return std::abs(a - 1.0) < std::abs(b - 1.0);
  });
  m.erase(it);
  Real mmax = 0.0;
  for (const Complex& z : m) mmax = std::max(mmax, std::abs(z));

  FinalTime ft;
  if (m.empty() || mmax >= 1.0) {
    ft.M = M_bar;
    ft.unstable_note = true;
  } else {
    const Real raw = std::log(delta) / std::log(mmax);
    ft.M = std::min(static_cast<int>(std::ceil(raw)), M_bar);
    ft.M = std::max(ft.M, 1);
  }
  ft.t_f = ft.M * std::ceil(1.0 / rho_s) * 2.0 * kPi / omega;
  return ft;
}

Real mle(const VectorXcd& multipliers, Real T_s) {
  if (multipliers.size() < 2)
    throw std::invalid_argument("mle: need at least one nontrivial multiplier");
  std::vector<Complex> m(multipliers.data(), multipliers.data() + multipliers.size());
  auto it = std::min_element(m.begin(), m.end(), [](Complex a, Complex b) {
    return std::abs(a - 1.0) < std::abs(b - 1.0);
  });
  m.erase(it);
  Real mmax = 0.0;
  for (const Complex& z : m) mmax = std::max(mmax, std::abs(z));
  return std::log(mmax) / T_s;
}

namespace {

// distance from a point to the closed polyline through the circle samples
Real distance_to_circle(const VectorXd& pt, const MatrixXd& circle) {
  const int n = static_cast<int>(circle.cols());
  Real best = std::numeric_limits<Real>::max();
  for (int i = 0; i < n; ++i) {
    const VectorXd a = circle.col(i);
    const VectorXd b = circle.col((i + 1) % n);
    const VectorXd ab = b - a;
    const Real len2 = ab.squaredNorm();
    Real s = len2 > 0 ? (pt - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    best = std::min(best, (pt - (a + s * ab)).norm());
  }
  return best;
}

Real circle_diameter(const MatrixXd& circle) {
  Real d = 0.0;
  for (int i = 0; i < circle.cols(); ++i)
    for (int j = 0; j < i; ++j) d = std::max(d, (circle.col(i) - circle.col(j)).norm());
  return d;
}

}  // namespace

SimReport verify_torus(const PhysicalTorus& torus, const MechSystem& mech,
                       const VectorXcd& cycle_multipliers, int output_index,
                       const VerifySettings& settings) {
  if (torus.dim != 2) throw std::invalid_argument("verify_torus: needs a 2-torus");
  SimReport rep;

  const Real omega = torus.omega;
  const Real rho_s = torus.omega_s / omega;
  FinalTime ft;
  if (settings.fixed_cycles > 0) {
    ft.M = 1;
    ft.t_f = settings.fixed_cycles * 2.0 * kPi / omega;
  } else {
    ft = select_tf(rho_s, cycle_multipliers, settings.delta, settings.M_bar, omega);
  }
  rep.M = ft.M;
  rep.t_f = ft.t_f;

  const int n_cycles =
      std::max(1, static_cast<int>(std::llround(ft.t_f / (2.0 * kPi / omega))));
  const VectorXd z0 = torus.trajectories.front().col(0);
  rep.trajectory =
      newmark_integrate(mech, z0, omega, torus.eps, settings.steps_per_cycle, n_cycles,
                        settings.newmark_alpha);

  const MatrixXd circle = poincare_circle(torus);
  rep.circle_diameter = circle_diameter(circle);
  rep.threshold = settings.tube_fraction * rep.circle_diameter;

  // steady window: final 1/M of the horizon
  const int first_cycle = n_cycles - std::max(1, n_cycles / std::max(1, rep.M));
  std::vector<int> cycles;
  for (int k = first_cycle; k <= n_cycles; ++k) cycles.push_back(k);
  rep.section_times.resize(cycles.size());
  rep.section_points.resize(rep.trajectory.rows(), cycles.size());
  rep.max_distance = 0.0;
  Real amp = 0.0;
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    const int col = cycles[i] * settings.steps_per_cycle;
    rep.section_times[i] = cycles[i] * 2.0 * kPi / omega;
    rep.section_points.col(i) = rep.trajectory.col(col);
    rep.max_distance = std::max(rep.max_distance,
                                distance_to_circle(rep.trajectory.col(col), circle));
  }
  const int steady_start = first_cycle * settings.steps_per_cycle;
  for (int c = steady_start; c < rep.trajectory.cols(); ++c)
    amp = std::max(amp, std::abs(rep.trajectory(output_index, c)));
  rep.steady_amplitude = amp;

  if (rep.max_distance <= rep.threshold)
    rep.verdict = TorusVerdict::OnTorus;
  else if (rep.max_distance <= 5.0 * rep.threshold)
    rep.verdict = TorusVerdict::ConvergedNearby;
  else
    rep.verdict = TorusVerdict::Diverged;
  return rep;
}

}  // namespace ssmkit
