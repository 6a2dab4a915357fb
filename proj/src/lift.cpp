#include "ssmkit/lift.hpp"

#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "ssmkit/rom.hpp"

namespace ssmkit {

PeriodicSpline::PeriodicSpline(const MatrixXd& values, Real period) {
  const int n = static_cast<int>(values.cols());
  if (n < 3) throw std::invalid_argument("PeriodicSpline: need at least 3 samples");
  vals_ = values;
  period_ = period;
  h_ = period / n;
  // cyclic system for second derivatives: m_{k-1} + 4 m_k + m_{k+1} = rhs_k
  MatrixXd A = MatrixXd::Zero(n, n);
  MatrixXd rhs(n, values.rows());
  for (int k = 0; k < n; ++k) {
    A(k, (k + n - 1) % n) += 1.0;
    A(k, k) += 4.0;
    A(k, (k + 1) % n) += 1.0;
    rhs.row(k) = 6.0 / (h_ * h_) *
                 (values.col((k + n - 1) % n) - 2.0 * values.col(k) + values.col((k + 1) % n))
                     .transpose();
  }
  m_ = A.partialPivLu().solve(rhs).transpose();  // rows: states, cols: knots
}

VectorXd PeriodicSpline::eval(Real t) const {
  const int n = static_cast<int>(vals_.cols());
  t -= period_ * std::floor(t / period_);
  int k = std::min(static_cast<int>(t / h_), n - 1);
  const Real s = (t - k * h_) / h_;
  const int k1 = (k + 1) % n;
  const Real a = 1.0 - s;
  return a * vals_.col(k) + s * vals_.col(k1) +
         (h_ * h_ / 6.0) * ((a * a * a - a) * m_.col(k) + (s * s * s - s) * m_.col(k1));
}

VectorXd lift_point(const ReducedModel& rm, const VectorXcd& q, Real phi, Real omega, Real eps) {
  VectorXd z = rm.eval_W(rm.p_from_q(q)).real();
  if (eps != 0.0) {
    const NonAutonomousPart na = rm.nonautonomous(omega);
    z += 2.0 * eps * (na.x0 * std::polar(1.0, phi)).real();
  }
  return z;
}

MatrixXd eq_to_po(const ReducedModel& rm, const VectorXd& q_eq, Real omega, Real eps, int n_pt) {
  const VectorXcd qs = q_from_cartesian(q_eq);
  const int m = rm.m();
  const Real T = 2.0 * kPi / (rm.master.r_d.value() * omega);
  MatrixXd out(rm.sys.N, n_pt);
  for (int k = 0; k < n_pt; ++k) {
    const Real t = T * k / n_pt;
    VectorXcd q(m);
    for (int i = 0; i < m; ++i)
      q[i] = qs[i] * std::polar(1.0, rm.master.r[i].value() * omega * t);
    out.col(k) = lift_point(rm, q, omega * t, omega, eps);
  }
  return out;
}

PhysicalTorus po_to_torus2(const ReducedModel& rm, const POSolution& po, int n_pt) {
  const int m = rm.m();
  const Real omega = po.omega, eps = po.eps;
  const Real T_exc = 2.0 * kPi / omega;
  const Real T = 2.0 * kPi / (rm.master.r_d.value() * omega);
  const Real Ts = po.period;

  PhysicalTorus out;
  out.dim = 2;
  out.omega = omega;
  out.eps = eps;
  out.omega_s = 2.0 * kPi / Ts;
  out.stable = po.stable;

  // degenerate cycle: the torus collapses onto the periodic orbit of eq_to_po
  if (po_size(po) < 1e-9) {
    const int n_total = std::max(1, static_cast<int>(std::ceil(n_pt * T / T_exc)));
    MatrixXd tr = eq_to_po(rm, po.states.col(0), omega, eps, n_total);
    out.trajectories.push_back(std::move(tr));
    out.times = VectorXd::LinSpaced(n_total, 0.0, T * (n_total - 1) / n_total);
    return out;
  }

  // periodic interpolation of the cycle (global base grid is equispaced)
  const int np = po.mesh.n_points();
  const PeriodicSpline spline(po.states.leftCols(np - 1), Ts);

  const VectorXd taus = po.base_taus();
  const int n_total = std::max(1, static_cast<int>(std::ceil(n_pt * T / T_exc)));
  out.times = VectorXd(n_total + 1);
  for (int k = 0; k <= n_total; ++k) out.times[k] = T_exc * k / n_pt;

  out.trajectories.reserve(np);
  for (int i = 0; i < np; ++i) {
    const Real sigma = taus[i] * Ts;
    MatrixXd tr(rm.sys.N, n_total + 1);
    for (int k = 0; k <= n_total; ++k) {
      const Real t = out.times[k];
      const VectorXd w = spline.eval(t + sigma);
      VectorXcd q(m);
      for (int s = 0; s < m; ++s)
        q[s] = Complex(w[2 * s], w[2 * s + 1]) *
               std::polar(1.0, rm.master.r[s].value() * omega * t);
      tr.col(k) = lift_point(rm, q, omega * t, omega, eps);
    }
    out.trajectories.push_back(std::move(tr));
  }
  return out;
}

namespace {

// piecewise-Lagrange evaluation of a torus segment at fraction tau in [0, 1]
VectorXd segment_at(const TorusSolution& tor, int s, Real tau) {
  const auto& mesh = tor.mesh;
  tau = std::clamp(tau, 0.0, 1.0);
  const Real w = 1.0 / mesh.n_int;
  const int i = std::min(static_cast<int>(tau / w), mesh.n_int - 1);
  const Real loc = (tau - i * w) / w;
  VectorXd out = VectorXd::Zero(tor.dim);
  for (int b = 0; b < mesh.n_base; ++b) {
    Real basis = 1.0;
    for (int k = 0; k < mesh.n_base; ++k)
      if (k != b) basis *= (loc - mesh.base_nodes[k]) / (mesh.base_nodes[b] - mesh.base_nodes[k]);
    out += basis * tor.segments[s].col(i * (mesh.n_base - 1) + b);
  }
  return out;
}

}  // namespace

PhysicalTorus torus2_to_torus3(const ReducedModel& rm, const TorusSolution& tor, int n_T) {
  const int m = rm.m();
  const Real omega = tor.omega, eps = tor.eps;
  const Real T = 2.0 * kPi / (rm.master.r_d.value() * omega);
  const Real T2s = tor.T2;
  if (T2s / T < 2.0)
    std::cerr << "torus2_to_torus3: warning, T2s/T = " << T2s / T
              << " < 2, time scales not separated\n";

  PhysicalTorus out;
  out.dim = 3;
  out.omega = omega;
  out.eps = eps;
  out.omega2_s = 2.0 * kPi / T2s;
  out.omega1_s = tor.rho * out.omega2_s;
  out.stable = tor.stable;

  const int n_q = static_cast<int>(std::ceil(T2s / T)) * n_T;
  out.times = VectorXd::LinSpaced(n_q, 0.0, T2s);
  out.trajectories.reserve(tor.n_seg());
  for (int s = 0; s < tor.n_seg(); ++s) {
    MatrixXd tr(rm.sys.N, n_q);
    for (int k = 0; k < n_q; ++k) {
      const Real t = out.times[k];
      const VectorXd w = segment_at(tor, s, t / T2s);
      VectorXcd q(m);
      for (int i = 0; i < m; ++i)
        q[i] = Complex(w[2 * i], w[2 * i + 1]) *
               std::polar(1.0, rm.master.r[i].value() * omega * t);
      tr.col(k) = lift_point(rm, q, omega * t, omega, eps);
    }
    out.trajectories.push_back(std::move(tr));
  }
  return out;
}

RotationClass classify_rotation(Real T_s, Real omega, const Rational& r_d, int denominator_cap,
                                Real tol) {
  if (T_s <= 0 || omega <= 0)
    throw std::invalid_argument("classify_rotation: T_s and Omega must be positive");
  RotationClass rc;
  rc.rho = (2.0 * kPi / T_s) / (r_d.value() * omega);
  const Real T = 2.0 * kPi / (r_d.value() * omega);
  if (auto r = Rational::approximate(rc.rho, tol, denominator_cap)) {
    rc.periodic = true;
    rc.m_p = static_cast<int>(r->den());
    rc.period = rc.m_p * T;
  } else {
    rc.periodic = false;
    rc.m_p = 0;
    rc.period = 0.0;
  }
  return rc;
}

Real amplitude_inf(const std::vector<MatrixXd>& trajectories, int output_index) {
  Real amp = 0.0;
  for (const auto& tr : trajectories)
    amp = std::max(amp, tr.row(output_index).cwiseAbs().maxCoeff());
  return amp;
}

Real amplitude_inf(const PhysicalTorus& torus, int output_index) {
  return amplitude_inf(torus.trajectories, output_index);
}

MatrixXd poincare_circle(const PhysicalTorus& torus2) {
  if (torus2.dim != 2) throw std::invalid_argument("poincare_circle: needs a 2-torus");
  const Real T_exc = 2.0 * kPi / torus2.omega;
  const int n = static_cast<int>(torus2.times.size());
  const Real horizon = torus2.times[n - 1];
  // sample indices at integer multiples of the excitation period, end excluded
  std::vector<int> section;
  for (int k = 0; k < n; ++k) {
    const Real t = torus2.times[k];
    const Real frac = t / T_exc - std::round(t / T_exc);
    if (std::abs(frac) < 1e-9 && t < horizon - 1e-12 * (1 + horizon)) section.push_back(k);
  }
  if (section.empty()) section.push_back(0);

  struct Pt {
    Real phase;
    int traj, k;
  };
  std::vector<Pt> pts;
  const int ntraj = static_cast<int>(torus2.trajectories.size());
  const Real om_s = torus2.omega_s > 0 ? torus2.omega_s : 1.0;
  const Real Ts = 2.0 * kPi / om_s;
  for (int i = 0; i < ntraj; ++i) {
    const Real sigma = ntraj > 1 ? Ts * i / (ntraj - 1) : 0.0;
    for (int k : section) {
      Real ph = std::fmod(sigma + torus2.times[k], Ts);
      if (ph < 0) ph += Ts;
      pts.push_back({ph, i, k});
    }
  }
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.phase < b.phase; });

  MatrixXd out(torus2.trajectories[0].rows(), pts.size());
  for (std::size_t c = 0; c < pts.size(); ++c)
    out.col(c) = torus2.trajectories[pts[c].traj].col(pts[c].k);
  return out;
}

}  // namespace ssmkit
