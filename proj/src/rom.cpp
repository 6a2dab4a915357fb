#include "ssmkit/rom.hpp"

#include <cmath>
#include <stdexcept>

namespace ssmkit {

namespace {

Complex cpow(Complex z, int p) {
  Complex r(1, 0);
  for (int i = 0; i < p; ++i) r *= z;
  return r;
}

Complex monomial(const VectorXcd& q, const VectorXcd& qb, const GammaTerm& g) {
  Complex v(1, 0);
  for (std::size_t s = 0; s < g.l.size(); ++s) {
    v *= cpow(q[static_cast<Eigen::Index>(s)], g.l[s]);
    v *= cpow(qb[static_cast<Eigen::Index>(s)], g.j[s]);
  }
  return v;
}

}  // namespace

VectorXcd q_from_cartesian(const VectorXd& x) {
  VectorXcd q(x.size() / 2);
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = Complex(x[2 * i], x[2 * i + 1]);
  return q;
}

VectorXd cartesian_from_q(const VectorXcd& q) {
  VectorXd x(2 * q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    x[2 * i] = q[i].real();
    x[2 * i + 1] = q[i].imag();
  }
  return x;
}

VectorXd cartesian_vf(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps) {
  const int m = rm.m();
  const VectorXcd q = q_from_cartesian(x);
  const VectorXcd qb = q.conjugate();
  VectorXd out(2 * m);
  for (int i = 0; i < m; ++i) {
    const Complex lam = rm.master.lambda[i];
    const Real ri = rm.master.r[i].value();
    Complex dq = (lam - Complex(0, ri * omega)) * q[i];
    for (const auto& g : rm.gamma[i]) dq += g.value * monomial(q, qb, g);
    dq += eps * rm.f_mod[i];
    out[2 * i] = dq.real();
    out[2 * i + 1] = dq.imag();
  }
  return out;
}

MatrixXd cartesian_jacobian(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps) {
  (void)eps;
  const int m = rm.m();
  const VectorXcd q = q_from_cartesian(x);
  const VectorXcd qb = q.conjugate();
  MatrixXd J = MatrixXd::Zero(2 * m, 2 * m);
  for (int i = 0; i < m; ++i) {
    const Complex lam = rm.master.lambda[i];
    const Real ri = rm.master.r[i].value();
    J(2 * i, 2 * i) = lam.real();
    J(2 * i, 2 * i + 1) = ri * omega - lam.imag();
    J(2 * i + 1, 2 * i) = lam.imag() - ri * omega;
    J(2 * i + 1, 2 * i + 1) = lam.real();
    for (const auto& g : rm.gamma[i]) {
      for (int s = 0; s < m; ++s) {
        // d(q^l qb^j)/dq_s and /dqb_s
        Complex dl(0, 0), dj(0, 0);
        if (g.l[s] > 0) {
          GammaTerm gl = g;
          gl.l[s] -= 1;
          dl = Real(g.l[s]) * monomial(q, qb, gl);
        }
        if (g.j[s] > 0) {
          GammaTerm gj = g;
          gj.j[s] -= 1;
          dj = Real(g.j[s]) * monomial(q, qb, gj);
        }
        // dq_s/dqR = 1, dqb_s/dqR = 1 ; dq_s/dqI = i, dqb_s/dqI = -i
        const Complex dR = g.value * (dl + dj);
        const Complex dI = g.value * (Complex(0, 1) * dl - Complex(0, 1) * dj);
        J(2 * i, 2 * s) += dR.real();
        J(2 * i + 1, 2 * s) += dR.imag();
        J(2 * i, 2 * s + 1) += dI.real();
        J(2 * i + 1, 2 * s + 1) += dI.imag();
      }
    }
  }
  return J;
}

VectorXd cartesian_domega(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps) {
  (void)omega;
  (void)eps;
  const int m = rm.m();
  VectorXd out(2 * m);
  for (int i = 0; i < m; ++i) {
    const Real ri = rm.master.r[i].value();
    out[2 * i] = ri * x[2 * i + 1];
    out[2 * i + 1] = -ri * x[2 * i];
  }
  return out;
}

VectorXd cartesian_deps(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps) {
  (void)x;
  (void)omega;
  (void)eps;
  const int m = rm.m();
  VectorXd out(2 * m);
  for (int i = 0; i < m; ++i) {
    out[2 * i] = rm.f_mod[i].real();
    out[2 * i + 1] = rm.f_mod[i].imag();
  }
  return out;
}

VectorXd polar_to_cartesian(const VectorXd& rho_theta) {
  const Eigen::Index m = rho_theta.size() / 2;
  VectorXd x(2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    x[2 * i] = rho_theta[i] * std::cos(rho_theta[m + i]);
    x[2 * i + 1] = rho_theta[i] * std::sin(rho_theta[m + i]);
  }
  return x;
}

VectorXd cartesian_to_polar(const VectorXd& x) {
  const Eigen::Index m = x.size() / 2;
  VectorXd rt(2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rt[i] = std::hypot(x[2 * i], x[2 * i + 1]);
    rt[m + i] = std::atan2(x[2 * i + 1], x[2 * i]);
  }
  return rt;
}

VectorXd polar_vf(const ReducedModel& rm, const VectorXd& rho_theta, Real omega, Real eps,
                  Real rho_min) {
  const int m = rm.m();
  const VectorXd rho = rho_theta.head(m);
  const VectorXd theta = rho_theta.tail(m);
  for (int i = 0; i < m; ++i)
    if (rho[i] <= rho_min)
      throw std::domain_error("polar_vf: rho below rho_min (polar chart singularity)");

  auto Q_apply = [](Real rho_i, Real ang, Real re, Real im) {
    return Vector2d(std::cos(ang) * re - std::sin(ang) * im,
                    (std::sin(ang) * re + std::cos(ang) * im) / rho_i);
  };

  VectorXd out(2 * m);
  for (int i = 0; i < m; ++i) {
    const Complex lam = rm.master.lambda[i];
    const Real ri = rm.master.r[i].value();
    Vector2d v(rho[i] * lam.real(), lam.imag() - ri * omega);
    for (const auto& g : rm.gamma[i]) {
      Real amp = 1.0;
      Real ang = -theta[i];
      for (int s = 0; s < m; ++s) {
        for (int c = 0; c < g.l[s] + g.j[s]; ++c) amp *= rho[s];
        ang += (g.l[s] - g.j[s]) * theta[s];
      }
      v += amp * Q_apply(rho[i], ang, g.value.real(), g.value.imag());
    }
    v += eps * Q_apply(rho[i], -theta[i], rm.f_mod[i].real(), rm.f_mod[i].imag());
    out[i] = v[0];
    out[m + i] = v[1];
  }
  return out;
}

}  // namespace ssmkit
