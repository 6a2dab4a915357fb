#include "ssmkit/vector_field.hpp"

#include <memory>

#include "ssmkit/rom.hpp"

namespace ssmkit {

ParamVectorField rom_vector_field(const ReducedModel& rm) {
  ParamVectorField vf;
  vf.dim = rm.dim();
  vf.autonomous = true;
  vf.f = [&rm](Real, const VectorXd& x, Real om, Real ep) {
    return cartesian_vf(rm, x, om, ep);
  };
  vf.dfdx = [&rm](Real, const VectorXd& x, Real om, Real ep) {
    return cartesian_jacobian(rm, x, om, ep);
  };
  vf.dfdom = [&rm](Real, const VectorXd& x, Real om, Real ep) {
    return cartesian_domega(rm, x, om, ep);
  };
  vf.dfdeps = [&rm](Real, const VectorXd& x, Real om, Real ep) {
    return cartesian_deps(rm, x, om, ep);
  };
  return vf;
}

ParamVectorField full_vector_field(const FirstOrderSystem& sys) {
  auto blu = std::make_shared<Eigen::PartialPivLU<MatrixXd>>(sys.B);
  auto sp = std::make_shared<FirstOrderSystem>(sys);
  ParamVectorField vf;
  vf.dim = sys.N;
  vf.autonomous = false;
  vf.f = [blu, sp](Real t, const VectorXd& z, Real om, Real ep) {
    VectorXd r = sp->A * z;
    if (!sp->F_nl.empty()) r += sp->F_nl.eval(z);
    if (ep != 0.0) r += ep * sp->f_ext(om * t);
    return VectorXd(blu->solve(r));
  };
  vf.dfdx = [blu, sp](Real, const VectorXd& z, Real, Real) {
    MatrixXd J = sp->A;
    if (!sp->F_nl.empty()) J += sp->F_nl.jacobian(z);
    return MatrixXd(blu->solve(J));
  };
  vf.dfdom = [blu, sp](Real t, const VectorXd&, Real om, Real ep) {
    // d/dOmega of eps * F_ext(Omega t) at fixed t
    const Complex iphase(0.0, 1.0);
    const Complex e = std::polar(1.0, om * t);
    VectorXcd d = sp->F_a * (iphase * Real(t) * e);
    VectorXd r = 2.0 * ep * d.real();
    return VectorXd(blu->solve(r));
  };
  vf.dfdeps = [blu, sp](Real t, const VectorXd&, Real om, Real) {
    return VectorXd(blu->solve(sp->f_ext(om * t)));
  };
  return vf;
}

VectorXd rk4_integrate(const ParamVectorField& vf, Real t0, const VectorXd& x0, Real T, int n,
                       Real om, Real ep) {
  VectorXd x = x0;
  const Real h = T / n;
  Real t = t0;
  for (int i = 0; i < n; ++i) {
    const VectorXd k1 = vf.f(t, x, om, ep);
    const VectorXd k2 = vf.f(t + h / 2, x + h / 2 * k1, om, ep);
    const VectorXd k3 = vf.f(t + h / 2, x + h / 2 * k2, om, ep);
    const VectorXd k4 = vf.f(t + h, x + h * k3, om, ep);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return x;
}

}  // namespace ssmkit
