#pragma once

#include <functional>

#include "ssmkit/model.hpp"
#include "ssmkit/ssm.hpp"

namespace ssmkit {

/// First-order ODE x' = f(t, x; Omega, eps) with analytic state Jacobian and
/// optional parameter derivatives. Autonomous fields ignore t.
struct ParamVectorField {
  int dim = 0;
  bool autonomous = true;
  std::function<VectorXd(Real t, const VectorXd& x, Real om, Real ep)> f;
  std::function<MatrixXd(Real t, const VectorXd& x, Real om, Real ep)> dfdx;
  std::function<VectorXd(Real t, const VectorXd& x, Real om, Real ep)> dfdom;
  std::function<VectorXd(Real t, const VectorXd& x, Real om, Real ep)> dfdeps;
};

/// Slow-phase reduced dynamics in the Cartesian chart (autonomous).
ParamVectorField rom_vector_field(const ReducedModel& rm);

/// Full first-order system z' = B^{-1}(A z + F_nl(z) + eps F_ext(Omega t))
/// (non-autonomous; the forcing phase is Omega * t).
ParamVectorField full_vector_field(const FirstOrderSystem& sys);

/// Classic RK4 over [t0, t0 + T] with n fixed steps.
VectorXd rk4_integrate(const ParamVectorField& vf, Real t0, const VectorXd& x0, Real T, int n,
                       Real om, Real ep);

}  // namespace ssmkit
