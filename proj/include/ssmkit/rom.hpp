#pragma once

#include "ssmkit/ssm.hpp"

namespace ssmkit {

/// Leading-order reduced dynamics evaluated in the rotating frame.
/// Cartesian chart: x = (q_1s^R, q_1s^I, ..., q_ms^R, q_ms^I), dimension 2m.
/// Polar chart: (rho_1..rho_m, theta_1..theta_m); singular at rho -> 0.

constexpr Real kRhoMin = 1e-8;

/// Cartesian slow vector field r^c stacked over modes.
VectorXd cartesian_vf(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps);

/// Analytic Jacobian of cartesian_vf with respect to x.
MatrixXd cartesian_jacobian(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps);

/// Analytic derivatives of cartesian_vf with respect to Omega and eps.
VectorXd cartesian_domega(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps);
VectorXd cartesian_deps(const ReducedModel& rm, const VectorXd& x, Real omega, Real eps);

/// Polar slow vector field (rho_i', theta_i') stacked over modes.
/// Throws when any rho_i <= rho_min (chart singularity).
VectorXd polar_vf(const ReducedModel& rm, const VectorXd& rho_theta, Real omega, Real eps,
                  Real rho_min = kRhoMin);

/// Chart change (rho, theta) -> Cartesian state.
VectorXd polar_to_cartesian(const VectorXd& rho_theta);
VectorXd cartesian_to_polar(const VectorXd& x);

/// Complex modal coordinates q_s from the Cartesian state.
VectorXcd q_from_cartesian(const VectorXd& x);
VectorXd cartesian_from_q(const VectorXcd& q);

}  // namespace ssmkit
