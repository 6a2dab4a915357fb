#pragma once

#include "ssmkit/periodic_orbit.hpp"
#include "ssmkit/torus.hpp"

namespace ssmkit {

/// Collection of physical-coordinate trajectories approximating an invariant
/// 2- or 3-torus of the full system.
struct PhysicalTorus {
  int dim = 2;                          // torus dimension
  std::vector<MatrixXd> trajectories;   // each N x n_samples
  VectorXd times;                       // shared sample times
  Real omega = 0.0;                     // excitation frequency
  Real omega_s = 0.0;                   // internal frequency (2-torus)
  Real omega1_s = 0.0, omega2_s = 0.0;  // internal frequencies (3-torus)
  Real eps = 0.0;
  bool stable = false;
};

/// Physical point z = W(p) + eps (x0 e^{i phi} + conj), with the non-autonomous
/// correction solved (and cached) at Omega on demand.
VectorXd lift_point(const ReducedModel& rm, const VectorXcd& q, Real phi, Real omega, Real eps);

/// Reduced equilibrium -> physical periodic orbit over one period
/// T = 2 pi / (r_d Omega), sampled at n_pt points. Columns are samples.
MatrixXd eq_to_po(const ReducedModel& rm, const VectorXd& q_eq, Real omega, Real eps, int n_pt);

/// Reduced limit cycle -> physical 2-torus: one lifted trajectory per mesh
/// point of the cycle, shifted by sigma_i = t_i, each over one period T.
PhysicalTorus po_to_torus2(const ReducedModel& rm, const POSolution& po, int n_pt);

/// Reduced 2-torus -> physical 3-torus: every segment interpolated on a grid
/// of ceil(T2s / T) * n_T points, converted through the rotating frame, lifted.
PhysicalTorus torus2_to_torus3(const ReducedModel& rm, const TorusSolution& tor, int n_T);

/// Rotation-number classification of the lifted invariant set.
struct RotationClass {
  Real rho = 0.0;
  bool periodic = false;
  int m_p = 0;      // period multiplier when periodic (resulting period m_p T)
  Real period = 0.0;
};
RotationClass classify_rotation(Real T_s, Real omega, const Rational& r_d, int denominator_cap = 100,
                                Real tol = 1e-6);

/// Max |selected output| over all trajectories and samples.
Real amplitude_inf(const std::vector<MatrixXd>& trajectories, int output_index);
Real amplitude_inf(const PhysicalTorus& torus, int output_index);

/// Invariant circle of the period-2pi/Omega map: states of all trajectories at
/// times that are multiples of 2 pi / Omega, ordered by slow phase.
MatrixXd poincare_circle(const PhysicalTorus& torus2);

/// Periodic cubic-spline interpolation through samples on [0, period).
class PeriodicSpline {
 public:
  PeriodicSpline() = default;
  /// columns of `values` are samples at equispaced times k * period / n.
  PeriodicSpline(const MatrixXd& values, Real period);
  VectorXd eval(Real t) const;

 private:
  MatrixXd vals_, m_;  // values and second derivatives at knots
  Real period_ = 0.0;
  Real h_ = 0.0;
};

}  // namespace ssmkit
