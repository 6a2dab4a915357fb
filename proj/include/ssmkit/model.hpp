#pragma once

#include <optional>

#include "ssmkit/polynomial_force.hpp"
#include "ssmkit/types.hpp"

namespace ssmkit {

/// Second-order mechanical model  M x'' + C x' + K x + f_nl(x, x') = eps * f_ext * cos(Omega t).
/// The nonlinearity acts on the stacked state (x, x') of dimension 2n.
struct MechSystem {
  MatrixXd M, C, K;
  PolynomialForce f_nl;  // state_dim = 2n, output_dim = n
  VectorXd f_ext;        // cosine forcing shape
  int n = 0;

  void validate() const;
};

/// First-order pencil form  B z' = A z + F_nl(z) + eps * F_ext(Omega t),
/// with F_ext(phi) = F_a e^{i phi} + conj(F_a) e^{-i phi}.
struct FirstOrderSystem {
  MatrixXd A, B;
  PolynomialForce F_nl;  // state_dim = output_dim = N
  VectorXcd F_a;
  int N = 0;

  /// Originating second-order model, when assembled from one. Used for
  /// mass-normalized mode scaling and for time integration of the full system.
  std::optional<MechSystem> mech;

  /// Real harmonic forcing at phase phi.
  VectorXd f_ext(Real phi) const;
  /// z' = B^{-1}(A z + F_nl(z) + eps F_ext(phi)).
  VectorXd rhs(const VectorXd& z, Real phi, Real eps) const;
};

/// Block substitution z = (x, x'), A = [[-K, 0], [0, M]], B = [[C, M], [M, 0]],
/// F_nl(z) = (-f_nl(x, x'); 0), F_a = (f_ext / 2; 0).
FirstOrderSystem assemble_first_order(const MechSystem& mech);

/// Two coupled oscillators:
///   x1'' + c1 x1' + x1 + b1 x1 x2 = eps f1 cos(Omega t)
///   x2'' + c2 x2' + 4 x2 + b2 x1^2 = eps f2 cos(Omega t)
MechSystem build_coupled_oscillators(Real c1, Real c2, Real b1, Real b2, Real f1, Real f2);

/// Euler-Bernoulli cantilever (Hermite elements, consistent mass, 2 DOF/node)
/// with a spring F = k_l w + k_nl w^3 at the tip deflection DOF. Rayleigh
/// damping C = alpha M + beta K_b where K_b excludes the linear spring.
/// Geometry/material fixed: h = b = 10 mm, l = 2.7 m, rho = 1780 kg/m^3,
/// E = 45 GPa (SI units throughout). Forcing f_ext = om1^2 M phi1 with phi1
/// the mass-normalized first mode, so only the first mode is excited.
MechSystem build_bernoulli_beam(int n_elements, Real k_l, Real k_nl, Real alpha, Real beta);

/// Same beam with an explicit length, used by scaling tests.
MechSystem build_bernoulli_beam_length(int n_elements, Real k_l, Real k_nl, Real alpha,
                                       Real beta, Real length);

/// Residual of the second-order equation at state (x, x') and acceleration x''.
VectorXd second_order_residual(const MechSystem& m, const VectorXd& x, const VectorXd& xd,
                               const VectorXd& xdd, Real t, Real omega, Real eps);

}  // namespace ssmkit
