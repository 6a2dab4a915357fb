#pragma once

#include "ssmkit/periodic_orbit.hpp"

namespace ssmkit {

/// Invariant 2-torus of the (reduced or forced) dynamics, approximated by
/// 2n_h+1 trajectory segments over one period of the second frequency, coupled
/// through a rigid rotation of the initial closed curve.
struct TorusSolution {
  CollocationMesh mesh;
  int dim = 0;
  int n_h = 0;
  std::vector<MatrixXd> segments;  // 2n_h+1 matrices, dim x mesh.n_points()
  Real T2 = 0.0;                   // segment-direction period
  Real rho = 0.0;                  // rotation number
  Real omega = 0.0;
  Real eps = 0.0;
  bool forced = false;             // forced: T2 = 2 pi / Omega fixed, one phase condition
  bool stable = false;             // inherited from the bifurcating cycle

  int n_seg() const { return 2 * n_h + 1; }
  Real omega2() const { return 2.0 * kPi / T2; }
  Real omega1() const { return rho * omega2(); }
  /// Initial closed-curve points u_i(0).
  MatrixXd initial_curve() const;
};

/// Trigonometric rotation matrix: maps the 2n_h+1 curve samples at phases
/// phi_i = (i-1) 2 pi / (2n_h+1) to the order-n_h interpolant evaluated at
/// phases phi_i + 2 pi rho.
MatrixXd rotation_matrix(int n_h, Real rho);
/// Same action applied to a point set (columns are curve samples).
MatrixXd rotation_operator(const MatrixXd& points, Real rho);
/// Derivative of rotation_matrix with respect to rho.
MatrixXd rotation_matrix_drho(int n_h, Real rho);

/// Torus seed at a TR bifurcation of an autonomous cycle: the critical cycle
/// perturbed along the complex Floquet eigenplane, rho0 = alpha / (2 pi) from
/// the crossing pair e^{+- i alpha}. Warns (via the returned flag) near strong
/// resonances alpha = 2 pi p / q, q <= 4.
struct TrSwitchResult {
  TorusSolution seed;
  Real alpha = 0.0;
  bool strong_resonance = false;
};
TrSwitchResult tr_switch(const POSolution& po, const ParamVectorField& vf, int n_h,
                         Real delta = 1e-3);

/// Max collocation residual plus boundary-closure error of a stored torus.
Real torus_residual(const TorusSolution& tor, const ParamVectorField& vf);

enum class RhoMode { Free, Fixed };

struct TorusSolveOptions {
  Real tol = 1e-9;
  int max_iters = 20;
};

/// Newton solve at fixed parameters. Free-rho mode solves (segments, T2, rho)
/// for autonomous fields and (segments, rho) for forced fields.
TorusSolution solve_torus(const ParamVectorField& vf, const TorusSolution& guess,
                          const TorusSolveOptions& opts = {});

struct TorusContinuationOptions {
  ContinuationSettings settings;
  ActiveParam active = ActiveParam::Omega;
  Real param_lo = 0.0;
  Real param_hi = 0.0;
  RhoMode mode = RhoMode::Free;
};

struct TorusBranch {
  Branch branch;
  std::vector<TorusSolution> tori;
};

/// Pseudo-arclength continuation of the torus family. In fixed-rho mode both
/// Omega and eps vary; in free-rho mode the selected parameter varies and rho
/// is part of the solution.
TorusBranch continue_torus(const ParamVectorField& vf, const TorusSolution& seed,
                           const TorusContinuationOptions& opts);

}  // namespace ssmkit
