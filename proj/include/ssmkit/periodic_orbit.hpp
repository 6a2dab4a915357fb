#pragma once

#include "ssmkit/continuation.hpp"
#include "ssmkit/vector_field.hpp"

namespace ssmkit {

/// Piecewise-polynomial collocation mesh on [0, 1]: n_int uniform subintervals,
/// degree n_base-1 polynomials on uniform base points (endpoints shared between
/// neighbouring subintervals), collocated at n_base-1 Gauss-Legendre nodes.
struct CollocationMesh {
  int n_int = 10;
  int n_base = 5;
  VectorXd base_nodes;     // n_base, local [0, 1]
  VectorXd gauss_nodes;    // n_base-1, local (0, 1)
  VectorXd gauss_weights;  // sum to 1
  MatrixXd L;              // interpolation base -> gauss, (n_base-1) x n_base
  MatrixXd D;              // local derivative base -> gauss, (n_base-1) x n_base

  int n_col() const { return n_base - 1; }
  int n_points() const { return n_int * (n_base - 1) + 1; }

  static CollocationMesh make(int n_int = 10, int n_base = 5);
};

/// Converged collocation solution of a periodic orbit.
struct POSolution {
  CollocationMesh mesh;
  int dim = 0;
  MatrixXd states;  // dim x mesh.n_points(), states at base points
  Real period = 0.0;
  Real omega = 0.0;
  Real eps = 0.0;
  bool autonomous = true;
  VectorXcd multipliers;
  bool stable = false;

  /// Global mesh fractions of the base points.
  VectorXd base_taus() const;
  /// Lagrange evaluation of the orbit at fraction tau in [0, 1] (periodic wrap).
  VectorXd state_at(Real tau) const;
  /// Max-norm collocation residual of the stored solution.
  Real residual(const ParamVectorField& vf) const;
};

struct POSolveOptions {
  Real tol = 1e-10;
  int max_iters = 25;
  Real min_size = 0.0;  // report degenerate orbits below this size
};

/// Newton solve of an autonomous cycle at fixed (omega, eps): unknown states
/// and period, integral phase condition against the guess.
POSolution collocate_po(const ParamVectorField& vf, const MatrixXd& guess_states,
                        Real guess_period, Real omega, Real eps,
                        const CollocationMesh& mesh = CollocationMesh::make(),
                        const POSolveOptions& opts = {});

/// Newton solve of a forced cycle with known period (no phase condition).
POSolution collocate_po_forced(const ParamVectorField& vf, const MatrixXd& guess_states,
                               Real period, Real omega, Real eps,
                               const CollocationMesh& mesh = CollocationMesh::make(),
                               const POSolveOptions& opts = {});

/// Floquet multipliers of the monodromy matrix assembled from the per-interval
/// condensed fundamental solutions of the collocation discretization.
VectorXcd floquet(const POSolution& po, const ParamVectorField& vf);

/// Event functions from the multiplier set. For autonomous cycles the trivial
/// multiplier (closest to +1) is removed first. When n_b > 0 the products run
/// over the n_b multipliers closest to the unit circle.
struct POTestFunctions {
  Real psi_sn = 1.0;
  Real psi_pd = 1.0;
  Real psi_tr = 1.0;
};
POTestFunctions po_test_functions(const VectorXcd& multipliers, bool autonomous, int n_b = 0);

/// L2 deviation of the orbit from its time average (mesh quadrature).
Real po_size(const POSolution& po);

/// Initial cycle guess from a Hopf point: states x_hb + delta Re(w e^{i 2 pi tau}),
/// period 2 pi / omega_s from the crossing pair.
struct HopfSeed {
  MatrixXd states;
  Real period = 0.0;
};
HopfSeed hb_switch(const BranchPoint& hb_event, const MatrixXd& jacobian,
                   const CollocationMesh& mesh = CollocationMesh::make(), Real delta = 1e-3);

/// Robust branch switching at a Hopf point: walks a ladder of parameter
/// offsets and seed amplitudes until the corrector lands on a genuine
/// (non-degenerate) cycle. The zero-amplitude solution also satisfies the
/// collocation system, so plain Newton from a tiny seed may collapse onto it.
POSolution hb_switch_solve(const ParamVectorField& vf, const BranchPoint& hb_event,
                           const MatrixXd& jacobian, Real eps,
                           const CollocationMesh& mesh = CollocationMesh::make(),
                           Real delta = 1e-3);

/// Branch of cycles with attached POSolution data.
struct POBranch {
  Branch branch;                  // points carry the stacked unknown vectors
  std::vector<POSolution> orbits; // one per accepted point
  std::vector<POSolution> event_orbits;
};

enum class ActiveParam { Omega, Eps };

struct POContinuationOptions {
  ContinuationSettings settings;
  ActiveParam active = ActiveParam::Omega;
  Real param_lo = 0.0;
  Real param_hi = 0.0;
  int n_b = 0;
  Real terminate_size = 1e-6;  // stop when the cycle collapses onto an equilibrium
};

/// Pseudo-arclength continuation of autonomous cycles in Omega or eps with
/// SN/PD/TR detection from Floquet multipliers.
POBranch continue_po(const ParamVectorField& vf, const POSolution& seed,
                     const POContinuationOptions& opts);

}  // namespace ssmkit
