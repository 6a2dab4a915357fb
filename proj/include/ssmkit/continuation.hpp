#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ssmkit/rom.hpp"
#include "ssmkit/vector_field.hpp"

namespace ssmkit {

enum class EventType { SN, HB, PD, TR, BP };
enum class BranchKind { Equilibrium, PeriodicOrbit, Torus2, EventCurve };
enum class BranchStatus { WindowExit, StepUnderflow, PointBudget, Closed, SeedFailure, Collapsed };

std::string to_string(EventType t);

/// One accepted solution along a branch. `state` is problem specific: the
/// equilibrium state, the full collocation vector of a cycle, or the stacked
/// torus unknowns. Period/size/multiplier slots are filled where they apply.
struct BranchPoint {
  VectorXd state;
  Real omega = 0.0;
  Real eps = 0.0;
  Real period = 0.0;       // physical period (equilibria) or T_s (cycles)
  Real size = 0.0;
  bool stable = false;
  VectorXcd eig;           // Jacobian eigenvalues or Floquet multipliers
};

struct BranchEvent {
  EventType type;
  int interval_lo = 0;  // event bracketed between points [lo, lo+1]
  int interval_hi = 0;
  BranchPoint solution;  // localized
};

struct Branch {
  BranchKind kind = BranchKind::Equilibrium;
  std::vector<BranchPoint> points;
  std::vector<BranchEvent> events;
  BranchStatus status = BranchStatus::WindowExit;
};

struct ContinuationSettings {
  Real initial_step = 0.01;
  Real min_step = 1e-8;
  Real max_step = 0.05;
  Real corrector_tol = 1e-9;
  int max_corrector_iters = 12;
  Real event_tol = 1e-10;
  int max_points = 5000;
  // initial tangent orientation along the final (parameter) coordinate
  int initial_direction = +1;

  void validate() const;
};

/// Zero problem F(y) = 0 with one more unknown than equations; jac is the
/// (n-1) x n extended Jacobian. Test functions are evaluated per accepted
/// point; a sign change triggers bisection in arclength.
struct ZeroProblem {
  int dim = 0;  // unknowns including the active parameter(s)
  std::function<VectorXd(const VectorXd&)> residual;
  std::function<MatrixXd(const VectorXd&)> jacobian;
  std::function<std::vector<Real>(const VectorXd&)> test_functions;  // optional
  std::vector<EventType> event_types;                                // one per test function
  /// Genuine-event filter evaluated at a localized zero (e.g. rejects neutral
  /// saddles for HB). Defaults to accepting.
  std::function<bool(const VectorXd&, int which)> event_filter;
  /// Stop predicate on the current point (window exit).
  std::function<bool(const VectorXd&)> out_of_window;
};

/// Pseudo-arclength predictor-corrector with tangent orientation retention,
/// bisection event localization, and closed-branch detection.
Branch continue_branch(const ZeroProblem& zp, const VectorXd& seed,
                       const ContinuationSettings& settings);

/// Equilibrium test functions from the Jacobian spectrum:
/// psi_SN = det(J), psi_HB = prod_{i<j} (mu_i + mu_j).
std::pair<Real, Real> eq_test_functions(const MatrixXd& J);

/// FRC branch of reduced-model equilibria over an Omega window at fixed eps,
/// with SN/HB detection and the lifted period T = 2 pi / (r_d Omega) attached.
Branch continue_equilibria(const ReducedModel& rm, Real omega_lo, Real omega_hi, Real eps,
                           const ContinuationSettings& settings = {});

/// Codimension-1 event curve (SN or HB of equilibria) in the (Omega, eps) plane,
/// seeded at a localized event from continue_equilibria.
Branch continue_codim1(const ReducedModel& rm, EventType type, Real omega_lo, Real omega_hi,
                       Real eps_lo, Real eps_hi, const BranchPoint& seed_event,
                       const ContinuationSettings& settings = {});

/// Generic variant over any autonomous parameterized field (x, Omega, eps).
Branch continue_codim1_vf(const ParamVectorField& vf, EventType type, Real omega_lo,
                          Real omega_hi, Real eps_lo, Real eps_hi, const VectorXd& x_seed,
                          Real omega_seed, Real eps_seed,
                          const ContinuationSettings& settings = {});

/// Newton solve of the reduced equilibrium at fixed (Omega, eps), seeded from
/// the linearized response when no seed is given.
VectorXd solve_equilibrium(const ReducedModel& rm, Real omega, Real eps,
                           const VectorXd* seed = nullptr, Real tol = 1e-12);

}  // namespace ssmkit
