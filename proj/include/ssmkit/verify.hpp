#pragma once

#include <string>

#include "ssmkit/lift.hpp"
#include "ssmkit/model.hpp"

namespace ssmkit {

/// Implicit Newmark trajectory of the full second-order model. Columns are
/// z = (x, x') samples including the initial state; fixed step
/// 2 pi / (steps_per_cycle * Omega), gamma = 0.5 + alpha, beta = (1+alpha)^2/4.
MatrixXd newmark_integrate(const MechSystem& mech, const VectorXd& z0, Real omega, Real eps,
                           int steps_per_cycle, int n_cycles, Real alpha = 0.005);

/// Horizon selection for steady-state verification:
/// M = min(ceil(log Delta / log |mult_max|), M_bar) clamped to >= 1,
/// t_f = M * ceil(1 / rho_s) * 2 pi / Omega.
struct FinalTime {
  Real t_f = 0.0;
  int M = 1;
  bool unstable_note = false;  // |mult_max| >= 1: capped at M_bar
};
FinalTime select_tf(Real rho_s, const VectorXcd& multipliers, Real delta, int M_bar, Real omega);

/// Maximal Lyapunov exponent of a cycle: ln(max |nontrivial multiplier|) / T_s.
Real mle(const VectorXcd& multipliers, Real T_s);

enum class TorusVerdict { OnTorus, ConvergedNearby, Diverged };

struct VerifySettings {
  int steps_per_cycle = 1000;
  Real newmark_alpha = 0.005;
  Real delta = 0.001;
  int M_bar = 200;
  int fixed_cycles = 0;       // > 0 overrides select_tf (the M = 1 style fallback)
  Real tube_fraction = 0.02;  // distance threshold as a fraction of circle diameter
};

struct SimReport {
  MatrixXd trajectory;       // sampled z over the run
  VectorXd section_times;
  MatrixXd section_points;   // period-2pi/Omega section samples in the steady window
  Real steady_amplitude = 0.0;
  Real max_distance = 0.0;   // to the predicted invariant circle
  Real circle_diameter = 0.0;
  Real threshold = 0.0;
  int M = 1;
  Real t_f = 0.0;
  TorusVerdict verdict = TorusVerdict::Diverged;
  std::string metric = "nearest neighbour to the predicted circle polyline";
};

/// Integrates the full system from a point of the predicted torus and checks
/// whether the period-map section stays inside the declared tube around the
/// predicted invariant circle over the steady window (final 1/M of the run).
SimReport verify_torus(const PhysicalTorus& torus, const MechSystem& mech,
                       const VectorXcd& cycle_multipliers, int output_index,
                       const VerifySettings& settings = {});

}  // namespace ssmkit
