#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssmkit/dataset.hpp"
#include "ssmkit/verify.hpp"

namespace ssmkit {

/// One JSON document drives the whole batch run; CLI flags override scalars.
struct PipelineConfig {
  // system source: a named builder with parameters, or Matrix Market files
  std::string builder;                 // "coupled_oscillators" | "bernoulli_beam" | ""
  std::vector<Real> builder_params;
  std::string file_M, file_C, file_K, file_force;

  std::vector<int> master_modes = {0, 1};
  int order = 3;
  Real tol_rel = 0.05;
  int rational_cap = 10;
  Real omega_ref = 0.0;  // 0: midpoint of the Omega window

  Real omega_lo = 0.0, omega_hi = 0.0;
  Real eps = 0.0;
  std::vector<std::string> stages = {"equilibrium"};
  std::vector<int> outputs = {0};

  int n_pt = 128;
  int n_T = 10;
  int n_h = 10;
  int mesh_int = 10, mesh_base = 5;
  int n_b = 0;
  Real hopf_delta = 1e-3;
  Real terminate_size = 1e-6;

  ContinuationSettings cont_eq{0.004, 1e-8, 0.004, 1e-9, 12, 1e-10, 8000, +1};
  ContinuationSettings cont_po{0.02, 1e-8, 0.1, 1e-9, 12, 1e-10, 3000, +1};
  ContinuationSettings cont_tor{0.02, 1e-8, 0.1, 1e-8, 14, 1e-10, 400, +1};

  std::string out_dir = "out";
  std::string format = "csv";
  int threads = 1;

  static PipelineConfig from_json(const nlohmann::json& j);
};

MechSystem load_system(const PipelineConfig& cfg);
PolynomialForce force_from_json(const nlohmann::json& j, int n);
nlohmann::json force_to_json(const PolynomialForce& f, const VectorXd& f_ext);

struct PipelineResult {
  FirstOrderSystem sys;
  ReducedModel rm;
  std::map<std::string, FRCDataset> datasets;
  std::vector<SimReport> reports;
  // occurred stages in order, with wall seconds per cost part
  nlohmann::json timings;
  Branch eq_branch;
  std::vector<POBranch> po_branches;
  std::vector<TorusBranch> tor_branches;
  std::vector<PhysicalTorus> tori3;
};

/// Executes the requested stages: eig -> reduce -> frc stages -> lift -> verify.
/// The autonomous expansion is computed once and shared; HB events seed the po
/// stage, TR events seed the torus2 stage.
PipelineResult run_frc(const PipelineConfig& cfg);

/// Writes every dataset (and reports) under cfg.out_dir in the selected format.
void export_results(const PipelineConfig& cfg, const PipelineResult& res);

}  // namespace ssmkit
