#include <CLI11.hpp>
#include <iostream>

#include "ssmkit/pipeline.hpp"

using namespace ssmkit;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string stage;
  int order = 0;
  std::string omega_range;
  double eps = -1.0;
  std::string out_dir;
  std::string format;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool require_config = true) {
  auto* opt = cmd->add_option("--config", f.config_path, "JSON configuration file");
  if (require_config) opt->required();
  cmd->add_option("--stage", f.stage, "override the stage list with a single stage");
  cmd->add_option("--order", f.order, "SSM expansion order");
  cmd->add_option("--omega-range", f.omega_range, "Omega window as A:B");
  cmd->add_option("--eps", f.eps, "forcing amplitude epsilon");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", f.threads, "worker threads for lifting");
}

PipelineConfig make_config(const CommonFlags& f) {
  PipelineConfig cfg = PipelineConfig::from_json(nlohmann::json::parse(read_text_file(f.config_path)));
  if (!f.stage.empty()) cfg.stages = {f.stage};
  if (f.order > 0) cfg.order = f.order;
  if (!f.omega_range.empty()) {
    const auto pos = f.omega_range.find(':');
    if (pos == std::string::npos) throw std::runtime_error("--omega-range expects A:B");
    cfg.omega_lo = std::stod(f.omega_range.substr(0, pos));
    cfg.omega_hi = std::stod(f.omega_range.substr(pos + 1));
  }
  if (f.eps >= 0) cfg.eps = f.eps;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.format.empty()) cfg.format = f.format;
  if (f.threads > 0) cfg.threads = f.threads;
  return cfg;
}

int run_stages(const CommonFlags& flags, const std::vector<std::string>& stages) {
  PipelineConfig cfg = make_config(flags);
  if (!stages.empty()) cfg.stages = stages;
  const PipelineResult res = run_frc(cfg);
  export_results(cfg, res);
  for (const auto& [name, ds] : res.datasets) {
    int events = 0;
    for (const auto& r : ds.rows)
      if (!r.event.empty()) ++events;
    std::cout << name << ": " << ds.rows.size() << " rows, " << events << " event rows -> "
              << cfg.out_dir << "/" << name << "." << cfg.format << "\n";
  }
  for (std::size_t i = 0; i < res.reports.size(); ++i) {
    const auto& rep = res.reports[i];
    std::cout << "verify[" << i << "]: "
              << (rep.verdict == TorusVerdict::OnTorus        ? "on-torus"
                  : rep.verdict == TorusVerdict::ConvergedNearby ? "converged-nearby"
                                                                 : "diverged")
              << " (max distance " << rep.max_distance << ", threshold " << rep.threshold
              << ")\n";
  }
  std::cout << "timings: " << res.timings.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-submanifold reduction toolkit for forced mechanical systems"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* eig = app.add_subcommand("eig", "eigenanalysis and resonance report");
  add_common(eig, flags);
  auto* reduce = app.add_subcommand("reduce", "compute and export the reduced model");
  add_common(reduce, flags);
  auto* frc_eq = app.add_subcommand("frc-eq", "equilibrium FRC (periodic response)");
  add_common(frc_eq, flags);
  auto* frc_po = app.add_subcommand("frc-po", "limit-cycle FRC (quasi-periodic response)");
  add_common(frc_po, flags);
  auto* frc_tor = app.add_subcommand("frc-tor", "2-torus FRC of the reduced model");
  add_common(frc_tor, flags);
  auto* lift = app.add_subcommand("lift", "lift reduced 2-tori to physical 3-tori");
  add_common(lift, flags);
  auto* verify = app.add_subcommand("verify", "direct-integration verification of lifted tori");
  add_common(verify, flags);
  auto* all = app.add_subcommand("all", "run every stage listed in the config");
  add_common(all, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (eig->parsed()) {
      PipelineConfig cfg = make_config(flags);
      const MechSystem mech = load_system(cfg);
      const FirstOrderSystem sys = assemble_first_order(mech);
      const Spectrum sp = eig_pair(sys, std::min(sys.N, 12));
      std::cout << "eigenvalues (|Im| ascending):\n";
      for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i)
        std::cout << "  " << sp.eigenvalues[i].real() << (sp.eigenvalues[i].imag() >= 0 ? "+" : "-")
                  << std::abs(sp.eigenvalues[i].imag()) << "i\n";
      const Real om_ref = cfg.omega_ref > 0 ? cfg.omega_ref : 0.5 * (cfg.omega_lo + cfg.omega_hi);
      const MasterSubspace ms =
          select_master(sp, cfg.master_modes, std::max(cfg.order, 2), om_ref, cfg.tol_rel,
                        cfg.rational_cap);
      std::cout << "master modes:";
      for (int i = 0; i < ms.m; ++i)
        std::cout << " " << ms.lambda[i].real() << "+" << ms.lambda[i].imag() << "i (r="
                  << ms.r[i].str() << ", |R_i|=" << ms.R[i].size() << ")";
      std::cout << "\nr_d = " << ms.r_d.str() << "\n";
      const auto rep = check_nonresonance(sp, ms.lambda);
      std::cout << "spectral quotient Sigma = " << rep.sigma << ", non-resonance checked to order "
                << rep.checked_order << ": " << (rep.satisfied() ? "ok" : "violations found")
                << "\n";
      return 0;
    }
    if (reduce->parsed()) {
      PipelineConfig cfg = make_config(flags);
      const MechSystem mech = load_system(cfg);
      const FirstOrderSystem sys = assemble_first_order(mech);
      const Spectrum sp = eig_pair(sys, std::min(sys.N, 12));
      const Real om_ref = cfg.omega_ref > 0 ? cfg.omega_ref : 0.5 * (cfg.omega_lo + cfg.omega_hi);
      const MasterSubspace ms =
          select_master(sp, cfg.master_modes, std::max(cfg.order, 2), om_ref, cfg.tol_rel,
                        cfg.rational_cap);
      const ReducedModel rm = expand_autonomous(sys, ms, cfg.order);
      std::filesystem::create_directories(cfg.out_dir);
      write_text_file(cfg.out_dir + "/reduced_model.json", reduced_model_to_json(rm));
      std::cout << "order-" << cfg.order << " reduced model: " << rm.W.size()
                << " expansion coefficients, invariance residual " << invariance_residual(rm)
                << " -> " << cfg.out_dir << "/reduced_model.json\n";
      return 0;
    }
    if (frc_eq->parsed()) return run_stages(flags, {"equilibrium"});
    if (frc_po->parsed()) return run_stages(flags, {"equilibrium", "po"});
    if (frc_tor->parsed()) return run_stages(flags, {"equilibrium", "po", "torus2"});
    if (lift->parsed()) return run_stages(flags, {"equilibrium", "po", "torus2", "torus3"});
    if (verify->parsed()) return run_stages(flags, {"equilibrium", "po", "verify"});
    if (all->parsed()) return run_stages(flags, {});
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
