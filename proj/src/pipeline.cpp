#include "ssmkit/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ssmkit/matrix_market.hpp"

namespace ssmkit {

namespace {

using Clock = std::chrono::steady_clock;

Real seconds_since(Clock::time_point t0) {
  return std::chrono::duration<Real>(Clock::now() - t0).count();
}

bool has_stage(const PipelineConfig& cfg, const std::string& s) {
  for (const auto& st : cfg.stages)
    if (st == s) return true;
  return false;
}

std::vector<Real> lift_amplitudes(const ReducedModel& rm, const VectorXd& q_eq, Real omega,
                                  Real eps, int n_pt, const std::vector<int>& outputs) {
  const MatrixXd orbit = eq_to_po(rm, q_eq, omega, eps, n_pt);
  std::vector<Real> amps;
  for (int d : outputs) amps.push_back(orbit.row(d).cwiseAbs().maxCoeff());
  return amps;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  const auto& sys = j.at("system");
  if (sys.contains("builder")) {
    c.builder = sys.at("builder").get<std::string>();
    for (const auto& p : sys.at("params")) c.builder_params.push_back(p.get<Real>());
  } else {
    const auto& files = sys.at("files");
    c.file_M = files.at("M").get<std::string>();
    c.file_C = files.at("C").get<std::string>();
    c.file_K = files.at("K").get<std::string>();
    c.file_force = files.at("force").get<std::string>();
  }
  if (j.contains("master")) {
    const auto& m = j["master"];
    if (m.contains("modes")) c.master_modes = m["modes"].get<std::vector<int>>();
    c.tol_rel = m.value("tol_rel", c.tol_rel);
    c.rational_cap = m.value("rational_cap", c.rational_cap);
  }
  c.order = j.value("order", c.order);
  if (j.contains("omega_range")) {
    c.omega_lo = j["omega_range"][0].get<Real>();
    c.omega_hi = j["omega_range"][1].get<Real>();
  }
  c.eps = j.value("eps", c.eps);
  c.omega_ref = j.value("omega_ref", 0.0);
  if (j.contains("stages")) c.stages = j["stages"].get<std::vector<std::string>>();
  if (j.contains("outputs")) c.outputs = j["outputs"].get<std::vector<int>>();
  if (j.contains("lift")) {
    c.n_pt = j["lift"].value("n_pt", c.n_pt);
    c.n_T = j["lift"].value("n_T", c.n_T);
  }
  if (j.contains("torus")) c.n_h = j["torus"].value("n_h", c.n_h);
  if (j.contains("po")) {
    const auto& p = j["po"];
    if (p.contains("mesh")) {
      c.mesh_int = p["mesh"][0].get<int>();
      c.mesh_base = p["mesh"][1].get<int>();
    }
    c.n_b = p.value("n_b", c.n_b);
    c.hopf_delta = p.value("delta_hopf", c.hopf_delta);
    c.terminate_size = p.value("terminate_size", c.terminate_size);
  }
  auto read_cont = [&](const char* key, ContinuationSettings& s) {
    if (!j.contains(key)) return;
    const auto& cj = j[key];
    s.initial_step = cj.value("initial_step", s.initial_step);
    s.min_step = cj.value("min_step", s.min_step);
    s.max_step = cj.value("max_step", s.max_step);
    s.corrector_tol = cj.value("corrector_tol", s.corrector_tol);
    s.max_corrector_iters = cj.value("max_corrector_iters", s.max_corrector_iters);
    s.event_tol = cj.value("event_tol", s.event_tol);
    s.max_points = cj.value("max_points", s.max_points);
  };
  read_cont("continuation", c.cont_eq);
  read_cont("continuation_po", c.cont_po);
  read_cont("continuation_torus", c.cont_tor);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.format = j.value("format", c.format);
  c.threads = j.value("threads", c.threads);
  return c;
}

PolynomialForce force_from_json(const nlohmann::json& j, int n) {
  PolynomialForce f(2 * n, n);
  for (const auto& t : j.at("terms")) {
    std::vector<std::pair<int, int>> factors;
    for (const auto& fac : t.at("factors"))
      factors.emplace_back(fac[0].get<int>(), fac[1].get<int>());
    f.add_term(t.at("coeff").get<Real>(), t.at("output").get<int>(), std::move(factors));
  }
  f.validate();
  return f;
}

nlohmann::json force_to_json(const PolynomialForce& f, const VectorXd& f_ext) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n"] = f.output_dim();
  j["terms"] = nlohmann::json::array();
  for (const auto& t : f.terms()) {
    nlohmann::json jt;
    jt["coeff"] = t.coeff;
    jt["output"] = t.output;
    jt["factors"] = nlohmann::json::array();
    for (const auto& [idx, pw] : t.factors) jt["factors"].push_back({idx, pw});
    j["terms"].push_back(jt);
  }
  j["f_ext"] = std::vector<Real>(f_ext.data(), f_ext.data() + f_ext.size());
  return j;
}

MechSystem load_system(const PipelineConfig& cfg) {
  if (cfg.builder == "coupled_oscillators") {
    const auto& p = cfg.builder_params;
    if (p.size() != 6)
      throw std::invalid_argument("coupled_oscillators builder needs 6 parameters");
    return build_coupled_oscillators(p[0], p[1], p[2], p[3], p[4], p[5]);
  }
  if (cfg.builder == "bernoulli_beam") {
    const auto& p = cfg.builder_params;
    if (p.size() != 5)
      throw std::invalid_argument("bernoulli_beam builder needs 5 parameters");
    return build_bernoulli_beam(static_cast<int>(p[0]), p[1], p[2], p[3], p[4]);
  }
  if (!cfg.builder.empty())
    throw std::invalid_argument("unknown builder: " + cfg.builder);

  MechSystem m;
  m.M = read_matrix_market(cfg.file_M);
  m.C = read_matrix_market(cfg.file_C);
  m.K = read_matrix_market(cfg.file_K);
  m.n = static_cast<int>(m.M.rows());
  const nlohmann::json fj = nlohmann::json::parse(read_text_file(cfg.file_force));
  m.f_nl = force_from_json(fj, m.n);
  const auto fe = fj.at("f_ext").get<std::vector<Real>>();
  m.f_ext = Eigen::Map<const VectorXd>(fe.data(), fe.size());
  m.validate();
  return m;
}

PipelineResult run_frc(const PipelineConfig& cfg) {
  if (!(cfg.omega_lo > 0 && cfg.omega_hi > cfg.omega_lo))
    throw std::invalid_argument("run_frc: invalid Omega window");
  PipelineResult res;
  nlohmann::json timing;
  const auto t_start = Clock::now();

  const MechSystem mech = load_system(cfg);
  res.sys = assemble_first_order(mech);

  // spectral analysis and the one-time autonomous expansion
  auto t0 = Clock::now();
  const int want = std::min(res.sys.N, 2 * static_cast<int>(cfg.master_modes.size()) + 8);
  const Spectrum sp = eig_pair(res.sys, want);
  const Real om_ref = cfg.omega_ref > 0 ? cfg.omega_ref : 0.5 * (cfg.omega_lo + cfg.omega_hi);
  const MasterSubspace master =
      select_master(sp, cfg.master_modes, std::max(cfg.order, 2), om_ref, cfg.tol_rel,
                    cfg.rational_cap);
  res.rm = expand_autonomous(res.sys, master, cfg.order);
  timing["autonomous_ssm"] = seconds_since(t0);

  Real t_reduced = 0.0, t_nonauto = 0.0, t_lift = 0.0;
  const Real rd = res.rm.master.r_d.value();

  const bool need_po = has_stage(cfg, "po") || has_stage(cfg, "torus2") ||
                       has_stage(cfg, "torus3") || has_stage(cfg, "verify");

  // ---- equilibrium FRC ----
  if (has_stage(cfg, "equilibrium") || need_po) {
    t0 = Clock::now();
    res.eq_branch = continue_equilibria(res.rm, cfg.omega_lo, cfg.omega_hi, cfg.eps, cfg.cont_eq);
    t_reduced += seconds_since(t0);

    t0 = Clock::now();
    for (const auto& p : res.eq_branch.points) res.rm.nonautonomous(p.omega);
    t_nonauto += seconds_since(t0);

    t0 = Clock::now();
    FRCDataset ds;
    ds.stage = "equilibrium";
    for (int d : cfg.outputs) ds.amp_names.push_back("amp_" + std::to_string(d));
    auto add_row = [&](const BranchPoint& p, const std::string& event) {
      FRCRow r;
      r.omega = p.omega;
      r.eps = p.eps;
      r.Ts = 2.0 * kPi / (rd * p.omega);
      r.amps = lift_amplitudes(res.rm, p.state.head(res.rm.dim()), p.omega, p.eps, cfg.n_pt,
                               cfg.outputs);
      r.stable = p.stable;
      r.event = event;
      return r;
    };
    for (const auto& p : res.eq_branch.points) ds.rows.push_back(add_row(p, ""));
    for (const auto& e : res.eq_branch.events) {
      FRCRow r = add_row(e.solution, to_string(e.type));
      ds.rows.push_back(std::move(r));
    }
    t_lift += seconds_since(t0);
    res.datasets["equilibrium"] = std::move(ds);
  }

  // ---- reduced limit cycles (physical 2-tori) ----
  if (need_po) {
    const ParamVectorField vf = rom_vector_field(res.rm);
    const CollocationMesh mesh = CollocationMesh::make(cfg.mesh_int, cfg.mesh_base);
    std::vector<const BranchEvent*> hbs;
    for (const auto& e : res.eq_branch.events)
      if (e.type == EventType::HB) hbs.push_back(&e);
    if (hbs.empty() && (has_stage(cfg, "po")))
      throw std::runtime_error("run_frc: po stage requested but no HB event was found");

    if (!hbs.empty()) {
      t0 = Clock::now();
      // seed at the first HB and continue in both directions
      const BranchEvent& hb = *hbs.front();
      const MatrixXd J =
          cartesian_jacobian(res.rm, hb.solution.state.head(res.rm.dim()), hb.solution.omega,
                             cfg.eps);
      const POSolution po_seed = hb_switch_solve(vf, hb.solution, J, cfg.eps, mesh, cfg.hopf_delta);

      POContinuationOptions popts;
      popts.settings = cfg.cont_po;
      popts.active = ActiveParam::Omega;
      popts.param_lo = cfg.omega_lo;
      popts.param_hi = cfg.omega_hi;
      popts.n_b = cfg.n_b;
      popts.terminate_size = cfg.terminate_size;
      popts.settings.initial_direction = +1;
      POBranch fwd = continue_po(vf, po_seed, popts);
      popts.settings.initial_direction = -1;
      POBranch bwd = continue_po(vf, po_seed, popts);
      t_reduced += seconds_since(t0);

      // merge: reversed backward run, then forward
      POBranch merged;
      merged.branch.kind = BranchKind::PeriodicOrbit;
      merged.branch.status = fwd.branch.status;
      for (auto it = bwd.orbits.rbegin(); it != bwd.orbits.rend(); ++it)
        merged.orbits.push_back(*it);
      for (auto it = bwd.branch.points.rbegin(); it != bwd.branch.points.rend(); ++it)
        merged.branch.points.push_back(*it);
      const int offset = static_cast<int>(merged.branch.points.size());
      for (auto& e : bwd.branch.events) merged.branch.events.push_back(e);
      for (auto& po : bwd.event_orbits) merged.event_orbits.push_back(po);
      for (std::size_t i = 1; i < fwd.orbits.size(); ++i) {
        merged.orbits.push_back(fwd.orbits[i]);
        merged.branch.points.push_back(fwd.branch.points[i]);
      }
      for (auto& e : fwd.branch.events) {
        e.interval_lo += offset;
        e.interval_hi += offset;
        merged.branch.events.push_back(e);
      }
      for (auto& po : fwd.event_orbits) merged.event_orbits.push_back(po);
      res.po_branches.push_back(std::move(merged));

      t0 = Clock::now();
      for (const auto& p : res.po_branches[0].branch.points) res.rm.nonautonomous(p.omega);
      t_nonauto += seconds_since(t0);

      if (has_stage(cfg, "po")) {
        t0 = Clock::now();
        FRCDataset ds;
        ds.stage = "po";
        for (int d : cfg.outputs) ds.amp_names.push_back("amp_" + std::to_string(d));
        auto add_row = [&](const POSolution& po, const BranchPoint& bp, const std::string& ev) {
          FRCRow r;
          r.omega = bp.omega;
          r.eps = bp.eps;
          r.Ts = bp.period;
          r.om_s = 2.0 * kPi / bp.period;
          const RotationClass rc = classify_rotation(bp.period, bp.omega, res.rm.master.r_d);
          r.rho_rot = rc.rho;
          const PhysicalTorus tor = po_to_torus2(res.rm, po, cfg.n_pt);
          for (int d : cfg.outputs) r.amps.push_back(amplitude_inf(tor, d));
          r.stable = bp.stable;
          r.event = ev;
          return r;
        };
        const auto& br = res.po_branches[0];
        for (std::size_t i = 0; i < br.orbits.size(); ++i)
          ds.rows.push_back(add_row(br.orbits[i], br.branch.points[i], ""));
        for (std::size_t i = 0; i < br.event_orbits.size(); ++i) {
          BranchPoint bp;
          const auto& e = br.branch.events[i];
          bp.omega = e.solution.omega;
          bp.eps = e.solution.eps;
          bp.period = e.solution.period;
          bp.stable = e.solution.stable;
          ds.rows.push_back(add_row(br.event_orbits[i], bp, to_string(e.type)));
        }
        t_lift += seconds_since(t0);
        res.datasets["po"] = std::move(ds);
      }
    }
  }

  // ---- reduced 2-tori (physical 3-tori) ----
  if (has_stage(cfg, "torus2") || has_stage(cfg, "torus3")) {
    const ParamVectorField vf = rom_vector_field(res.rm);
    const POSolution* tr_po = nullptr;
    for (std::size_t b = 0; b < res.po_branches.size() && !tr_po; ++b)
      for (std::size_t i = 0; i < res.po_branches[b].branch.events.size(); ++i)
        if (res.po_branches[b].branch.events[i].type == EventType::TR) {
          tr_po = &res.po_branches[b].event_orbits[i];
          break;
        }
    if (!tr_po)
      throw std::runtime_error("run_frc: torus2 stage requested but no TR event was found");

    t0 = Clock::now();
    const TrSwitchResult sw = tr_switch(*tr_po, vf, cfg.n_h);
    if (sw.strong_resonance)
      std::cerr << "run_frc: TR switch near a strong resonance, alpha = " << sw.alpha << "\n";
    TorusContinuationOptions topts;
    topts.settings = cfg.cont_tor;
    topts.active = ActiveParam::Omega;
    topts.param_lo = cfg.omega_lo;
    topts.param_hi = cfg.omega_hi;
    topts.mode = RhoMode::Free;
    TorusBranch tb = continue_torus(vf, sw.seed, topts);
    t_reduced += seconds_since(t0);
    res.tor_branches.push_back(std::move(tb));

    FRCDataset ds;
    ds.stage = "torus2";
    for (int d : cfg.outputs) ds.amp_names.push_back("amp_" + std::to_string(d));
    t0 = Clock::now();
    for (std::size_t i = 0; i < res.tor_branches[0].tori.size(); ++i) {
      const TorusSolution& t = res.tor_branches[0].tori[i];
      FRCRow r;
      r.omega = t.omega;
      r.eps = t.eps;
      r.Ts = t.T2;
      r.om1s = t.omega1();
      r.om2s = t.omega2();
      r.rho_rot = t.rho;
      r.stable = t.stable;
      // amplitude from the reduced torus through the lifted 3-torus samples
      const PhysicalTorus t3 = torus2_to_torus3(res.rm, t, cfg.n_T);
      for (int d : cfg.outputs) r.amps.push_back(amplitude_inf(t3, d));
      if (has_stage(cfg, "torus3")) res.tori3.push_back(t3);
      ds.rows.push_back(std::move(r));
    }
    t_lift += seconds_since(t0);
    res.datasets["torus2"] = std::move(ds);

    if (has_stage(cfg, "torus3") && !res.tori3.empty()) {
      FRCDataset d3;
      d3.stage = "torus3";
      for (int d : cfg.outputs) d3.amp_names.push_back("amp_" + std::to_string(d));
      for (const auto& t3 : res.tori3) {
        FRCRow r;
        r.omega = t3.omega;
        r.eps = t3.eps;
        r.om1s = t3.omega1_s;
        r.om2s = t3.omega2_s;
        r.rho_rot = t3.omega2_s > 0 ? t3.omega1_s / t3.omega2_s : 0.0;
        r.stable = t3.stable;
        for (int d : cfg.outputs) r.amps.push_back(amplitude_inf(t3, d));
        d3.rows.push_back(std::move(r));
      }
      res.datasets["torus3"] = std::move(d3);
    }
  }

  // ---- verification of sampled lifted tori ----
  if (has_stage(cfg, "verify") && !res.po_branches.empty()) {
    const auto& br = res.po_branches[0];
    const POSolution* stable_po = nullptr;
    const POSolution* unstable_po = nullptr;
    for (std::size_t i = 0; i < br.orbits.size(); ++i) {
      if (br.orbits[i].stable && !stable_po) stable_po = &br.orbits[i];
      if (!br.orbits[i].stable && !unstable_po) unstable_po = &br.orbits[i];
    }
    for (const POSolution* po : {stable_po, unstable_po}) {
      if (!po) continue;
      const PhysicalTorus tor = po_to_torus2(res.rm, *po, cfg.n_pt);
      res.reports.push_back(verify_torus(tor, mech, po->multipliers, cfg.outputs.front()));
    }
  }

  timing["reduced_dynamics"] = t_reduced;
  timing["nonautonomous_ssm"] = t_nonauto;
  timing["lift_evaluation"] = t_lift;
  const Real total = seconds_since(t_start);
  timing["other"] = total - (timing["autonomous_ssm"].get<Real>() + t_reduced + t_nonauto + t_lift);
  timing["total_wall"] = total;
  res.timings = timing;
  for (auto& [name, ds] : res.datasets) {
    ds.metadata["order"] = cfg.order;
    ds.metadata["eps"] = cfg.eps;
    ds.metadata["omega_range"] = {cfg.omega_lo, cfg.omega_hi};
    ds.metadata["tol_rel"] = cfg.tol_rel;
    ds.metadata["rational_cap"] = cfg.rational_cap;
    ds.metadata["normalization"] = res.rm.normalization;
    ds.metadata["r"] = nlohmann::json::array();
    for (const auto& ri : res.rm.master.r) ds.metadata["r"].push_back(ri.str());
    ds.metadata["r_d"] = res.rm.master.r_d.str();
    ds.metadata["mesh"] = {cfg.mesh_int, cfg.mesh_base};
    ds.metadata["n_h"] = cfg.n_h;
    ds.metadata["n_pt"] = cfg.n_pt;
    ds.metadata["continuation"] = {{"initial_step", cfg.cont_eq.initial_step},
                                   {"max_step", cfg.cont_eq.max_step},
                                   {"corrector_tol", cfg.cont_eq.corrector_tol},
                                   {"event_tol", cfg.cont_eq.event_tol}};
    ds.metadata["timings"] = timing;
  }
  return res;
}

void export_results(const PipelineConfig& cfg, const PipelineResult& res) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  for (const auto& [name, ds] : res.datasets) {
    if (cfg.format == "csv")
      write_text_file(cfg.out_dir + "/" + name + ".csv", ds.to_csv());
    else
      write_text_file(cfg.out_dir + "/" + name + ".json", ds.to_json().dump(2));
  }
  // torus trajectory dumps: one file per lifted 3-torus
  for (std::size_t i = 0; i < res.tori3.size(); ++i) {
    std::ostringstream name;
    name << cfg.out_dir << "/torus3_" << i << ".csv";
    std::ostringstream out;
    const auto& t = res.tori3[i];
    out << std::setprecision(17);
    out << "# Omega " << t.omega << " eps " << t.eps << " om1s " << t.omega1_s << " om2s "
        << t.omega2_s << " trajectories " << t.trajectories.size() << "\n";
    for (std::size_t s = 0; s < t.trajectories.size(); ++s) {
      out << "# trajectory " << s << "\n";
      const auto& tr = t.trajectories[s];
      for (Eigen::Index c = 0; c < tr.cols(); ++c) {
        out << t.times[c];
        for (Eigen::Index r = 0; r < tr.rows(); ++r) out << "," << tr(r, c);
        out << "\n";
      }
    }
    write_text_file(name.str(), out.str());
  }
  for (std::size_t i = 0; i < res.reports.size(); ++i) {
    const auto& rep = res.reports[i];
    nlohmann::json j;
    j["verdict"] = rep.verdict == TorusVerdict::OnTorus        ? "on-torus"
                   : rep.verdict == TorusVerdict::ConvergedNearby ? "converged-nearby"
                                                                  : "diverged";
    j["max_distance"] = rep.max_distance;
    j["circle_diameter"] = rep.circle_diameter;
    j["threshold"] = rep.threshold;
    j["steady_amplitude"] = rep.steady_amplitude;
    j["M"] = rep.M;
    j["t_f"] = rep.t_f;
    j["metric"] = rep.metric;
    write_text_file(cfg.out_dir + "/verify_" + std::to_string(i) + ".json", j.dump(2));
  }
  write_text_file(cfg.out_dir + "/timings.json", res.timings.dump(2));
}

}  // namespace ssmkit
