#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "ssmkit/dataset.hpp"
#include "ssmkit/matrix_market.hpp"
#include "ssmkit/pipeline.hpp"

using namespace ssmkit;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Io, MatrixMarketArrayRoundTrip) {
  MatrixXd m(3, 2);
  m << 1.5, -2.25, 0.0, 3.125, 1e-8, 7.0;
  const std::string path = tmp_path("ssmkit_mm_array.mtx");
  write_matrix_market(path, m);
  const MatrixXd r = read_matrix_market(path);
  EXPECT_LT((m - r).norm(), 1e-15);
  std::remove(path.c_str());
}

TEST(Io, MatrixMarketCoordinateSymmetric) {
  const std::string path = tmp_path("ssmkit_mm_coord.mtx");
  write_text_file(path,
                  "%%MatrixMarket matrix coordinate real symmetric\n"
                  "% comment line\n"
                  "3 3 4\n"
                  "1 1 2.0\n"
                  "2 1 -1.0\n"
                  "2 2 2.0\n"
                  "3 3 1.0\n");
  const MatrixXd m = read_matrix_market(path);
  EXPECT_NEAR(m(0, 1), -1.0, 1e-15);
  EXPECT_NEAR(m(1, 0), -1.0, 1e-15);
  EXPECT_NEAR(m(2, 2), 1.0, 1e-15);
  std::remove(path.c_str());
}

TEST(Io, ForceJsonRoundTrip) {
  PolynomialForce f(4, 2);
  f.add_term(0.3, 0, {{0, 1}, {1, 1}});
  f.add_term(1.0, 1, {{0, 2}});
  VectorXd fe(2);
  fe << 1.0, 0.0;
  const nlohmann::json j = force_to_json(f, fe);
  const PolynomialForce f2 = force_from_json(j, 2);
  ASSERT_EQ(f2.terms().size(), f.terms().size());
  VectorXd z(4);
  z << 0.7, -0.3, 0.1, 0.2;
  EXPECT_LT((f.eval(z) - f2.eval(z)).norm(), 1e-15);
}

TEST(Io, DatasetCsvRoundTripLossless) {
  FRCDataset ds;
  ds.stage = "equilibrium";
  ds.amp_names = {"amp_0", "amp_1"};
  for (int k = 0; k < 5; ++k) {
    FRCRow r;
    r.omega = 0.7 + 0.1 * k;
    r.eps = 0.01;
    r.Ts = 2 * kPi / r.omega;
    r.om_s = 0.031 * (k + 1);
    r.rho_rot = r.om_s / r.omega;
    r.amps = {0.123456789012345 * (k + 1), 1e-9 * (k + 1)};
    r.stable = (k % 2 == 0);
    r.event = (k == 2) ? "HB" : "";
    ds.rows.push_back(r);
  }
  const FRCDataset back = FRCDataset::from_csv(ds.to_csv());
  ASSERT_EQ(back.rows.size(), ds.rows.size());
  ASSERT_EQ(back.amp_names, ds.amp_names);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].omega, ds.rows[i].omega);  // bit-exact via %.17g
    EXPECT_EQ(back.rows[i].amps, ds.rows[i].amps);
    EXPECT_EQ(back.rows[i].stable, ds.rows[i].stable);
    EXPECT_EQ(back.rows[i].event, ds.rows[i].event);
  }
}

TEST(Io, SystemLoadFromFiles) {
  // write the coupled-oscillator system to files, reload, compare spectra
  const auto mech = build_coupled_oscillators(0.005, 0.01, 0.3, 1.0, 2.0, 0.0);
  const std::string dir = tmp_path("ssmkit_sysload");
  std::filesystem::create_directories(dir);
  write_matrix_market(dir + "/M.mtx", mech.M);
  write_matrix_market(dir + "/C.mtx", mech.C);
  write_matrix_market(dir + "/K.mtx", mech.K);
  write_text_file(dir + "/force.json", force_to_json(mech.f_nl, mech.f_ext).dump());

  PipelineConfig cfg;
  cfg.file_M = dir + "/M.mtx";
  cfg.file_C = dir + "/C.mtx";
  cfg.file_K = dir + "/K.mtx";
  cfg.file_force = dir + "/force.json";
  const MechSystem loaded = load_system(cfg);
  EXPECT_LT((loaded.K - mech.K).norm(), 1e-14);
  EXPECT_LT((loaded.f_ext - mech.f_ext).norm(), 1e-14);
  VectorXd z(4);
  z << 0.3, -0.2, 0.0, 0.0;
  EXPECT_LT((loaded.f_nl.eval(z) - mech.f_nl.eval(z)).norm(), 1e-15);
  std::filesystem::remove_all(dir);
}

TEST(Io, PipelineDeterminismAndMetadata) {
  nlohmann::json j = {
      {"system",
       {{"builder", "coupled_oscillators"}, {"params", {0.005, 0.01, 0.3, 1.0, 2.0, 0.0}}}},
      {"master", {{"modes", {0, 1}}}},
      {"order", 3},
      {"omega_range", {0.9, 1.05}},
      {"eps", 0.01},
      {"stages", {"equilibrium"}},
      {"outputs", {0, 1}},
      {"lift", {{"n_pt", 32}}},
  };
  const PipelineConfig cfg = PipelineConfig::from_json(j);
  const PipelineResult a = run_frc(cfg);
  const PipelineResult b = run_frc(cfg);
  ASSERT_TRUE(a.datasets.count("equilibrium"));
  EXPECT_EQ(a.datasets.at("equilibrium").to_csv(), b.datasets.at("equilibrium").to_csv());

  const auto& ds = a.datasets.at("equilibrium");
  EXPECT_EQ(ds.metadata.at("order").get<int>(), 3);
  EXPECT_EQ(ds.metadata.at("r_d").get<std::string>(), "1");
  // the timing block accounts for the full wall time
  const auto& t = a.timings;
  const Real total = t.at("total_wall").get<Real>();
  const Real sum = t.at("autonomous_ssm").get<Real>() + t.at("reduced_dynamics").get<Real>() +
                   t.at("nonautonomous_ssm").get<Real>() + t.at("lift_evaluation").get<Real>() +
                   t.at("other").get<Real>();
  EXPECT_NEAR(sum, total, 0.05 * total + 1e-6);
}

TEST(Io, ConfigValidationErrors) {
  nlohmann::json j = {{"system", {{"builder", "coupled_oscillators"}, {"params", {1, 2}}}},
                      {"omega_range", {0.9, 1.05}},
                      {"eps", 0.01}};
  EXPECT_THROW(run_frc(PipelineConfig::from_json(j)), std::invalid_argument);

  nlohmann::json j2 = {
      {"system",
       {{"builder", "coupled_oscillators"}, {"params", {0.005, 0.01, 0.3, 1.0, 2.0, 0.0}}}},
      {"omega_range", {1.05, 0.9}},  // empty window
      {"eps", 0.01}};
  EXPECT_THROW(run_frc(PipelineConfig::from_json(j2)), std::invalid_argument);
}

TEST(Io, PoStagePrerequisiteError) {
  // po stage on a window with no HB events must report the missing prerequisite
  nlohmann::json j = {
      {"system",
       {{"builder", "coupled_oscillators"}, {"params", {0.005, 0.01, 0.3, 1.0, 2.0, 0.0}}}},
      {"master", {{"modes", {0, 1}}}},
      {"order", 3},
      {"omega_range", {0.7, 0.75}},
      {"eps", 0.01},
      {"stages", {"po"}},
  };
  EXPECT_THROW(run_frc(PipelineConfig::from_json(j)), std::runtime_error);
}
