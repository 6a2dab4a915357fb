#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssmkit/types.hpp"

namespace ssmkit {

/// One exported solution record. Fields that do not apply to a stage are zero.
struct FRCRow {
  Real omega = 0.0;
  Real eps = 0.0;
  Real Ts = 0.0;       // internal period (reduced cycle) or lifted orbit period
  Real om_s = 0.0;     // internal frequency
  Real om1s = 0.0;     // slow internal frequency (3-torus)
  Real om2s = 0.0;     // fast internal frequency (3-torus)
  Real rho_rot = 0.0;  // rotation number
  std::vector<Real> amps;
  bool stable = false;
  std::string event;  // "", "SN", "HB", "PD", "TR", "BP"
};

struct FRCDataset {
  std::string stage;  // equilibrium | po | torus2 | torus3
  std::vector<std::string> amp_names;
  std::vector<FRCRow> rows;
  nlohmann::json metadata;

  /// Fixed column contract:
  /// Omega, eps, Ts, om_s, om1s, om2s, rho_rot, amp_<dof>..., stability, event
  std::string to_csv() const;
  nlohmann::json to_json() const;
  static FRCDataset from_csv(const std::string& text);
};

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace ssmkit
