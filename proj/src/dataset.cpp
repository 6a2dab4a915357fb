#include "ssmkit/dataset.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ssmkit {

std::string FRCDataset::to_csv() const {
  std::ostringstream out;
  out << "Omega,eps,Ts,om_s,om1s,om2s,rho_rot";
  for (const auto& a : amp_names) out << "," << a;
  out << ",stability,event\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.omega << "," << r.eps << "," << r.Ts << "," << r.om_s << "," << r.om1s << ","
        << r.om2s << "," << r.rho_rot;
    for (Real a : r.amps) out << "," << a;
    out << "," << (r.stable ? 1 : 0) << "," << r.event << "\n";
  }
  return out.str();
}

nlohmann::json FRCDataset::to_json() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["columns"] = nlohmann::json::array({"Omega", "eps", "Ts", "om_s", "om1s", "om2s", "rho_rot"});
  for (const auto& a : amp_names) j["columns"].push_back(a);
  j["columns"].push_back("stability");
  j["columns"].push_back("event");
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {r.omega, r.eps, r.Ts, r.om_s, r.om1s, r.om2s, r.rho_rot};
    for (Real a : r.amps) row.push_back(a);
    row.push_back(r.stable ? 1 : 0);
    row.push_back(r.event);
    j["rows"].push_back(row);
  }
  j["metadata"] = metadata;
  return j;
}

FRCDataset FRCDataset::from_csv(const std::string& text) {
  FRCDataset ds;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("FRCDataset::from_csv: empty input");
  {
    std::istringstream hdr(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hdr, col, ',')) cols.push_back(col);
    if (cols.size() < 9) throw std::runtime_error("FRCDataset::from_csv: bad header");
    for (std::size_t i = 7; i + 2 < cols.size(); ++i) ds.amp_names.push_back(cols[i]);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, ',')) f.push_back(field);
    // a trailing empty event field is dropped by getline
    if (f.size() == 8 + ds.amp_names.size()) f.push_back("");
    if (f.size() != 9 + ds.amp_names.size())
      throw std::runtime_error("FRCDataset::from_csv: bad row width");
    FRCRow r;
    r.omega = std::stod(f[0]);
    r.eps = std::stod(f[1]);
    r.Ts = std::stod(f[2]);
    r.om_s = std::stod(f[3]);
    r.om1s = std::stod(f[4]);
    r.om2s = std::stod(f[5]);
    r.rho_rot = std::stod(f[6]);
    for (std::size_t i = 0; i < ds.amp_names.size(); ++i) r.amps.push_back(std::stod(f[7 + i]));
    r.stable = std::stoi(f[7 + ds.amp_names.size()]) != 0;
    r.event = f[8 + ds.amp_names.size()];
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ssmkit
