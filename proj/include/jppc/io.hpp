#pragma once

// Scenario / report (de)serialization. dB and dBm appear only here; the
// in-memory Scenario is linear watts and meters.

#include <fstream>
#include <stdexcept>
#include <string>

#include "jppc/model.hpp"
#include "json.hpp"

namespace jppc {

// Defaults follow the common simulation setup: beta = -40 dB, W = 1 MHz,
// noise PSD -169 dBm/Hz, h = 100 m, P_u = 23 dBm, P_r = 36 dBm, P_b = 43 dBm,
// gamma_c = 20 dB.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  if (!j.contains("ue_positions") || !j["ue_positions"].is_array() || j["ue_positions"].empty())
    throw std::invalid_argument("scenario: ue_positions array required");
  for (const auto& u : j["ue_positions"])
    s.ue_positions.push_back({u.at(0).get<double>(), u.at(1).get<double>(), 0.0});
  const auto& b = j.at("bs_position");
  s.bs_position = {b.at(0).get<double>(), b.at(1).get<double>(), 0.0};
  s.altitude_h = j.value("altitude_m", 100.0);
  s.beta_ref_gain = db_to_linear(j.value("beta_db", -40.0));
  s.noise_psd_dbm_hz = j.value("noise_psd_dbm_hz", -169.0);
  s.bandwidth_w_hz = j.value("bandwidth_hz", 1e6);
  const double p_uav_dbm = j.value("p_uav_dbm", 36.0);
  const double p_bs_dbm = j.value("p_bs_dbm", 43.0);
  s.p_uav_max_w = dbm_to_watt(p_uav_dbm);
  s.p_bs_max_w = dbm_to_watt(p_bs_dbm);
  if (j.contains("p_ue_dbm") && j["p_ue_dbm"].is_array()) {
    for (const auto& p : j["p_ue_dbm"]) s.p_ue_max_w.push_back(dbm_to_watt(p.get<double>()));
  } else {
    const double p_ue_dbm = j.value("p_ue_dbm", 23.0);
    s.p_ue_max_w.assign(s.num_ue(), dbm_to_watt(p_ue_dbm));
  }
  s.gamma_c_linear = db_to_linear(j.value("gamma_c_db", 20.0));
  s.validate();
  return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  for (const Vec3& u : s.ue_positions) j["ue_positions"].push_back({u[0], u[1]});
  j["bs_position"] = {s.bs_position[0], s.bs_position[1]};
  j["altitude_m"] = s.altitude_h;
  j["beta_db"] = linear_to_db(s.beta_ref_gain);
  j["noise_psd_dbm_hz"] = s.noise_psd_dbm_hz;
  j["bandwidth_hz"] = s.bandwidth_w_hz;
  nlohmann::json pue = nlohmann::json::array();
  for (double p : s.p_ue_max_w) pue.push_back(watt_to_dbm(p));
  j["p_ue_dbm"] = pue;
  j["p_uav_dbm"] = watt_to_dbm(s.p_uav_max_w);
  j["p_bs_dbm"] = watt_to_dbm(s.p_bs_max_w);
  j["gamma_c_db"] = linear_to_db(s.gamma_c_linear);
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

inline nlohmann::json decision_to_json(const Decision& d) {
  nlohmann::json j;
  j["x_r"] = {d.x_r[0], d.x_r[1], d.x_r[2]};
  j["p_r_u_w"] = d.p_r_u;
  j["p_r_d_w"] = d.p_r_d;
  j["p_b_w"] = d.p_b;
  return j;
}

inline nlohmann::json report_to_json(const SolverReport& r) {
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["final_rate_bps"] = r.final_rate_bps;
  j["wall_time_s"] = r.wall_time_s;
  j["final"] = decision_to_json(r.final);
  j["inner_counts"] = r.inner_counts;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& it : r.iterates) trace.push_back({{"iter", it.iter}, {"sum_rate_bps", it.sum_rate_bps}});
  j["trace"] = trace;
  return j;
}

}  // namespace jppc
