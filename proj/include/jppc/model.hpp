#pragma once

// Two-way AF relay network model: scenario data, SNR/rate evaluation,
// the reduced feasible set (UE powers at budget, control power eliminated),
// and small geometric helpers.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace jppc {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator*(double c, const Vec3& a) { return {c * a[0], c * a[1], c * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

// dB / dBm conversions (I/O boundary only; all internal math is linear W and m).
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

struct Scenario {
  std::vector<Vec3> ue_positions;  // z = 0
  Vec3 bs_position{};              // z = 0
  double altitude_h = 100.0;       // m
  double beta_ref_gain = 1e-4;     // linear gain at 1 m
  double noise_psd_dbm_hz = -169.0;
  double bandwidth_w_hz = 1e6;  // per-UE bandwidth W
  std::vector<double> p_ue_max_w;
  double p_uav_max_w = 0.0;
  double p_bs_max_w = 0.0;
  double gamma_c_linear = 0.0;

  std::size_t num_ue() const { return ue_positions.size(); }

  void validate() const {
    if (ue_positions.empty()) throw std::invalid_argument("scenario: K >= 1 required");
    if (p_ue_max_w.size() != ue_positions.size())
      throw std::invalid_argument("scenario: p_ue_max_w size mismatch");
    if (altitude_h <= 0.0) throw std::invalid_argument("scenario: altitude_h must be > 0");
    if (beta_ref_gain <= 0.0) throw std::invalid_argument("scenario: beta must be > 0");
    if (bandwidth_w_hz <= 0.0) throw std::invalid_argument("scenario: bandwidth must be > 0");
    if (p_uav_max_w <= 0.0 || p_bs_max_w <= 0.0)
      throw std::invalid_argument("scenario: power budgets must be > 0");
    for (double p : p_ue_max_w)
      if (p <= 0.0) throw std::invalid_argument("scenario: UE power budgets must be > 0");
    if (gamma_c_linear < 0.0) throw std::invalid_argument("scenario: gamma_c must be >= 0");
    for (const Vec3& u : ue_positions)
      if (u[2] != 0.0) throw std::invalid_argument("scenario: UE z-coordinate must be 0");
    if (bs_position[2] != 0.0) throw std::invalid_argument("scenario: BS z-coordinate must be 0");
  }
};

struct LinkParams {
  double xi = 0.0;       // beta / sigma^2
  double sigma2_w = 0.0;  // noise power over the per-UE bandwidth
};

inline LinkParams link_params(const Scenario& s) {
  LinkParams lp;
  lp.sigma2_w = dbm_to_watt(s.noise_psd_dbm_hz) * s.bandwidth_w_hz;
  lp.xi = s.beta_ref_gain / lp.sigma2_w;
  return lp;
}

// Reduced decision variable y = (x_r, p_r^U, p_r^D, p_b); UE powers are at
// their budgets and the control power is a function of x_r.
struct Decision {
  Vec3 x_r{};  // third coordinate equals altitude_h
  std::vector<double> p_r_u;
  std::vector<double> p_r_d;
  std::vector<double> p_b;
};

inline Decision make_decision(const Scenario& s) {
  Decision d;
  d.x_r = {0.0, 0.0, s.altitude_h};
  d.p_r_u.assign(s.num_ue(), 0.0);
  d.p_r_d.assign(s.num_ue(), 0.0);
  d.p_b.assign(s.num_ue(), 0.0);
  return d;
}

// Flat layout [x, y, p_r_u(K), p_r_d(K), p_b(K)], dimension 2 + 3K.
inline std::size_t flat_dim(const Scenario& s) { return 2 + 3 * s.num_ue(); }

inline std::vector<double> to_flat(const Decision& d) {
  std::vector<double> v;
  v.reserve(2 + 3 * d.p_r_u.size());
  v.push_back(d.x_r[0]);
  v.push_back(d.x_r[1]);
  v.insert(v.end(), d.p_r_u.begin(), d.p_r_u.end());
  v.insert(v.end(), d.p_r_d.begin(), d.p_r_d.end());
  v.insert(v.end(), d.p_b.begin(), d.p_b.end());
  return v;
}

inline Decision from_flat(const std::vector<double>& v, const Scenario& s) {
  const std::size_t k = s.num_ue();
  if (v.size() != 2 + 3 * k) throw std::invalid_argument("from_flat: dimension mismatch");
  Decision d;
  d.x_r = {v[0], v[1], s.altitude_h};
  d.p_r_u.assign(v.begin() + 2, v.begin() + 2 + k);
  d.p_r_d.assign(v.begin() + 2 + k, v.begin() + 2 + 2 * k);
  d.p_b.assign(v.begin() + 2 + 2 * k, v.end());
  return d;
}

enum class RateUnit { bits, nats };

// Multiplier taking a natural-log rate sum to the requested unit, including W/2.
inline double rate_scale(const Scenario& s, RateUnit unit = RateUnit::bits) {
  const double half_w = 0.5 * s.bandwidth_w_hz;
  return unit == RateUnit::bits ? half_w / std::numbers::ln2 : half_w;
}

inline double snr_uplink(std::size_t k, const Vec3& x_r, double p_r_u_k, const Scenario& s,
                         const LinkParams& lp) {
  const double dkr2 = norm2(x_r - s.ue_positions[k]);
  const double drb2 = norm2(x_r - s.bs_position);
  const double pu = s.p_ue_max_w[k];
  return lp.xi * p_r_u_k * pu / (p_r_u_k * dkr2 + pu * drb2 + dkr2 * drb2 / lp.xi);
}

inline double snr_downlink(std::size_t k, const Vec3& x_r, double p_b_k, double p_r_d_k,
                           const Scenario& s, const LinkParams& lp) {
  const double dkr2 = norm2(x_r - s.ue_positions[k]);
  const double drb2 = norm2(x_r - s.bs_position);
  return lp.xi * p_r_d_k * p_b_k / (p_r_d_k * drb2 + p_b_k * dkr2 + drb2 * dkr2 / lp.xi);
}

inline double sum_rate(const Decision& d, const Scenario& s, const LinkParams& lp,
                       RateUnit unit = RateUnit::bits) {
  double acc = 0.0;
  for (std::size_t k = 0; k < s.num_ue(); ++k) {
    acc += std::log1p(snr_uplink(k, d.x_r, d.p_r_u[k], s, lp));
    acc += std::log1p(snr_downlink(k, d.x_r, d.p_b[k], d.p_r_d[k], s, lp));
  }
  return rate_scale(s, unit) * acc;
}

// Control power at the SNR constraint boundary: p_c = gamma_c xi^-1 ||x_r - b||^2.
inline double control_power(const Vec3& x_r, const Scenario& s, const LinkParams& lp) {
  return s.gamma_c_linear / lp.xi * norm2(x_r - s.bs_position);
}

struct FeasibilityReport {
  bool feasible = false;
  double uav_violation_w = 0.0;  // excess over P_r
  double bs_violation_w = 0.0;   // excess over P_b
  double worst_negative_w = 0.0;  // most negative power entry, as a magnitude
};

inline FeasibilityReport check_feasible(const Decision& d, const Scenario& s,
                                        const LinkParams& lp, double tol = 1e-9) {
  FeasibilityReport r;
  const double pc = control_power(d.x_r, s, lp);
  double sum_r = 0.0, sum_b = 0.0;
  for (std::size_t k = 0; k < s.num_ue(); ++k) {
    sum_r += d.p_r_u[k] + d.p_r_d[k];
    sum_b += d.p_b[k];
    for (double p : {d.p_r_u[k], d.p_r_d[k], d.p_b[k]})
      if (-p > r.worst_negative_w) r.worst_negative_w = -p;
  }
  r.uav_violation_w = std::max(0.0, sum_r + pc - s.p_uav_max_w);
  r.bs_violation_w = std::max(0.0, sum_b + pc - s.p_bs_max_w);
  r.feasible = r.uav_violation_w <= tol && r.bs_violation_w <= tol && r.worst_negative_w <= tol;
  return r;
}

inline bool is_feasible(const Decision& d, const Scenario& s, const LinkParams& lp,
                        double tol = 1e-9) {
  return check_feasible(d, s, lp, tol).feasible;
}

// c = ((1/K) sum_k u_k + b) / 2, lifted to the flying altitude.
inline Vec3 geometry_center(const Scenario& s) {
  Vec3 mean{0.0, 0.0, 0.0};
  for (const Vec3& u : s.ue_positions) mean = mean + u;
  mean = (1.0 / static_cast<double>(s.num_ue())) * mean;
  Vec3 c = 0.5 * (mean + s.bs_position);
  c[2] = s.altitude_h;
  return c;
}

enum class SolveStatus { converged, iteration_limit, infeasible_input, failed };

inline std::string to_string(SolveStatus st) {
  switch (st) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::iteration_limit: return "iteration-limit";
    case SolveStatus::infeasible_input: return "infeasible-input";
    case SolveStatus::failed: return "failed";
  }
  return "unknown";
}

// Scale each power block onto its budget (net of the control power). The
// rate is increasing in every power, so filling never lowers it.
inline bool fill_budgets(Decision& y, const Scenario& s, const LinkParams& lp) {
  const double pc = control_power(y.x_r, s, lp);
  const double br = s.p_uav_max_w - pc;
  const double bb = s.p_bs_max_w - pc;
  if (br <= 0.0 || bb <= 0.0) return false;
  double sr = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < s.num_ue(); ++i) {
    sr += y.p_r_u[i] + y.p_r_d[i];
    sb += y.p_b[i];
  }
  if (sr <= 0.0 || sb <= 0.0) return false;
  const double fr = br / sr, fb = bb / sb;
  for (std::size_t i = 0; i < s.num_ue(); ++i) {
    y.p_r_u[i] *= fr;
    y.p_r_d[i] *= fr;
    y.p_b[i] *= fb;
  }
  return true;
}

struct IterateRecord {
  int iter = 0;
  double sum_rate_bps = 0.0;
  Decision y;
};

struct SolverReport {
  std::vector<IterateRecord> iterates;
  Decision final;
  double wall_time_s = 0.0;
  std::vector<int> inner_counts;
  SolveStatus status = SolveStatus::failed;
  double final_rate_bps = 0.0;
};

}  // namespace jppc
