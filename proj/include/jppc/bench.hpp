#pragma once

// Experiment harness: scenario generation, fixed-position baselines,
// budget/control sweeps, timing tables, and CSV emission with a JSON
// sidecar recording the full spec.

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "jppc/agp.hpp"
#include "jppc/io.hpp"
#include "jppc/model.hpp"
#include "jppc/sca.hpp"
#include "jppc/single_ue.hpp"
#include "json.hpp"

namespace jppc {

// Seedable, cross-platform uniform source; bit-derived so the stream does
// not depend on libstdc++ distribution internals.
class BenchRng {
 public:
  explicit BenchRng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

enum class BaselineKind {
  jppc,               // full joint solver
  above_bs_uni_pw,    // UAV above the BS, uniform powers
  above_bs_opt_pw,    // UAV above the BS, optimized powers
  geo_center_uni_pw,  // UAV at the geometry center, uniform powers
  geo_center_opt_pw,  // UAV at the geometry center, optimized powers
};

inline std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::jppc: return "jppc";
    case BaselineKind::above_bs_uni_pw: return "above_bs_uni_pw";
    case BaselineKind::above_bs_opt_pw: return "above_bs_opt_pw";
    case BaselineKind::geo_center_uni_pw: return "geo_center_uni_pw";
    case BaselineKind::geo_center_opt_pw: return "geo_center_opt_pw";
  }
  return "unknown";
}

inline BaselineKind baseline_from_string(const std::string& n) {
  for (BaselineKind k : {BaselineKind::jppc, BaselineKind::above_bs_uni_pw,
                         BaselineKind::above_bs_opt_pw, BaselineKind::geo_center_uni_pw,
                         BaselineKind::geo_center_opt_pw})
    if (to_string(k) == n) return k;
  throw std::invalid_argument("unknown baseline: " + n);
}

enum class SweepVariable { p_b, p_r, gamma_c };

inline std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::p_b: return "p_b_dbm";
    case SweepVariable::p_r: return "p_r_dbm";
    case SweepVariable::gamma_c: return "gamma_c_db";
  }
  return "unknown";
}

inline SweepVariable sweep_variable_from_string(const std::string& n) {
  for (SweepVariable v : {SweepVariable::p_b, SweepVariable::p_r, SweepVariable::gamma_c})
    if (to_string(v) == n) return v;
  throw std::invalid_argument("unknown sweep variable: " + n);
}

struct ExperimentSpec {
  std::uint64_t seed = 1;
  std::size_t k = 16;
  std::array<double, 4> ue_region{0.0, 1000.0, 0.0, 1000.0};    // x_min,x_max,y_min,y_max
  std::array<double, 4> bs_region{6000.0, 7000.0, 0.0, 1000.0};
  SweepVariable sweep_variable = SweepVariable::p_b;
  std::vector<double> sweep_values;  // dBm for budgets, dB for gamma_c
  std::string solver = "agp";        // sca | agp | single-ue
  SurrogateKind surrogate = SurrogateKind::proposed;
  int trials = 1;
  // Base point; the swept variable overrides its own entry.
  double p_r_dbm = 36.0;
  double p_b_dbm = 43.0;
  double gamma_c_db = 20.0;

  void validate() const {
    if (k < 1) throw std::invalid_argument("spec: K >= 1 required");
    if (trials < 1) throw std::invalid_argument("spec: trials >= 1 required");
    for (const auto& r : {ue_region, bs_region})
      if (r[0] > r[1] || r[2] > r[3]) throw std::invalid_argument("spec: region not well-ordered");
    if (solver != "sca" && solver != "agp" && solver != "single-ue")
      throw std::invalid_argument("spec: unknown solver " + solver);
  }
};

inline nlohmann::json spec_to_json(const ExperimentSpec& e) {
  nlohmann::json j;
  j["seed"] = e.seed;
  j["k"] = e.k;
  j["ue_region"] = e.ue_region;
  j["bs_region"] = e.bs_region;
  j["sweep_variable"] = to_string(e.sweep_variable);
  j["sweep_values"] = e.sweep_values;
  j["solver"] = e.solver;
  j["surrogate"] = e.surrogate == SurrogateKind::proposed ? "proposed" : "baseline";
  j["trials"] = e.trials;
  j["p_r_dbm"] = e.p_r_dbm;
  j["p_b_dbm"] = e.p_b_dbm;
  j["gamma_c_db"] = e.gamma_c_db;
  return j;
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  ExperimentSpec e;
  e.seed = j.value("seed", std::uint64_t{1});
  e.k = j.value("k", std::size_t{16});
  if (j.contains("ue_region")) for (int i = 0; i < 4; ++i) e.ue_region[i] = j["ue_region"].at(i);
  if (j.contains("bs_region")) for (int i = 0; i < 4; ++i) e.bs_region[i] = j["bs_region"].at(i);
  if (j.contains("sweep_variable"))
    e.sweep_variable = sweep_variable_from_string(j["sweep_variable"]);
  if (j.contains("sweep_values"))
    e.sweep_values = j["sweep_values"].get<std::vector<double>>();
  e.solver = j.value("solver", std::string("agp"));
  const std::string sg = j.value("surrogate", std::string("proposed"));
  if (sg != "proposed" && sg != "baseline")
    throw std::invalid_argument("spec: unknown surrogate " + sg);
  e.surrogate = sg == "proposed" ? SurrogateKind::proposed : SurrogateKind::baseline;
  e.trials = j.value("trials", 1);
  e.p_r_dbm = j.value("p_r_dbm", 36.0);
  e.p_b_dbm = j.value("p_b_dbm", 43.0);
  e.gamma_c_db = j.value("gamma_c_db", 20.0);
  e.validate();
  return e;
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  nlohmann::json j;
  in >> j;
  return spec_from_json(j);
}

// Deterministic per (seed, trial): trials draw from disjoint substreams.
inline Scenario generate_scenario(const ExperimentSpec& e, int trial = 0) {
  e.validate();
  BenchRng rng(e.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(trial + 1)));
  Scenario s;
  for (std::size_t i = 0; i < e.k; ++i)
    s.ue_positions.push_back({rng.uniform(e.ue_region[0], e.ue_region[1]),
                              rng.uniform(e.ue_region[2], e.ue_region[3]), 0.0});
  s.bs_position = {rng.uniform(e.bs_region[0], e.bs_region[1]),
                   rng.uniform(e.bs_region[2], e.bs_region[3]), 0.0};
  s.altitude_h = 100.0;
  s.beta_ref_gain = db_to_linear(-40.0);
  s.noise_psd_dbm_hz = -169.0;
  s.bandwidth_w_hz = 1e6;
  s.p_ue_max_w.assign(e.k, dbm_to_watt(23.0));
  s.p_uav_max_w = dbm_to_watt(e.p_r_dbm);
  s.p_bs_max_w = dbm_to_watt(e.p_b_dbm);
  s.gamma_c_linear = db_to_linear(e.gamma_c_db);
  return s;
}

inline void apply_sweep_value(Scenario& s, SweepVariable v, double value_db) {
  switch (v) {
    case SweepVariable::p_b: s.p_bs_max_w = dbm_to_watt(value_db); break;
    case SweepVariable::p_r: s.p_uav_max_w = dbm_to_watt(value_db); break;
    case SweepVariable::gamma_c: s.gamma_c_linear = db_to_linear(value_db); break;
  }
}

namespace bench_detail {

// Uniform power fill at a pinned position; empty powers if a budget cannot
// cover the control power there.
inline Decision pinned_uniform(const Vec3& x, const Scenario& s, const LinkParams& lp,
                               bool* ok = nullptr) {
  Decision d = make_decision(s);
  d.x_r = x;
  const double pc = control_power(x, s, lp);
  const double br = s.p_uav_max_w - pc, bb = s.p_bs_max_w - pc;
  if (ok) *ok = br > 0.0 && bb > 0.0;
  if (br <= 0.0 || bb <= 0.0) return d;
  const double k = static_cast<double>(s.num_ue());
  d.p_r_u.assign(s.num_ue(), br / (2.0 * k));
  d.p_r_d.assign(s.num_ue(), br / (2.0 * k));
  d.p_b.assign(s.num_ue(), bb / k);
  return d;
}

inline SolverReport fixed_report(const Decision& d, const Scenario& s, const LinkParams& lp,
                                 double wall_s) {
  SolverReport rep;
  rep.final = d;
  rep.final_rate_bps = sum_rate(d, s, lp);
  rep.iterates.push_back({0, rep.final_rate_bps, d});
  rep.status = SolveStatus::converged;
  rep.wall_time_s = wall_s;
  return rep;
}

}  // namespace bench_detail

inline SolverReport run_baseline(BaselineKind kind, const Scenario& s,
                                 const AgpOptions& opts = {}, const Decision* warm = nullptr) {
  const LinkParams lp = link_params(s);
  if (kind == BaselineKind::jppc) {
    Decision init = initial_decision(s, lp);
    SolverReport rep = solve_agp(s, init, opts);
    if (warm && is_feasible(*warm, s, lp, 0.0)) {
      // Budgets often nest along sweeps; a previous solution is then a
      // feasible start and preserves per-instance monotonicity.
      SolverReport rw = solve_agp(s, *warm, opts);
      if (rw.final_rate_bps > rep.final_rate_bps) {
        rw.wall_time_s += rep.wall_time_s;
        return rw;
      }
      rep.wall_time_s += rw.wall_time_s;
    }
    return rep;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const bool above = kind == BaselineKind::above_bs_uni_pw || kind == BaselineKind::above_bs_opt_pw;
  const Vec3 x = above ? Vec3{s.bs_position[0], s.bs_position[1], s.altitude_h}
                       : geometry_center(s);
  bool ok = false;
  Decision d = bench_detail::pinned_uniform(x, s, lp, &ok);
  if (!ok) {
    SolverReport rep;
    rep.status = SolveStatus::infeasible_input;
    rep.final = d;
    return rep;
  }
  const bool uniform =
      kind == BaselineKind::above_bs_uni_pw || kind == BaselineKind::geo_center_uni_pw;
  if (uniform) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return bench_detail::fixed_report(d, s, lp, wall);
  }
  AgpOptions o = opts;
  o.fix_position = true;
  SolverReport rep = solve_agp(s, d, o);
  if (warm && warm->x_r == d.x_r && is_feasible(*warm, s, lp, 0.0)) {
    SolverReport rw = solve_agp(s, *warm, o);
    if (rw.final_rate_bps > rep.final_rate_bps) {
      rw.wall_time_s += rep.wall_time_s;
      return rw;
    }
    rep.wall_time_s += rw.wall_time_s;
  }
  return rep;
}

struct SweepRow {
  double sweep_value = 0.0;  // dBm or dB
  BaselineKind kind = BaselineKind::jppc;
  int trial = 0;
  double sum_rate_bps = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
  double p_c_w = 0.0;
  double wall_time_s = 0.0;
};

inline std::vector<SweepRow> sweep(const ExperimentSpec& e, const Scenario& s_base) {
  if (e.sweep_values.empty()) throw std::invalid_argument("sweep: values list empty");
  const std::vector<BaselineKind> kinds = {
      BaselineKind::jppc, BaselineKind::geo_center_opt_pw, BaselineKind::above_bs_opt_pw,
      BaselineKind::above_bs_uni_pw};
  std::vector<SweepRow> rows;
  for (int trial = 0; trial < e.trials; ++trial) {
    Scenario s = e.trials == 1 ? s_base : generate_scenario(e, trial);
    std::vector<Decision> warm(kinds.size());
    std::vector<bool> have_warm(kinds.size(), false);
    for (double value : e.sweep_values) {
      Scenario sv = s;
      apply_sweep_value(sv, e.sweep_variable, value);
      const LinkParams lp = link_params(sv);
      for (std::size_t ik = 0; ik < kinds.size(); ++ik) {
        const SolverReport rep =
            run_baseline(kinds[ik], sv, {}, have_warm[ik] ? &warm[ik] : nullptr);
        SweepRow r;
        r.sweep_value = value;
        r.kind = kinds[ik];
        r.trial = trial;
        r.wall_time_s = rep.wall_time_s;
        if (rep.status == SolveStatus::infeasible_input) {
          r.sum_rate_bps = 0.0;
        } else {
          r.sum_rate_bps = rep.final_rate_bps;
          r.x_m = rep.final.x_r[0];
          r.y_m = rep.final.x_r[1];
          r.p_c_w = control_power(rep.final.x_r, sv, lp);
          warm[ik] = rep.final;
          have_warm[ik] = true;
        }
        rows.push_back(r);
      }
    }
  }
  return rows;
}

inline std::vector<SweepRow> sweep(const ExperimentSpec& e) {
  return sweep(e, generate_scenario(e, 0));
}

struct TimingRow {
  std::size_t k = 0;
  std::string method;  // sca_baseline | sca_proposed | agp
  double mean_wall_s = 0.0;
  double ratio_vs_agp = 0.0;
};

inline std::vector<TimingRow> timing_table(const ExperimentSpec& e,
                                           const std::vector<std::size_t>& ks = {5, 10, 16}) {
  std::vector<TimingRow> rows;
  for (std::size_t k : ks) {
    ExperimentSpec ek = e;
    ek.k = k;
    double t_sb = 0.0, t_sp = 0.0, t_agp = 0.0;
    for (int trial = 0; trial < e.trials; ++trial) {
      const Scenario s = generate_scenario(ek, trial);
      const LinkParams lp = link_params(s);
      const Decision init = initial_decision(s, lp);
      // Tight enough that both SCA variants reach comparable rates; the
      // default stop lets the slow-creeping baseline quit early and cheap.
      ScaOptions ob;
      ob.surrogate_kind = SurrogateKind::baseline;
      ob.max_outer = 2000;
      ob.eps0 = 1e-4;
      t_sb += solve_sca(s, init, ob).wall_time_s;
      ScaOptions op;
      op.eps0 = 1e-4;
      t_sp += solve_sca(s, init, op).wall_time_s;
      t_agp += solve_agp(s, init).wall_time_s;
    }
    const double n = e.trials;
    rows.push_back({k, "sca_baseline", t_sb / n, t_sb / t_agp});
    rows.push_back({k, "sca_proposed", t_sp / n, t_sp / t_agp});
    rows.push_back({k, "agp", t_agp / n, 1.0});
  }
  return rows;
}

namespace bench_detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace bench_detail

inline void write_spec_sidecar(const std::string& csv_path, const ExperimentSpec& e) {
  std::ofstream out(csv_path + ".spec.json");
  if (!out) throw std::runtime_error("cannot write sidecar for: " + csv_path);
  out << spec_to_json(e).dump(2) << "\n";
}

inline void write_sweep_csv(const std::string& path, const ExperimentSpec& e,
                            const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "seed,sweep_variable,sweep_value,baseline,trial,sum_rate_bps,x_m,y_m,p_c_w,wall_time_s\n";
  using bench_detail::fmt;
  for (const SweepRow& r : rows)
    out << e.seed << ',' << to_string(e.sweep_variable) << ',' << fmt(r.sweep_value) << ','
        << to_string(r.kind) << ',' << r.trial << ',' << fmt(r.sum_rate_bps) << ',' << fmt(r.x_m)
        << ',' << fmt(r.y_m) << ',' << fmt(r.p_c_w) << ',' << fmt(r.wall_time_s) << '\n';
  write_spec_sidecar(path, e);
}

inline std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 10) throw std::runtime_error("bad sweep row: " + line);
    SweepRow r;
    r.sweep_value = std::stod(f[2]);
    r.kind = baseline_from_string(f[3]);
    r.trial = std::stoi(f[4]);
    r.sum_rate_bps = std::stod(f[5]);
    r.x_m = std::stod(f[6]);
    r.y_m = std::stod(f[7]);
    r.p_c_w = std::stod(f[8]);
    r.wall_time_s = std::stod(f[9]);
    rows.push_back(r);
  }
  return rows;
}

inline void write_timing_csv(const std::string& path, const ExperimentSpec& e,
                             const std::vector<TimingRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "seed,k,method,mean_wall_s,ratio_vs_agp\n";
  using bench_detail::fmt;
  for (const TimingRow& r : rows)
    out << e.seed << ',' << r.k << ',' << r.method << ',' << fmt(r.mean_wall_s) << ','
        << fmt(r.ratio_vs_agp) << '\n';
  write_spec_sidecar(path, e);
}

}  // namespace jppc
