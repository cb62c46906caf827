// Command-line front end: solve one scenario, run sweeps and timing tables,
// or run a quick invariant check. Exit codes: 0 ok, 2 infeasible input,
// 3 solver failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jppc/agp.hpp"
#include "jppc/bench.hpp"
#include "jppc/io.hpp"
#include "jppc/model.hpp"
#include "jppc/sca.hpp"
#include "jppc/single_ue.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolverFailure = 3;

struct CommonArgs {
  std::uint64_t seed = 1;
  std::string solver = "agp";
  std::string surrogate = "proposed";
  int trials = 0;  // 0: keep the spec/default value
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--seed", a.seed, "RNG seed");
  cmd->add_option("--solver", a.solver, "sca | agp | single-ue")
      ->check(CLI::IsMember({"sca", "agp", "single-ue"}));
  cmd->add_option("--surrogate", a.surrogate, "proposed | baseline")
      ->check(CLI::IsMember({"proposed", "baseline"}));
  cmd->add_option("--trials", a.trials, "trial count");
  cmd->add_option("--out", a.out, "output path");
}

jppc::SurrogateKind surrogate_kind(const std::string& name) {
  return name == "baseline" ? jppc::SurrogateKind::baseline : jppc::SurrogateKind::proposed;
}

jppc::SolverReport run_solver(const CommonArgs& a, const jppc::Scenario& s) {
  const jppc::LinkParams lp = jppc::link_params(s);
  if (a.solver == "single-ue") return jppc::solve_single_ue(s);
  const jppc::Decision init = jppc::initial_decision(s, lp);
  if (a.solver == "sca") {
    jppc::ScaOptions o;
    o.surrogate_kind = surrogate_kind(a.surrogate);
    if (o.surrogate_kind == jppc::SurrogateKind::baseline) o.max_outer = 600;
    return jppc::solve_sca(s, init, o);
  }
  return jppc::solve_agp(s, init);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write: " + out);
  f << text;
}

int status_code(jppc::SolveStatus st) {
  switch (st) {
    case jppc::SolveStatus::converged:
    case jppc::SolveStatus::iteration_limit:
      return kExitOk;
    case jppc::SolveStatus::infeasible_input:
      return kExitInfeasible;
    case jppc::SolveStatus::failed:
      return kExitSolverFailure;
  }
  return kExitSolverFailure;
}

int cmd_solve(const CommonArgs& a, const std::string& scenario_path, std::size_t k) {
  jppc::Scenario s;
  if (!scenario_path.empty()) {
    s = jppc::load_scenario(scenario_path);
  } else {
    jppc::ExperimentSpec e;
    e.seed = a.seed;
    e.k = k;
    s = jppc::generate_scenario(e);
  }
  const jppc::SolverReport rep = run_solver(a, s);
  nlohmann::json j = jppc::report_to_json(rep);
  j["seed"] = a.seed;
  j["scenario"] = jppc::scenario_to_json(s);
  emit(a.out, j.dump(2) + "\n");
  return status_code(rep.status);
}

int cmd_sweep(const CommonArgs& a, const std::string& spec_path, CLI::App* cmd) {
  jppc::ExperimentSpec e = spec_path.empty() ? jppc::ExperimentSpec{} : jppc::load_spec(spec_path);
  if (cmd->count("--seed")) e.seed = a.seed;
  if (cmd->count("--solver")) e.solver = a.solver;
  if (cmd->count("--surrogate")) e.surrogate = surrogate_kind(a.surrogate);
  if (a.trials > 0) e.trials = a.trials;
  if (e.sweep_values.empty()) e.sweep_values = {34.0, 37.0, 40.0, 43.0, 46.0};
  const auto rows = jppc::sweep(e);
  const std::string out = a.out.empty() ? "sweep.csv" : a.out;
  jppc::write_sweep_csv(out, e, rows);
  std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), out.c_str());
  return kExitOk;
}

int cmd_bench_time(const CommonArgs& a, const std::string& spec_path, CLI::App* cmd) {
  jppc::ExperimentSpec e = spec_path.empty() ? jppc::ExperimentSpec{} : jppc::load_spec(spec_path);
  if (cmd->count("--seed")) e.seed = a.seed;
  e.trials = a.trials > 0 ? a.trials : 70;
  const auto rows = jppc::timing_table(e);
  const std::string out = a.out.empty() ? "timing.csv" : a.out;
  jppc::write_timing_csv(out, e, rows);
  std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), out.c_str());
  return kExitOk;
}

// Quick self-check: surrogate tightness/bound, solution feasibility, budget
// activity, and monotone SCA traces on seeded instances.
int cmd_check(const CommonArgs& a) {
  using namespace jppc;
  bool ok = true;
  auto report = [&](const char* name, bool pass) {
    std::printf("%-34s %s\n", name, pass ? "OK" : "FAIL");
    ok = ok && pass;
  };
  std::mt19937_64 eng(a.seed);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
  };

  ExperimentSpec e;
  e.seed = a.seed;
  e.k = 4;
  const Scenario s = generate_scenario(e);
  const LinkParams lp = link_params(s);
  const Decision anchor = initial_decision(s, lp);
  const SurrogateContext ctx = make_context(anchor, s, lp);

  bool tight = true, bound = true;
  const double r0 = sum_rate(anchor, s, lp);
  for (SurrogateKind kind : {SurrogateKind::proposed, SurrogateKind::baseline}) {
    const auto v = eval_surrogate(kind, anchor, ctx, s, lp);
    tight = tight && v.in_domain && std::abs(v.value - r0) <= 1e-9 * std::abs(r0);
  }
  for (int t = 0; t < 200; ++t) {
    Decision d = anchor;
    d.x_r[0] += uni(-50.0, 50.0);
    d.x_r[1] += uni(-50.0, 50.0);
    for (std::size_t i = 0; i < s.num_ue(); ++i) {
      d.p_r_u[i] *= uni(0.5, 1.0);
      d.p_r_d[i] *= uni(0.5, 1.0);
      d.p_b[i] *= uni(0.5, 1.0);
    }
    if (!is_feasible(d, s, lp, 0.0)) continue;
    const double r = sum_rate(d, s, lp);
    for (SurrogateKind kind : {SurrogateKind::proposed, SurrogateKind::baseline}) {
      const auto v = eval_surrogate(kind, d, ctx, s, lp);
      if (v.in_domain) bound = bound && v.value <= r + 1e-9 * std::abs(r);
    }
  }
  report("surrogate tight at anchor", tight);
  report("surrogate lower bound", bound);

  const double feas_tol = 1e-6 * std::min(s.p_uav_max_w, s.p_bs_max_w);
  const auto ra = solve_agp(s, anchor);
  const auto rs = solve_sca(s, anchor);
  report("agp converged", ra.status == SolveStatus::converged);
  report("sca converged", rs.status == SolveStatus::converged);
  report("solutions feasible", is_feasible(ra.final, s, lp, feas_tol) &&
                                   is_feasible(rs.final, s, lp, feas_tol));
  report("solver agreement 0.5%",
         std::abs(ra.final_rate_bps - rs.final_rate_bps) <= 5e-3 * rs.final_rate_bps);

  auto budgets_active = [&](const Decision& d) {
    const double pc = control_power(d.x_r, s, lp);
    double sr = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < s.num_ue(); ++i) {
      sr += d.p_r_u[i] + d.p_r_d[i];
      sb += d.p_b[i];
    }
    return std::abs(sr + pc - s.p_uav_max_w) <= 1e-6 * s.p_uav_max_w &&
           std::abs(sb + pc - s.p_bs_max_w) <= 1e-6 * s.p_bs_max_w;
  };
  report("budgets active at solutions", budgets_active(ra.final) && budgets_active(rs.final));

  bool mono = true;
  for (std::size_t i = 1; i < rs.iterates.size(); ++i)
    mono = mono && rs.iterates[i].sum_rate_bps >= rs.iterates[i - 1].sum_rate_bps - 1e-8;
  report("sca trace nondecreasing", mono);

  return ok ? kExitOk : kExitSolverFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-way relay UAV positioning and power control"};
  app.require_subcommand(1);

  CommonArgs a_solve, a_sweep, a_time, a_check;
  std::string scenario_path, sweep_spec, time_spec;
  std::size_t k = 16;

  CLI::App* c_solve = app.add_subcommand("solve", "solve one scenario, emit a report JSON");
  c_solve->add_option("scenario", scenario_path, "scenario JSON file (omit to generate)");
  c_solve->add_option("--k", k, "UE count for a generated scenario");
  add_common(c_solve, a_solve);

  CLI::App* c_sweep = app.add_subcommand("sweep", "run a budget/control sweep, emit a CSV");
  c_sweep->add_option("spec", sweep_spec, "experiment spec JSON file");
  add_common(c_sweep, a_sweep);

  CLI::App* c_time = app.add_subcommand("bench-time", "solver timing table, emit a CSV");
  c_time->add_option("spec", time_spec, "experiment spec JSON file");
  add_common(c_time, a_time);

  CLI::App* c_check = app.add_subcommand("check", "run the invariant suite");
  add_common(c_check, a_check);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_solve->parsed()) return cmd_solve(a_solve, scenario_path, k);
    if (c_sweep->parsed()) return cmd_sweep(a_sweep, sweep_spec, c_sweep);
    if (c_time->parsed()) return cmd_bench_time(a_time, time_spec, c_time);
    return cmd_check(a_check);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "infeasible input: %s\n", e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolverFailure;
  }
}
