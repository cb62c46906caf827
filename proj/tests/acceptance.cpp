// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Independent oracles (finite differences, Dykstra projection,
// dense grids) come from oracles.hpp.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "jppc/agp.hpp"
#include "jppc/bench.hpp"
#include "jppc/model.hpp"
#include "jppc/sca.hpp"
#include "jppc/single_ue.hpp"
#include "jppc/surrogate.hpp"
#include "oracles.hpp"

using namespace jppc;

namespace {

int g_failures = 0;

void criterion(int num, const char* name, bool pass) {
  std::printf("%s  %2d. %s\n", pass ? "PASS" : "FAIL", num, name);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::size_t k_cycle(int i) {
  constexpr std::size_t ks[] = {1, 5, 16};
  return ks[i % 3];
}

// Richardson-extrapolated central differences: O(h^4) truncation, accurate
// enough to resolve a 1e-5 relative tolerance.
std::vector<double> fd_gradient_rich(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& x, double rel_step = 1e-3) {
  const auto g1 = test::fd_gradient(f, x, rel_step);
  const auto g2 = test::fd_gradient(f, x, rel_step / 2.0);
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = (4.0 * g2[i] - g1[i]) / 3.0;
  return g;
}

double rel_norm_err(const std::vector<double>& a, const std::vector<double>& b) {
  double err = 0.0, nrm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err += (a[i] - b[i]) * (a[i] - b[i]);
    nrm += b[i] * b[i];
  }
  return std::sqrt(err) / (1.0 + std::sqrt(nrm));
}

// 1. Tightness at the anchor (1e-9 relative) and the global lower bound
//    (1e-9 slack) for both surrogates.
bool c1_tightness_and_bound() {
  test::Rng rng(1001);
  int pairs = 0;
  for (int a = 0; a < 100; ++a) {
    const Scenario s = test::random_scenario(rng, k_cycle(a));
    const LinkParams lp = link_params(s);
    const Decision anchor = test::random_feasible_decision(rng, s, lp);
    const SurrogateContext ctx = make_context(anchor, s, lp);
    const double r0 = sum_rate(anchor, s, lp);
    for (SurrogateKind kind : {SurrogateKind::proposed, SurrogateKind::baseline}) {
      const auto v = eval_surrogate(kind, anchor, ctx, s, lp);
      if (!v.in_domain || std::abs(v.value - r0) > 1e-9 * std::abs(r0)) return false;
    }
    for (int p = 0; p < 10; ++p) {
      const Decision pt = test::random_feasible_decision(rng, s, lp);
      ++pairs;
      for (double theta : {1.0, 0.5, 0.25, 0.1}) {
        Decision d = pt;
        d.x_r = anchor.x_r + theta * (pt.x_r - anchor.x_r);
        for (std::size_t i = 0; i < s.num_ue(); ++i) {
          d.p_r_u[i] = anchor.p_r_u[i] + theta * (pt.p_r_u[i] - anchor.p_r_u[i]);
          d.p_r_d[i] = anchor.p_r_d[i] + theta * (pt.p_r_d[i] - anchor.p_r_d[i]);
          d.p_b[i] = anchor.p_b[i] + theta * (pt.p_b[i] - anchor.p_b[i]);
        }
        const double r = sum_rate(d, s, lp);
        for (SurrogateKind kind : {SurrogateKind::proposed, SurrogateKind::baseline}) {
          const auto v = eval_surrogate(kind, d, ctx, s, lp);
          if (v.in_domain && v.value > r + 1e-9 * std::abs(r)) return false;
        }
      }
    }
  }
  return pairs == 1000;
}

// 2. Analytic gradients of both surrogates and of the projection dual match
//    finite differences to 1e-5 relative at 100 points each.
bool c2_gradients() {
  test::Rng rng(1002);
  for (int t = 0; t < 100; ++t) {
    const Scenario s = test::random_scenario(rng, k_cycle(t));
    const LinkParams lp = link_params(s);
    const Decision anchor = test::random_feasible_decision(rng, s, lp);
    const SurrogateContext ctx = make_context(anchor, s, lp);

    // Blend a random feasible point toward the anchor until it lands inside
    // the surrogate domain (the anchor itself always is).
    const Decision pt = test::random_feasible_decision(rng, s, lp);
    auto blend = [&](double theta) {
      Decision d = anchor;
      d.x_r = anchor.x_r + theta * (pt.x_r - anchor.x_r);
      for (std::size_t i = 0; i < s.num_ue(); ++i) {
        d.p_r_u[i] = anchor.p_r_u[i] + theta * (pt.p_r_u[i] - anchor.p_r_u[i]);
        d.p_r_d[i] = anchor.p_r_d[i] + theta * (pt.p_r_d[i] - anchor.p_r_d[i]);
        d.p_b[i] = anchor.p_b[i] + theta * (pt.p_b[i] - anchor.p_b[i]);
      }
      return d;
    };
    for (SurrogateKind kind : {SurrogateKind::proposed, SurrogateKind::baseline}) {
      Decision d = blend(0.1);
      for (double theta : {0.03, 0.01, 0.003, 0.001}) {
        if (eval_surrogate(kind, d, ctx, s, lp).in_domain) break;
        d = blend(theta);
      }
      if (!eval_surrogate(kind, d, ctx, s, lp).in_domain) return false;
      const auto ga = grad_surrogate(kind, d, ctx, s, lp);
      const auto gf = fd_gradient_rich(
          [&](const std::vector<double>& v) {
            return eval_surrogate(kind, from_flat(v, s), ctx, s, lp).value;
          },
          to_flat(d), 1e-4);
      if (rel_norm_err(ga, gf) > 1e-5) return false;
    }

    // Dual of the prox projection: gradient equals the constraint residuals.
    const auto z = to_flat(anchor);
    const auto g = grad_proposed(anchor, ctx, s, lp);
    const double tau = 1e8, w = 1e-6;
    DualPoint dp;
    dp.lambda = rng.uniform(0.0, 1.0);
    dp.mu = rng.uniform(0.0, 1.0);
    dp.nu.resize(3 * s.num_ue());
    for (double& x : dp.nu) x = rng.uniform(0.0, 1.0);
    const auto ga = grad_dual_g(dp, z, g, tau, s, lp, w);
    auto pack = [&](const DualPoint& p) {
      std::vector<double> x{p.lambda, p.mu};
      x.insert(x.end(), p.nu.begin(), p.nu.end());
      return x;
    };
    const auto gf = test::fd_gradient(
        [&](const std::vector<double>& x) {
          DualPoint p;
          p.lambda = x[0];
          p.mu = x[1];
          p.nu.assign(x.begin() + 2, x.end());
          return dual_g(p, z, g, tau, s, lp, w);
        },
        pack(dp), 1e-6);
    if (rel_norm_err(ga, gf) > 1e-5) return false;
  }
  return true;
}

// 3. Position-Hessian spectral radius of the baseline surrogate exceeds the
//    proposed one on >= 95 of 100 random scenarios.
bool c3_curvature() {
  test::Rng rng(1003);
  int wins = 0;
  for (int t = 0; t < 100; ++t) {
    const Scenario s = test::random_scenario(rng, k_cycle(t));
    const LinkParams lp = link_params(s);
    const Decision anchor = test::random_feasible_decision(rng, s, lp);
    const auto rep = curvature_report(make_context(anchor, s, lp), s, lp);
    if (rep.rho_baseline > rep.rho_proposed) ++wins;
  }
  return wins >= 95;
}

int iters_to_target(const SolverReport& r, double target) {
  for (std::size_t i = 0; i < r.iterates.size(); ++i)
    if (r.iterates[i].sum_rate_bps >= target) return static_cast<int>(i);
  return static_cast<int>(r.iterates.size()) + 1000;
}

// 4. SCA with the proposed surrogate reaches 99.9% of its converged rate in
//    <= 20 outer iterations; the baseline needs >= 3x on >= 8 of 10 runs.
bool c4_sca_speed() {
  test::Rng rng(1004);
  int gap_ok = 0;
  for (int t = 0; t < 10; ++t) {
    const Scenario s = test::random_scenario(rng, 5);
    const LinkParams lp = link_params(s);
    const Decision init = initial_decision(s, lp);
    ScaOptions op;
    op.eps0 = 1e-6;
    const auto rp = solve_sca(s, init, op);
    const double target = rp.final_rate_bps * 0.999;
    const int it_p = iters_to_target(rp, target);
    if (it_p > 20) return false;
    ScaOptions ob = op;
    ob.surrogate_kind = SurrogateKind::baseline;
    ob.max_outer = 600;
    const auto rb = solve_sca(s, init, ob);
    if (iters_to_target(rb, target) >= 3 * it_p) ++gap_ok;
  }
  return gap_ok >= 8;
}

struct Solved {
  Scenario s;
  Decision sca;
  Decision agp;
};

// 5. SCA and AGP final rates agree within 0.5% on 20 random instances.
//    Converged solutions are kept for the Property 1 check (criterion 10).
bool c5_agreement(std::vector<Solved>& out) {
  test::Rng rng(1005);
  for (int t = 0; t < 20; ++t) {
    const Scenario s = test::random_scenario(rng, k_cycle(t));
    const LinkParams lp = link_params(s);
    const Decision init = initial_decision(s, lp);
    ScaOptions o;
    o.eps0 = 1e-5;
    const auto rs = solve_sca(s, init, o);
    const auto ra = solve_agp(s, init);
    if (rs.status != SolveStatus::converged || ra.status != SolveStatus::converged) return false;
    const double hi = std::max(rs.final_rate_bps, ra.final_rate_bps);
    if (std::abs(rs.final_rate_bps - ra.final_rate_bps) > 5e-3 * hi) return false;
    out.push_back({s, rs.final, ra.final});
  }
  return true;
}

// 6. project_onto_Y matches the Dykstra oracle within 1e-4 Euclidean
//    distance on 50 random K <= 3 inputs.
bool c6_projection() {
  test::Rng rng(1006);
  AgpOptions tight;
  tight.eps1 = 1e-13;
  tight.max_inner = 20000;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + (t % 3);
    const Scenario s = test::random_scenario(rng, k);
    const LinkParams lp = link_params(s);
    std::vector<double> v(2 + 3 * k);
    v[0] = rng.uniform(-1000.0, 8000.0);
    v[1] = rng.uniform(-1500.0, 2500.0);
    for (std::size_t i = 2; i < v.size(); ++i) v[i] = rng.uniform(-2.0, 10.0);
    const auto got = to_flat(project_onto_Y(v, s, lp, tight).y);
    const auto want = test::project_Y_dykstra(v, s, lp);
    double dist = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dist += (got[i] - want[i]) * (got[i] - want[i]);
    if (std::sqrt(dist) > 1e-4) return false;
  }
  return true;
}

// 7. Single-UE solver vs a dense 3-D grid (along-track x cross-track x relay
//    split), symmetric alpha = M/2, and Property 2 cross-track optimality.
bool c7_single_ue() {
  test::Rng rng(1007);
  for (int t = 0; t < 10; ++t) {
    const Scenario s = test::random_scenario(rng, 1);
    const LinkParams lp = link_params(s);
    const auto rep = solve_single_ue(s);
    if (rep.status != SolveStatus::converged) return false;

    const Vec3 u = s.ue_positions[0], b = s.bs_position;
    const double m = std::hypot(b[0] - u[0], b[1] - u[1]);
    const double dx = (b[0] - u[0]) / m, dy = (b[1] - u[1]) / m;
    double grid_best = -std::numeric_limits<double>::infinity();
    Decision d = make_decision(s);
    d.p_b[0] = 0.0;
    for (int ia = 0; ia <= 300; ++ia) {
      const double alpha = ia * m / 300.0;
      for (double off : {-30.0, -10.0, 0.0, 10.0, 30.0}) {
        d.x_r = {u[0] + alpha * dx - off * dy, u[1] + alpha * dy + off * dx, s.altitude_h};
        const double pc = control_power(d.x_r, s, lp);
        const double br = s.p_uav_max_w - pc, bb = s.p_bs_max_w - pc;
        if (br <= 0.0 || bb <= 0.0) continue;
        d.p_b[0] = bb;
        for (int is = 1; is < 150; ++is) {
          const double f = is / 150.0;
          d.p_r_u[0] = f * br;
          d.p_r_d[0] = (1.0 - f) * br;
          grid_best = std::max(grid_best, sum_rate(d, s, lp));
        }
      }
    }
    if (std::abs(rep.final_rate_bps - grid_best) > 1e-3 * rep.final_rate_bps) return false;

    // Cross-track perturbations never improve the rate (Property 2).
    for (double off : {1.0, -1.0, 10.0, -10.0, 50.0, -50.0}) {
      Decision p = rep.final;
      p.x_r[0] -= off * dy;
      p.x_r[1] += off * dx;
      if (control_power(p.x_r, s, lp) >= std::min(s.p_uav_max_w, s.p_bs_max_w)) continue;
      if (sum_rate(p, s, lp) > rep.final_rate_bps * (1.0 + 1e-9)) return false;
    }
  }

  // Symmetric instance: the optimal relay sits at the segment midpoint.
  Scenario sym;
  sym.ue_positions = {{0.0, 0.0, 0.0}};
  sym.bs_position = {2000.0, 0.0, 0.0};
  sym.altitude_h = 100.0;
  sym.beta_ref_gain = db_to_linear(-40.0);
  sym.noise_psd_dbm_hz = -169.0;
  sym.bandwidth_w_hz = 1e6;
  sym.p_ue_max_w = {0.5};
  sym.p_uav_max_w = 2.0;
  sym.p_bs_max_w = 0.5;
  sym.gamma_c_linear = 0.0;
  const auto rs = solve_single_ue(sym);
  return rs.status == SolveStatus::converged && std::abs(rs.final.x_r[0] - 1000.0) <= 1.0 &&
         std::abs(rs.final.x_r[1]) <= 1e-6;
}

// 8. Strategy ordering on K=16 instances plus per-instance budget-sweep
//    monotonicity and the control-SNR ordering.
bool c8_ordering_and_sweeps() {
  for (int t = 0; t < 20; ++t) {
    ExperimentSpec e;
    e.seed = 2000 + t;
    e.k = 16;
    const Scenario s = generate_scenario(e);
    const double full = run_baseline(BaselineKind::jppc, s).final_rate_bps;
    const double gc = run_baseline(BaselineKind::geo_center_opt_pw, s).final_rate_bps;
    const double bs_opt = run_baseline(BaselineKind::above_bs_opt_pw, s).final_rate_bps;
    const double bs_uni = run_baseline(BaselineKind::above_bs_uni_pw, s).final_rate_bps;
    if (full < gc * (1.0 - 1e-3)) return false;
    if (gc < bs_opt * (1.0 - 1e-3) || gc < bs_uni * (1.0 - 1e-3)) return false;
  }

  ExperimentSpec e;
  e.seed = 2100;
  e.k = 16;
  e.trials = 3;
  auto jppc_rate = [](const std::vector<SweepRow>& rows, double value, int trial) {
    for (const auto& r : rows)
      if (r.kind == BaselineKind::jppc && r.sweep_value == value && r.trial == trial)
        return r.sum_rate_bps;
    return -1.0;
  };
  for (SweepVariable var : {SweepVariable::p_b, SweepVariable::p_r}) {
    e.sweep_variable = var;
    e.sweep_values = var == SweepVariable::p_b ? std::vector<double>{34.0, 38.0, 42.0, 46.0}
                                               : std::vector<double>{30.0, 34.0, 38.0, 42.0};
    const auto rows = sweep(e);
    for (int trial = 0; trial < e.trials; ++trial)
      for (std::size_t i = 1; i < e.sweep_values.size(); ++i) {
        const double lo = jppc_rate(rows, e.sweep_values[i - 1], trial);
        const double hi = jppc_rate(rows, e.sweep_values[i], trial);
        if (hi < lo * (1.0 - 1e-9)) return false;
      }
  }
  e.sweep_variable = SweepVariable::gamma_c;
  e.sweep_values = {20.0, 10.0};
  const auto rows = sweep(e);
  for (int trial = 0; trial < e.trials; ++trial)
    if (jppc_rate(rows, 10.0, trial) < jppc_rate(rows, 20.0, trial) * (1.0 - 1e-9)) return false;
  return true;
}

// 9. Wall-time ratios at K=16 over 10 trials: AGP <= 1/5 of SCA with the
//    proposed surrogate, which is <= 1/3 of SCA with the baseline one.
bool c9_timing() {
  ExperimentSpec e;
  e.seed = 3000;
  e.trials = 10;
  const auto rows = timing_table(e, {16});
  double sb = 0.0, sp = 0.0, agp = 0.0;
  for (const auto& r : rows) {
    if (r.method == "sca_baseline") sb = r.mean_wall_s;
    if (r.method == "sca_proposed") sp = r.mean_wall_s;
    if (r.method == "agp") agp = r.mean_wall_s;
  }
  return agp > 0.0 && agp <= sp / 5.0 && sp <= sb / 3.0;
}

// 10. Property 1: both budgets active to 1e-6 relative at every converged
//     solution with gamma_c > 0.
bool c10_budget_activity(const std::vector<Solved>& solved) {
  if (solved.empty()) return false;
  for (const auto& inst : solved) {
    if (inst.s.gamma_c_linear <= 0.0) return false;
    const LinkParams lp = link_params(inst.s);
    for (const Decision* d : {&inst.sca, &inst.agp}) {
      const double pc = control_power(d->x_r, inst.s, lp);
      double sr = 0.0, sb = 0.0;
      for (std::size_t i = 0; i < inst.s.num_ue(); ++i) {
        sr += d->p_r_u[i] + d->p_r_d[i];
        sb += d->p_b[i];
      }
      if (std::abs(sr + pc - inst.s.p_uav_max_w) > 1e-6 * inst.s.p_uav_max_w) return false;
      if (std::abs(sb + pc - inst.s.p_bs_max_w) > 1e-6 * inst.s.p_bs_max_w) return false;
    }
  }
  return true;
}

}  // namespace

int main() {
  criterion(1, "surrogate tightness at the anchor and global lower bound", c1_tightness_and_bound());
  criterion(2, "analytic gradients match finite differences (surrogates, dual)", c2_gradients());
  criterion(3, "baseline surrogate has larger position curvature (>= 95/100)", c3_curvature());
  criterion(4, "SCA iteration-speed gap between the surrogates", c4_sca_speed());
  std::vector<Solved> solved;
  criterion(5, "SCA and AGP final rates agree within 0.5%", c5_agreement(solved));
  criterion(6, "projection onto Y matches the Dykstra oracle within 1e-4", c6_projection());
  criterion(7, "single-UE solver vs dense grid, midpoint, cross-track optimality", c7_single_ue());
  criterion(8, "strategy ordering and per-instance sweep monotonicity", c8_ordering_and_sweeps());
  criterion(9, "wall-time ratios: AGP <= SCA(proposed)/5 <= SCA(baseline)/15", c9_timing());
  criterion(10, "budgets active at converged solutions (Property 1)", c10_budget_activity(solved));
  return g_failures == 0 ? 0 : 1;
}
