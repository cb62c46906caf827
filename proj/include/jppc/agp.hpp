#pragma once

// Double-loop accelerated gradient projection. Outer loop: GEMM extrapolation
// z = y + ((i-1)/(i+2))(y - y_prev), candidate y+ = Pi_Y[z + (1/tau) grad],
// with tau backtracked (reject-and-retry) until the quadratic model condition
// holds. Inner loop: the projection onto Y is a small QCQP whose dual has a
// closed-form primal recovery; the dual is maximized by FISTA over the
// nonnegative orthant.
//
// Positions (meters) and powers (watts) differ in curvature by ~1e7, so the
// outer loop works in a diagonally scaled metric (position weight 1e-6, i.e.
// kilometers). project_onto_Y defaults to the plain Euclidean metric.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "jppc/model.hpp"
#include "jppc/surrogate.hpp"

namespace jppc {

struct DualPoint {
  double lambda = 0.0;  // relay budget
  double mu = 0.0;      // BS budget
  std::vector<double> nu;  // nonnegativity, aligned with the flat power block (3K)
};

struct AgpOptions {
  double kappa = 1.2;
  double tau_init = 0.0;  // 0: start at 1 and let the backtracking find tau_1
  double eps1 = 5e-3;     // inner relative dual-value tolerance
  double eps2 = 1e-3;     // outer relative rate tolerance over a window
  int max_outer = 20000;
  int max_inner = 2000;
  double tau_cap = 1e12;
  int stall_window = 5;
  bool warm_start_duals = false;  // default follows the printed s^1 = 0 reset
  bool fix_position = false;
  double pos_weight = 1e-6;  // outer metric weight on the position block
  // Recovered powers are clamped below this floor. solve_agp raises it to a
  // scale-aware value: near p = 0 the surrogate diverges like -1/p^2 and no
  // bounded tau satisfies the model condition (41).
  double power_floor_w = 0.0;
};

struct ProjectionResult {
  Decision y;
  DualPoint duals;
  int iters = 0;
  double dual_value = 0.0;
};

namespace agp_detail {

// Closed-form primal minimizer of the weighted projection Lagrangian at dual
// point sd. Layout of v and out: [x, y, p_r_u(K), p_r_d(K), p_b(K)].
inline void recover_primal(const std::vector<double>& v, const DualPoint& sd, double pos_weight,
                           const Scenario& s, const LinkParams& lp, bool fix_position,
                           std::vector<double>& out) {
  const std::size_t k = s.num_ue();
  const double c = (sd.lambda + sd.mu) * s.gamma_c_linear / lp.xi;
  if (fix_position) {
    out[0] = v[0];
    out[1] = v[1];
  } else {
    out[0] = (pos_weight * v[0] + c * s.bs_position[0]) / (pos_weight + c);
    out[1] = (pos_weight * v[1] + c * s.bs_position[1]) / (pos_weight + c);
  }
  for (std::size_t i = 0; i < 2 * k; ++i) out[2 + i] = v[2 + i] - 0.5 * (sd.lambda - sd.nu[i]);
  for (std::size_t i = 2 * k; i < 3 * k; ++i) out[2 + i] = v[2 + i] - 0.5 * (sd.mu - sd.nu[i]);
}

// Budget residuals of a flat point (<= 0 feasible).
inline void budget_residuals(const std::vector<double>& y, const Scenario& s, const LinkParams& lp,
                             double& c1, double& c2) {
  const std::size_t k = s.num_ue();
  const double dx = y[0] - s.bs_position[0], dy = y[1] - s.bs_position[1];
  const double pc =
      s.gamma_c_linear / lp.xi * (dx * dx + dy * dy + s.altitude_h * s.altitude_h);
  double sr = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < 2 * k; ++i) sr += y[2 + i];
  for (std::size_t i = 2 * k; i < 3 * k; ++i) sb += y[2 + i];
  c1 = sr + pc - s.p_uav_max_w;
  c2 = sb + pc - s.p_bs_max_w;
}

struct DualEval {
  double value = 0.0;
  double c1 = 0.0, c2 = 0.0;  // gradient components for lambda, mu
};

// Dual function g(sd) and its gradient pieces by the envelope theorem:
// dg/dlambda = c1, dg/dmu = c2, dg/dnu_i = -p_i at the recovered primal.
inline DualEval eval_dual(const std::vector<double>& v, const DualPoint& sd, double pos_weight,
                          const Scenario& s, const LinkParams& lp, bool fix_position,
                          std::vector<double>& primal_scratch) {
  recover_primal(v, sd, pos_weight, s, lp, fix_position, primal_scratch);
  const std::vector<double>& y = primal_scratch;
  DualEval r;
  budget_residuals(y, s, lp, r.c1, r.c2);
  double quad = pos_weight * ((y[0] - v[0]) * (y[0] - v[0]) + (y[1] - v[1]) * (y[1] - v[1]));
  double nup = 0.0;
  for (std::size_t i = 2; i < y.size(); ++i) {
    quad += (y[i] - v[i]) * (y[i] - v[i]);
    nup += sd.nu[i - 2] * y[i];
  }
  r.value = quad + sd.lambda * r.c1 + sd.mu * r.c2 - nup;
  return r;
}

}  // namespace agp_detail

// Dual function of the projection QCQP at the point v = z + (1/tau) grad
// (position components scaled by the metric weight), and its analytic
// gradient over (lambda, mu, nu).
inline double dual_g(const DualPoint& sd, const std::vector<double>& z,
                     const std::vector<double>& grad, double tau, const Scenario& s,
                     const LinkParams& lp, double pos_weight = 1.0, bool fix_position = false) {
  std::vector<double> v(z.size());
  v[0] = z[0] + grad[0] / (tau * pos_weight);
  v[1] = z[1] + grad[1] / (tau * pos_weight);
  for (std::size_t i = 2; i < z.size(); ++i) v[i] = z[i] + grad[i] / tau;
  std::vector<double> primal(z.size());
  return agp_detail::eval_dual(v, sd, pos_weight, s, lp, fix_position, primal).value;
}

inline std::vector<double> grad_dual_g(const DualPoint& sd, const std::vector<double>& z,
                                       const std::vector<double>& grad, double tau,
                                       const Scenario& s, const LinkParams& lp,
                                       double pos_weight = 1.0, bool fix_position = false) {
  std::vector<double> v(z.size());
  v[0] = z[0] + grad[0] / (tau * pos_weight);
  v[1] = z[1] + grad[1] / (tau * pos_weight);
  for (std::size_t i = 2; i < z.size(); ++i) v[i] = z[i] + grad[i] / tau;
  std::vector<double> primal(z.size());
  const auto de = agp_detail::eval_dual(v, sd, pos_weight, s, lp, fix_position, primal);
  std::vector<double> g(z.size());
  g[0] = de.c1;
  g[1] = de.c2;
  for (std::size_t i = 2; i < z.size(); ++i) g[i] = -primal[i];
  return g;
}

// Projection of a flat vector onto Y in the metric
//   pos_weight * ||x - v_x||^2 + ||p - v_p||^2,
// via FISTA on the concave closed-form dual. fixed_x freezes the position
// coordinates (the budget caps then see the fixed control power).
inline ProjectionResult project_onto_Y(const std::vector<double>& v, const Scenario& s,
                                       const LinkParams& lp, const AgpOptions& opts = {},
                                       double pos_weight = 1.0,
                                       const DualPoint* warm = nullptr) {
  const std::size_t k = s.num_ue();
  const std::size_t nd = 2 + 3 * k;
  ProjectionResult res;
  DualPoint sd;
  sd.nu.assign(3 * k, 0.0);
  if (warm && warm->nu.size() == 3 * k) sd = *warm;
  DualPoint sd_prev = sd;

  std::vector<double> primal(nd, 0.0);
  auto g_at = [&](const DualPoint& p) {
    return agp_detail::eval_dual(v, p, pos_weight, s, lp, opts.fix_position, primal);
  };
  auto grad_fill = [&](const agp_detail::DualEval& de, std::vector<double>& g) {
    g[0] = de.c1;
    g[1] = de.c2;
    for (std::size_t i = 0; i < 3 * k; ++i) g[2 + i] = -primal[2 + i];
  };

  std::vector<double> gt(2 + 3 * k), step(2 + 3 * k);
  double g_prev_val = g_at(sd).value;
  double eta = 1.0;
  int flat = 0;
  for (int it = 1; it <= opts.max_inner; ++it) {
    res.iters = it;
    const double coef = static_cast<double>(it - 1) / static_cast<double>(it + 2);
    DualPoint t = sd;
    t.lambda = sd.lambda + coef * (sd.lambda - sd_prev.lambda);
    t.mu = sd.mu + coef * (sd.mu - sd_prev.mu);
    for (std::size_t i = 0; i < 3 * k; ++i)
      t.nu[i] = sd.nu[i] + coef * (sd.nu[i] - sd_prev.nu[i]);
    t.lambda = std::max(t.lambda, 0.0);
    t.mu = std::max(t.mu, 0.0);
    for (double& x : t.nu) x = std::max(x, 0.0);

    const auto det = g_at(t);
    grad_fill(det, gt);

    DualPoint snew = t;
    double gnew = 0.0;
    for (int bt = 0; bt < 80; ++bt) {
      snew.lambda = std::max(t.lambda + eta * gt[0], 0.0);
      snew.mu = std::max(t.mu + eta * gt[1], 0.0);
      for (std::size_t i = 0; i < 3 * k; ++i)
        snew.nu[i] = std::max(t.nu[i] + eta * gt[2 + i], 0.0);
      double lin = 0.0, sq = 0.0;
      step[0] = snew.lambda - t.lambda;
      step[1] = snew.mu - t.mu;
      for (std::size_t i = 0; i < 3 * k; ++i) step[2 + i] = snew.nu[i] - t.nu[i];
      for (std::size_t i = 0; i < step.size(); ++i) {
        lin += gt[i] * step[i];
        sq += step[i] * step[i];
      }
      gnew = g_at(snew).value;
      if (gnew >= det.value + lin - sq / (2.0 * eta) - 1e-15 * (1.0 + std::abs(gnew))) break;
      eta *= 0.5;
    }
    sd_prev = sd;
    sd = snew;
    eta = std::min(eta * 1.3, 1e8);

    const double rel = std::abs(gnew - g_prev_val) / (1.0 + std::abs(gnew));
    g_prev_val = gnew;
    if (rel <= opts.eps1) {
      if (++flat >= 2) break;
    } else {
      flat = 0;
    }
  }

  // Primal recovery at the final duals, then tiny-violation cleanup.
  const auto de = g_at(sd);
  res.dual_value = de.value;
  std::vector<double> y = primal;
  for (std::size_t i = 2; i < y.size(); ++i) y[i] = std::max(y[i], opts.power_floor_w);
  double c1, c2;
  agp_detail::budget_residuals(y, s, lp, c1, c2);
  const double tol1 = 1e-8 * s.p_uav_max_w, tol2 = 1e-8 * s.p_bs_max_w;
  if (c1 > 0.0 || c2 > 0.0) {
    const double dx = y[0] - s.bs_position[0], dy = y[1] - s.bs_position[1];
    const double pc =
        s.gamma_c_linear / lp.xi * (dx * dx + dy * dy + s.altitude_h * s.altitude_h);
    double sr = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < 2 * k; ++i) sr += y[2 + i];
    for (std::size_t i = 2 * k; i < 3 * k; ++i) sb += y[2 + i];
    if (c1 > tol1 && sr > 0.0 && s.p_uav_max_w - pc > 0.0) {
      const double f = (s.p_uav_max_w - pc) / sr;
      for (std::size_t i = 0; i < 2 * k; ++i) y[2 + i] *= f;
    }
    if (c2 > tol2 && sb > 0.0 && s.p_bs_max_w - pc > 0.0) {
      const double f = (s.p_bs_max_w - pc) / sb;
      for (std::size_t i = 2 * k; i < 3 * k; ++i) y[2 + i] *= f;
    }
  }
  res.y = from_flat(y, s);
  res.duals = std::move(sd);
  return res;
}

// Quadratic model condition (41) in the outer metric; out-of-domain points
// fail the condition.
inline bool descent_condition(const Decision& y_next, const Decision& z,
                              const SurrogateContext& ctx, const Scenario& s,
                              const LinkParams& lp, double tau, double pos_weight = 1.0) {
  const auto vy = eval_proposed(y_next, ctx, s, lp);
  const auto vz = eval_proposed(z, ctx, s, lp);
  if (!vy.in_domain || !vz.in_domain) return false;
  const auto g = grad_proposed(z, ctx, s, lp);
  const auto fy = to_flat(y_next), fz = to_flat(z);
  double lin = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < fy.size(); ++i) {
    const double d = fy[i] - fz[i];
    lin += g[i] * d;
    sq += (i < 2 ? pos_weight : 1.0) * d * d;
  }
  const double slack = 1e-12 * (1.0 + std::abs(vy.value));
  return vy.value >= vz.value + lin - 0.5 * tau * sq - slack;
}

inline SolverReport solve_agp(const Scenario& s, const Decision& init, const AgpOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const LinkParams lp = link_params(s);
  if (!is_feasible(init, s, lp, 1e-6 * std::min(s.p_uav_max_w, s.p_bs_max_w)))
    throw std::invalid_argument("solve_agp: initial decision infeasible");

  SolverReport rep;
  std::vector<double> y = to_flat(init), y_prev = y;
  double rate = sum_rate(init, s, lp);
  rep.iterates.push_back({0, rate, init});
  rep.status = SolveStatus::iteration_limit;

  double tau = opts.tau_init > 0.0 ? opts.tau_init : 1.0;
  const double w = opts.pos_weight;
  AgpOptions popt = opts;
  if (popt.power_floor_w <= 0.0)
    popt.power_floor_w = 1e-3 * std::min(s.p_uav_max_w, s.p_bs_max_w) /
                         static_cast<double>(3 * s.num_ue());
  std::vector<double> recent{rate};
  DualPoint warm;

  for (int i = 1; i <= opts.max_outer; ++i) {
    Decision yd = from_flat(y, s);
    const SurrogateContext ctx = make_context(yd, s, lp);

    const double coef = static_cast<double>(i - 1) / static_cast<double>(i + 2);
    std::vector<double> z(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) z[j] = y[j] + coef * (y[j] - y_prev[j]);
    Decision zd = from_flat(z, s);
    if (!eval_proposed(zd, ctx, s, lp).in_domain) {
      z = y;  // extrapolation left the surrogate domain; fall back to y^i
      zd = yd;
    }
    ProjectionResult proj;
    bool accepted = false;
    // Pass 0 uses the extrapolated z; pass 1 falls back to z = y^i, whose
    // pure proximal step has guaranteed ascent and a domain-interior anchor,
    // so the backtracking cannot run away. A rate drop beyond the ascent
    // slack also reroutes to pass 1.
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      if (pass == 1) {
        z = y;
        zd = yd;
      }
      auto g = grad_proposed(zd, ctx, s, lp);
      if (opts.fix_position) g[0] = g[1] = 0.0;
      const double tau_enter = tau;
      int grow = 0;
      while (tau <= opts.tau_cap) {
        std::vector<double> v(z.size());
        v[0] = z[0] + g[0] / (tau * w);
        v[1] = z[1] + g[1] / (tau * w);
        for (std::size_t j = 2; j < z.size(); ++j) v[j] = z[j] + g[j] / tau;
        proj = project_onto_Y(v, s, lp, popt, w, opts.warm_start_duals ? &warm : nullptr);
        if (descent_condition(proj.y, zd, ctx, s, lp, tau, w)) {
          if (sum_rate(proj.y, s, lp) < rate - 1e-8 * (1.0 + std::abs(rate))) {
            if (pass == 0) break;  // extrapolation overshoot, not a curvature issue
            tau *= opts.kappa;  // inexact projection dip; shrink the step
            continue;
          }
          accepted = true;
          break;
        }
        tau *= opts.kappa;
        if (pass == 0 && ++grow >= 64) break;  // extrapolated target likely out of domain
      }
      // Any pass-0 failure (growth budget or cap) is charged to the
      // extrapolation, not to tau: restore it before the z = y^i retry.
      if (pass == 0 && !accepted) tau = tau_enter;
    }
    if (!accepted) {
      rep.status = SolveStatus::failed;  // tau blew past the cap
      break;
    }
    if (opts.warm_start_duals) warm = proj.duals;
    rep.inner_counts.push_back(proj.iters);

    y_prev = y;
    y = to_flat(proj.y);
    const double rate_new = sum_rate(proj.y, s, lp);
    rep.iterates.push_back({i, rate_new, proj.y});
    rate = rate_new;

    recent.push_back(rate_new);
    if (static_cast<int>(recent.size()) > opts.stall_window + 1)
      recent.erase(recent.begin());
    if (static_cast<int>(recent.size()) == opts.stall_window + 1) {
      const auto [lo, hi] = std::minmax_element(recent.begin(), recent.end());
      if (*hi - *lo <= opts.eps2 * (1.0 + std::abs(rate_new))) {
        rep.status = SolveStatus::converged;
        break;
      }
    }
  }

  // Report the best iterate (FISTA extrapolation is mildly non-monotone).
  std::size_t best = 0;
  for (std::size_t j = 1; j < rep.iterates.size(); ++j)
    if (rep.iterates[j].sum_rate_bps > rep.iterates[best].sum_rate_bps) best = j;
  rep.final = rep.iterates[best].y;
  // Polish: the inexact projection leaves the budgets a hair slack; filling
  // them makes Property 1 exact and cannot lower the rate.
  if (fill_budgets(rep.final, s, lp)) {
    const double filled = sum_rate(rep.final, s, lp);
    if (filled >= rep.iterates[best].sum_rate_bps) {
      rep.final_rate_bps = filled;
    } else {
      rep.final = rep.iterates[best].y;
      rep.final_rate_bps = rep.iterates[best].sum_rate_bps;
    }
  } else {
    rep.final_rate_bps = rep.iterates[best].sum_rate_bps;
  }
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace jppc
