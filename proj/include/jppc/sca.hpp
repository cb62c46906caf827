#pragma once

// Successive convex approximation outer loop. Each round rebuilds the
// surrogate at the current iterate and maximizes it over the reduced feasible
// set Y by dual subgradient ascent on the two budget multipliers; the inner
// Lagrangian maximization is a diagonally preconditioned gradient projection
// onto the power-nonnegativity box.
//
// The baseline surrogate is only concave in amplitude variables a = sqrt(p),
// so its inner problem runs in (x, a) coordinates; budgets stay convex there
// (sums of squares).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "jppc/model.hpp"
#include "jppc/surrogate.hpp"

namespace jppc {

struct DualPair {
  double lambda = 0.0;
  double mu = 0.0;
};

struct ScaOptions {
  SurrogateKind surrogate_kind = SurrogateKind::proposed;
  double eps0 = 1e-3;  // relative rate-gain stop tolerance
  int max_outer = 200;
  int max_dual_iters = 150;
  int gp_max_iters = 400;
  double gp_tol = 1e-10;     // relative Lagrangian improvement floor
  double armijo_sigma = 1e-4;
  double armijo_shrink = 0.5;
  double cs_tol = 1e-5;      // complementary slackness, relative to the rate
  double feas_tol_rel = 1e-6;
};

// Geometry-center position with uniform powers net of the control power.
inline Decision initial_decision(const Scenario& s, const LinkParams& lp) {
  Decision d = make_decision(s);
  d.x_r = geometry_center(s);
  const double pc = control_power(d.x_r, s, lp);
  const double k = static_cast<double>(s.num_ue());
  const double pr = std::max(s.p_uav_max_w - pc, 0.0) / (2.0 * k);
  const double pb = std::max(s.p_bs_max_w - pc, 0.0) / k;
  for (std::size_t i = 0; i < s.num_ue(); ++i) {
    d.p_r_u[i] = pr;
    d.p_r_d[i] = pr;
    d.p_b[i] = pb;
  }
  return d;
}

namespace detail {

// Inner problem coordinates: flat [x, y, block] where block holds powers for
// the proposed surrogate and amplitudes for the baseline one.
struct InnerProblem {
  const SurrogateContext* ctx;
  const Scenario* s;
  const LinkParams* lp;
  SurrogateKind kind;
  double lambda = 0.0, mu = 0.0;

  std::size_t dim() const { return 2 + 3 * s->num_ue(); }
  bool amplitude_coords() const { return kind == SurrogateKind::baseline; }
  double block_floor() const {
    return amplitude_coords() ? std::sqrt(kPowerFloorW) : kPowerFloorW;
  }

  std::vector<double> encode(const Decision& d) const {
    std::vector<double> v = to_flat(d);
    if (amplitude_coords())
      for (std::size_t i = 2; i < v.size(); ++i) v[i] = std::sqrt(std::max(v[i], kPowerFloorW));
    return v;
  }
  Decision decode(const std::vector<double>& v) const {
    if (!amplitude_coords()) return from_flat(v, *s);
    std::vector<double> p = v;
    for (std::size_t i = 2; i < p.size(); ++i) p[i] = v[i] * v[i];
    return from_flat(p, *s);
  }

  double power_at(const std::vector<double>& v, std::size_t i) const {
    return amplitude_coords() ? v[i] * v[i] : v[i];
  }

  double control_power_at(const std::vector<double>& v) const {
    const double dx = v[0] - (*s).bs_position[0];
    const double dy = v[1] - (*s).bs_position[1];
    const double h = s->altitude_h;
    return s->gamma_c_linear / lp->xi * (dx * dx + dy * dy + h * h);
  }

  // Budget residuals c1 (relay), c2 (BS); feasible iff <= 0.
  void residuals(const std::vector<double>& v, double& c1, double& c2) const {
    const std::size_t k = s->num_ue();
    const double pc = control_power_at(v);
    double sr = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sr += power_at(v, 2 + i) + power_at(v, 2 + k + i);
      sb += power_at(v, 2 + 2 * k + i);
    }
    c1 = sr + pc - s->p_uav_max_w;
    c2 = sb + pc - s->p_bs_max_w;
  }

  double surrogate_value(const std::vector<double>& v) const {
    if (amplitude_coords()) return eval_baseline_amp(v, *ctx, *s, *lp).value;
    return eval_proposed(decode(v), *ctx, *s, *lp).value;
  }

  double lagrangian(const std::vector<double>& v) const {
    const double sv = surrogate_value(v);
    if (!std::isfinite(sv)) return sv;
    double c1, c2;
    residuals(v, c1, c2);
    return sv - lambda * c1 - mu * c2;
  }

  // Gradient of the Lagrangian; false when v is outside the surrogate domain.
  bool gradient(const std::vector<double>& v, std::vector<double>& g) const {
    const std::size_t k = s->num_ue();
    if (amplitude_coords()) {
      if (!grad_baseline_amp(v, *ctx, *s, *lp, g)) return false;
      for (std::size_t i = 0; i < k; ++i) {
        g[2 + i] -= lambda * 2.0 * v[2 + i];
        g[2 + k + i] -= lambda * 2.0 * v[2 + k + i];
        g[2 + 2 * k + i] -= mu * 2.0 * v[2 + 2 * k + i];
      }
    } else {
      Decision d = decode(v);
      if (!eval_proposed(d, *ctx, *s, *lp).in_domain) return false;
      g = grad_proposed(d, *ctx, *s, *lp);
      for (std::size_t i = 0; i < k; ++i) {
        g[2 + i] -= lambda;
        g[2 + k + i] -= lambda;
        g[2 + 2 * k + i] -= mu;
      }
    }
    const double cpos = (lambda + mu) * 2.0 * s->gamma_c_linear / lp->xi;
    g[0] -= cpos * (v[0] - s->bs_position[0]);
    g[1] -= cpos * (v[1] - s->bs_position[1]);
    return true;
  }

  // Diagonal scaling from anchor curvature magnitudes: positions by the
  // position Hessian scale, block coordinates by their anchor values.
  std::vector<double> preconditioner() const {
    const std::size_t k = s->num_ue();
    const double scale = rate_scale(*s);
    double rho = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      rho += 8.0 / std::min(ctx->n_bar_rb, ctx->n_bar_kr[i]);
    if (amplitude_coords()) {
      // The baseline position curvature carries extra xi-sized terms.
      const auto cr = curvature_report(*ctx, *s, *lp);
      rho = std::max(rho * scale, cr.rho_baseline) / scale;
    }
    std::vector<double> d(dim());
    d[0] = d[1] = 1.0 / (scale * std::max(rho, 1e-12));
    const std::vector<double> av = encode(ctx->anchor);
    const double floor_b = amplitude_coords() ? std::sqrt(1e-3 * s->p_uav_max_w)
                                              : 1e-3 * s->p_uav_max_w;
    for (std::size_t i = 2; i < d.size(); ++i) {
      const double a = std::max(std::abs(av[i]), floor_b);
      d[i] = a * a / scale;
    }
    return d;
  }
};

struct GpResult {
  std::vector<double> v;
  double lagrangian = -std::numeric_limits<double>::infinity();
  int iters = 0;
};

// Armijo gradient projection onto the box {block >= floor}.
inline GpResult gp_maximize(const InnerProblem& prob, std::vector<double> v,
                            const std::vector<double>& diag, const ScaOptions& opts) {
  GpResult r;
  const double floor_b = prob.block_floor();
  double f = prob.lagrangian(v);
  std::vector<double> g(prob.dim());
  double t_init = 1.0;
  int flat_rounds = 0;
  for (int it = 0; it < opts.gp_max_iters; ++it) {
    if (!prob.gradient(v, g)) break;
    bool accepted = false;
    double t = t_init;
    std::vector<double> vn(v.size());
    for (int bt = 0; bt < 60; ++bt) {
      double descent = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        double x = v[i] + t * diag[i] * g[i];
        if (i >= 2) x = std::max(x, floor_b);
        vn[i] = x;
        descent += g[i] * (x - v[i]);
      }
      const double fn = prob.lagrangian(vn);
      if (std::isfinite(fn) && fn >= f + opts.armijo_sigma * descent) {
        if (fn - f <= opts.gp_tol * (1.0 + std::abs(fn))) ++flat_rounds;
        else flat_rounds = 0;
        v = vn;
        f = fn;
        accepted = true;
        t_init = std::min(t * 2.0, 1.0e6);
        break;
      }
      t *= opts.armijo_shrink;
      if (t < 1e-20) break;
    }
    r.iters = it + 1;
    if (!accepted || flat_rounds >= 2) break;
  }
  r.v = std::move(v);
  r.lagrangian = f;
  return r;
}

}  // namespace detail

struct DualValue {
  double value = 0.0;  // dual function q(lambda, mu)
  Decision minimizer;  // inner maximizer of the Lagrangian
  double c1 = 0.0, c2 = 0.0;
  int gp_iters = 0;
};

// Evaluates the dual function of the surrogate subproblem at (lambda, mu).
inline DualValue dual_value(const SurrogateContext& ctx, const Scenario& s, const LinkParams& lp,
                            SurrogateKind kind, const DualPair& duals, const ScaOptions& opts = {},
                            const Decision* warm_start = nullptr) {
  detail::InnerProblem prob{&ctx, &s, &lp, kind, duals.lambda, duals.mu};
  const auto diag = prob.preconditioner();
  auto start = prob.encode(warm_start ? *warm_start : ctx.anchor);
  auto gp = detail::gp_maximize(prob, std::move(start), diag, opts);
  DualValue out;
  out.value = gp.lagrangian;
  out.minimizer = prob.decode(gp.v);
  prob.residuals(gp.v, out.c1, out.c2);
  out.gp_iters = gp.iters;
  return out;
}

// Scales each power block onto its budget exactly. The true rate is strictly
// increasing in every power, so filling the budgets never hurts (Property 1);
// scaling down restores feasibility after a truncated dual iteration.
struct DsaResult {
  Decision y;            // best feasible candidate by true rate
  Decision y_surrogate;  // best feasible candidate by surrogate value
  DualPair duals;
  int dual_iters = 0;
  int gp_iters_total = 0;
  bool converged = false;
};

// Dual subgradient ascent over the two budget multipliers. Every dual iterate
// is turned into a feasible candidate by scaling onto the budgets; the best
// candidate by true rate is returned (never worse than the budget-filled
// anchor).
inline DsaResult solve_subproblem_dsa(const SurrogateContext& ctx, const Scenario& s,
                                      const LinkParams& lp, const ScaOptions& opts = {}) {
  const SurrogateKind kind = opts.surrogate_kind;
  DsaResult res;
  res.y = ctx.anchor;
  fill_budgets(res.y, s, lp);
  res.y_surrogate = res.y;
  double best_rate = sum_rate(res.y, s, lp);
  double best_surr = eval_surrogate(kind, res.y_surrogate, ctx, s, lp).value;
  const double feas_tol = opts.feas_tol_rel * std::min(s.p_uav_max_w, s.p_bs_max_w);

  // Dual scale from the anchor power gradient; the budget shadow price lives
  // at the same magnitude.
  const auto g0 = grad_surrogate(kind, ctx.anchor, ctx, s, lp);
  double gsum = 0.0;
  for (std::size_t i = 2; i < g0.size(); ++i) gsum += std::abs(g0[i]);
  const double dual_scale = std::max(gsum / static_cast<double>(g0.size() - 2), 1e-12);

  DualPair duals{dual_scale, dual_scale};
  Decision warm = ctx.anchor;
  double step_a1 = 0.0, step_a2 = 0.0;
  for (int t = 1; t <= opts.max_dual_iters; ++t) {
    const auto dv = dual_value(ctx, s, lp, kind, duals, opts, &warm);
    res.gp_iters_total += dv.gp_iters;
    warm = dv.minimizer;
    res.dual_iters = t;

    Decision cand = dv.minimizer;
    if (fill_budgets(cand, s, lp)) {
      const double r = sum_rate(cand, s, lp);
      if (r > best_rate) {
        best_rate = r;
        res.y = cand;
      }
      const auto sv = eval_surrogate(kind, cand, ctx, s, lp);
      if (sv.in_domain && sv.value > best_surr) {
        best_surr = sv.value;
        res.y_surrogate = cand;
      }
    }
    const double cs = std::abs(duals.lambda * dv.c1) + std::abs(duals.mu * dv.c2);
    if (dv.c1 <= feas_tol && dv.c2 <= feas_tol &&
        cs <= opts.cs_tol * (1.0 + std::abs(dv.value))) {
      res.converged = true;
      break;
    }
    if (t == 1) {
      step_a1 = 0.1 * dual_scale / std::max(std::abs(dv.c1), 1e-3 * s.p_uav_max_w);
      step_a2 = 0.1 * dual_scale / std::max(std::abs(dv.c2), 1e-3 * s.p_bs_max_w);
    }
    const double decay = 1.0 / std::sqrt(static_cast<double>(t));
    duals.lambda = std::max(0.0, duals.lambda + step_a1 * decay * dv.c1);
    duals.mu = std::max(0.0, duals.mu + step_a2 * decay * dv.c2);
  }
  res.duals = duals;
  return res;
}

inline SolverReport solve_sca(const Scenario& s, const Decision& init, const ScaOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const LinkParams lp = link_params(s);
  if (!is_feasible(init, s, lp, opts.feas_tol_rel * std::min(s.p_uav_max_w, s.p_bs_max_w)))
    throw std::invalid_argument("solve_sca: initial decision infeasible");

  SolverReport rep;
  Decision y = init;
  double rate = sum_rate(y, s, lp);
  rep.iterates.push_back({0, rate, y});
  rep.status = SolveStatus::iteration_limit;

  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    const SurrogateContext ctx = make_context(y, s, lp);
    const auto sub = solve_subproblem_dsa(ctx, s, lp, opts);
    rep.inner_counts.push_back(sub.dual_iters);

    double rate_new = sum_rate(sub.y, s, lp);
    Decision y_new = sub.y;
    if (rate_new < rate) {  // exact-solve guard; the anchor is always a candidate
      y_new = y;
      rate_new = rate;
    }
    rep.iterates.push_back({outer, rate_new, y_new});
    const double gain = rate_new - rate;
    y = y_new;
    rate = rate_new;
    if (gain <= opts.eps0 * (1.0 + std::abs(rate_new))) {
      rep.status = SolveStatus::converged;
      break;
    }
  }
  rep.final = y;
  rep.final_rate_bps = rate;
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace jppc
