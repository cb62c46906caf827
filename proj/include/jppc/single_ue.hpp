#pragma once

// Semi-analytical solver for the single-UE case: the optimal UAV position
// lies on the segment between the UE and the BS, so the problem collapses to
// a 1-D search over the along-segment offset alpha, with a concave inner
// power-split problem on the relay budget line. The BS power is pinned at
// its budget net of control power.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jppc/model.hpp"

namespace jppc {

struct SegmentParam {
  double alpha = 0.0;  // meters from the UE toward the BS
  double m = 0.0;      // horizontal UE-BS distance
  Vec3 s_hat{};        // unit direction from UE to BS (horizontal)
};

struct SingleUeOptions {
  std::size_t grid_points = 200;
  double alpha_tol_m = 1e-3;   // outer golden-section stop width
  double split_tol_rel = 1e-9; // inner stop width relative to the budget
};

// Golden-section maximization of a unimodal f on [lo, hi].
template <typename F>
inline double golden_section_max(F&& f, double lo, double hi, double tol,
                                 int max_iter = 200) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? x1 : x2;
}

namespace detail {

struct SplitResult {
  double p_r_u = 0.0;
  double p_r_d = 0.0;
  double rate = -std::numeric_limits<double>::infinity();
  bool feasible = false;
};

inline double single_ue_rate(double p_ru, double p_rd, double p_b, double d_ur2, double d_rb2,
                             const Scenario& s, const LinkParams& lp) {
  const double xi = lp.xi;
  const double pu = s.p_ue_max_w[0];
  const double snr_u = xi * p_ru * pu / (p_ru * d_ur2 + pu * d_rb2 + d_ur2 * d_rb2 / xi);
  const double snr_d = xi * p_rd * p_b / (p_rd * d_rb2 + p_b * d_ur2 + d_ur2 * d_rb2 / xi);
  return rate_scale(s) * (std::log1p(snr_u) + std::log1p(snr_d));
}

}  // namespace detail

// Optimal relay power split at a fixed alpha; p_b is eliminated at its
// budget. Returns feasible=false when either budget is exhausted by the
// control power.
inline detail::SplitResult inner_power_split(double alpha, const Scenario& s,
                                             const LinkParams& lp,
                                             const SingleUeOptions& opts = {}) {
  detail::SplitResult r;
  const Vec3 u = s.ue_positions[0];
  const Vec3 b = s.bs_position;
  const double dx = b[0] - u[0], dy = b[1] - u[1];
  const double m = std::sqrt(dx * dx + dy * dy);
  const double h2 = s.altitude_h * s.altitude_h;
  const double d_ur2 = alpha * alpha + h2;
  const double d_rb2 = (m - alpha) * (m - alpha) + h2;
  const double pc = s.gamma_c_linear / lp.xi * d_rb2;
  const double budget_r = s.p_uav_max_w - pc;
  const double p_b = s.p_bs_max_w - pc;
  if (budget_r <= 0.0 || p_b <= 0.0) return r;

  auto rate_at = [&](double p_ru) {
    return detail::single_ue_rate(p_ru, budget_r - p_ru, p_b, d_ur2, d_rb2, s, lp);
  };
  const double p_ru = golden_section_max(rate_at, 0.0, budget_r,
                                         opts.split_tol_rel * budget_r);
  r.p_r_u = p_ru;
  r.p_r_d = budget_r - p_ru;
  r.rate = rate_at(p_ru);
  r.feasible = true;
  return r;
}

inline SolverReport solve_single_ue(const Scenario& s, const SingleUeOptions& opts = {}) {
  if (s.num_ue() != 1) throw std::invalid_argument("solve_single_ue: needs exactly one UE");
  const auto t0 = std::chrono::steady_clock::now();
  const LinkParams lp = link_params(s);

  const Vec3 u = s.ue_positions[0];
  const Vec3 b = s.bs_position;
  const double dx = b[0] - u[0], dy = b[1] - u[1];
  const double m = std::sqrt(dx * dx + dy * dy);

  SolverReport rep;
  auto rate_of_alpha = [&](double alpha) {
    const auto sp = inner_power_split(alpha, s, lp, opts);
    return sp.feasible ? sp.rate : -std::numeric_limits<double>::infinity();
  };

  // Grid pass: the outer profile can be multimodal, so bracket the best grid
  // point before refining.
  const std::size_t n = std::max<std::size_t>(opts.grid_points, 3);
  double best_alpha = -1.0;
  double best_rate = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double alpha = m * static_cast<double>(i) / static_cast<double>(n - 1);
    const double rr = rate_of_alpha(alpha);
    if (rr > best_rate) {
      best_rate = rr;
      best_alpha = alpha;
    }
  }
  if (!std::isfinite(best_rate)) {
    rep.status = SolveStatus::infeasible_input;
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }

  const double step = m / static_cast<double>(n - 1);
  const double lo = std::max(0.0, best_alpha - step);
  const double hi = std::min(m, best_alpha + step);
  double alpha = golden_section_max(rate_of_alpha, lo, hi, opts.alpha_tol_m);
  if (rate_of_alpha(best_alpha) > rate_of_alpha(alpha)) alpha = best_alpha;

  const auto sp = inner_power_split(alpha, s, lp, opts);
  Decision d = make_decision(s);
  const double inv_m = m > 0.0 ? 1.0 / m : 0.0;
  d.x_r = {u[0] + alpha * dx * inv_m, u[1] + alpha * dy * inv_m, s.altitude_h};
  d.p_r_u[0] = sp.p_r_u;
  d.p_r_d[0] = sp.p_r_d;
  d.p_b[0] = s.p_bs_max_w - control_power(d.x_r, s, lp);

  rep.final = d;
  rep.final_rate_bps = sum_rate(d, s, lp);
  rep.status = SolveStatus::converged;
  rep.iterates.push_back({0, rep.final_rate_bps, d});
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace jppc
