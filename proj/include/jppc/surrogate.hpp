#pragma once

// Concave lower-bound surrogates of the two-way relay sum rate:
//  - the proposed surrogate, built from first-order bounds of ||x||^2/p terms
//    and the product split xy = (x+y)^2/2 - (x^2 + y^2)/2, and
//  - the baseline surrogate in amplitude variables a = sqrt(p) with
//    linearized squared distances in the penalty denominators.
// Both are locally tight at the anchor point. The proposed one has a much
// smaller position curvature, which is what makes the SCA iterations fast;
// curvature_report() exposes the numeric comparison.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "jppc/model.hpp"

namespace jppc {

inline constexpr double kPowerFloorW = 1e-9;     // floor for anchor/evaluation powers
inline constexpr double kLogDomainGuard = 1e-12;  // minimum admissible log argument

enum class SurrogateKind { proposed, baseline };

struct SurrogateValue {
  double value = -std::numeric_limits<double>::infinity();
  bool in_domain = false;
};

struct SurrogateContext {
  Decision anchor;          // powers floored at kPowerFloorW
  Vec3 d_bar_rb{};          // anchor x_r - b
  std::vector<Vec3> d_bar_kr;
  double n_bar_rb = 0.0;    // ||d_bar_rb||^2
  std::vector<double> n_bar_kr;
  std::vector<double> i_bar_d, i_bar_u;
  std::vector<double> j_bar_d, j_bar_u;
  std::vector<double> a_bar_b, a_bar_rd, a_bar_ru;  // sqrt of anchor powers
};

inline SurrogateContext make_context(const Decision& anchor, const Scenario& s,
                                     const LinkParams& lp, double feas_rel_tol = 1e-6) {
  const double budget = std::min(s.p_uav_max_w, s.p_bs_max_w);
  if (!is_feasible(anchor, s, lp, feas_rel_tol * budget + 1e-12))
    throw std::invalid_argument("make_context: anchor infeasible");

  SurrogateContext ctx;
  ctx.anchor = anchor;
  const std::size_t k_count = s.num_ue();
  for (std::size_t k = 0; k < k_count; ++k) {
    ctx.anchor.p_r_u[k] = std::max(ctx.anchor.p_r_u[k], kPowerFloorW);
    ctx.anchor.p_r_d[k] = std::max(ctx.anchor.p_r_d[k], kPowerFloorW);
    ctx.anchor.p_b[k] = std::max(ctx.anchor.p_b[k], kPowerFloorW);
  }
  ctx.d_bar_rb = ctx.anchor.x_r - s.bs_position;
  ctx.n_bar_rb = norm2(ctx.d_bar_rb);
  ctx.d_bar_kr.resize(k_count);
  ctx.n_bar_kr.resize(k_count);
  ctx.i_bar_d.resize(k_count);
  ctx.i_bar_u.resize(k_count);
  ctx.j_bar_d.resize(k_count);
  ctx.j_bar_u.resize(k_count);
  ctx.a_bar_b.resize(k_count);
  ctx.a_bar_rd.resize(k_count);
  ctx.a_bar_ru.resize(k_count);
  const double xi = lp.xi;
  for (std::size_t k = 0; k < k_count; ++k) {
    ctx.d_bar_kr[k] = ctx.anchor.x_r - s.ue_positions[k];
    ctx.n_bar_kr[k] = norm2(ctx.d_bar_kr[k]);
    const double pb = ctx.anchor.p_b[k];
    const double prd = ctx.anchor.p_r_d[k];
    const double pru = ctx.anchor.p_r_u[k];
    const double pu = s.p_ue_max_w[k];
    const double trb_b = ctx.n_bar_rb / pb;
    const double tkr_d = ctx.n_bar_kr[k] / prd;
    ctx.i_bar_d[k] = trb_b / xi + tkr_d / xi + trb_b * tkr_d / (xi * xi);
    const double tkr_u = ctx.n_bar_kr[k] / pu;
    const double trb_u = ctx.n_bar_rb / pru;
    ctx.i_bar_u[k] = tkr_u / xi + trb_u / xi + tkr_u * trb_u / (xi * xi);
    ctx.j_bar_d[k] = xi * (prd / ctx.n_bar_kr[k] + pb / ctx.n_bar_rb);
    ctx.j_bar_u[k] = xi * (pru / ctx.n_bar_rb + pu / ctx.n_bar_kr[k]);
    ctx.a_bar_b[k] = std::sqrt(pb);
    ctx.a_bar_rd[k] = std::sqrt(prd);
    ctx.a_bar_ru[k] = std::sqrt(pru);
  }
  return ctx;
}

namespace detail {

// Per-UE pieces in natural-log units; value accumulators and optional
// gradient accumulation into the flat layout [x, y, pU(K), pD(K), pB(K)].

struct EvalScratch {
  Vec3 d_rb{};
  double n_rb = 0.0;
};

inline bool proposed_terms(std::size_t k, const Vec3& x_r, double p_ru, double p_rd, double p_b,
                           const SurrogateContext& ctx, const Scenario& s, const LinkParams& lp,
                           double& value_out, std::vector<double>* grad,
                           const EvalScratch& sc) {
  const double xi = lp.xi;
  const Vec3 d_kr = x_r - s.ue_positions[k];
  const double n_kr = norm2(d_kr);
  const Vec3& db_rb = ctx.d_bar_rb;
  const Vec3& db_kr = ctx.d_bar_kr[k];
  const double nb_rb = ctx.n_bar_rb;
  const double nb_kr = ctx.n_bar_kr[k];
  const double pb_b = ctx.anchor.p_b[k];
  const double pb_rd = ctx.anchor.p_r_d[k];
  const double pb_ru = ctx.anchor.p_r_u[k];
  const double pu = s.p_ue_max_w[k];
  const double i_d = ctx.i_bar_d[k];
  const double i_u = ctx.i_bar_u[k];

  const double dot_rb = dot(db_rb, sc.d_rb);
  const double dot_kr = dot(db_kr, d_kr);

  // Downlink block.
  const double l1 = 1.0 + (2.0 * dot_rb / pb_b - nb_rb * p_b / (pb_b * pb_b)) / xi;
  const double l2 = 1.0 + (2.0 * dot_kr / pb_rd - nb_kr * p_rd / (pb_rd * pb_rd)) / xi;
  if (l1 <= kLogDomainGuard || l2 <= kLogDomainGuard) return false;
  const double s_d = sc.n_rb / p_b + n_kr / p_rd;
  const double lin_d = (4.0 * nb_rb * dot_rb / (pb_b * pb_b) -
                        2.0 * nb_rb * nb_rb * p_b / (pb_b * pb_b * pb_b) -
                        nb_rb * nb_rb / (pb_b * pb_b)) +
                       (4.0 * nb_kr * dot_kr / (pb_rd * pb_rd) -
                        2.0 * nb_kr * nb_kr * p_rd / (pb_rd * pb_rd * pb_rd) -
                        nb_kr * nb_kr / (pb_rd * pb_rd));
  const double inv_idxi = 1.0 / (i_d * xi);
  const double inv_idxi2 = inv_idxi / xi;
  double val = std::log(l1) + std::log(l2) - std::log(i_d) + 1.0 - s_d * inv_idxi -
               0.5 * s_d * s_d * inv_idxi2 + 0.5 * lin_d * inv_idxi2;

  // Uplink block (UE power fixed at its budget P_u).
  const double l1u = 1.0 + (2.0 * dot_kr - nb_kr) / (pu * xi);
  const double l2u = 1.0 + (2.0 * dot_rb / pb_ru - nb_rb * p_ru / (pb_ru * pb_ru)) / xi;
  if (l1u <= kLogDomainGuard || l2u <= kLogDomainGuard) return false;
  const double s_u = n_kr / pu + sc.n_rb / p_ru;
  const double lin_u = (4.0 * nb_kr * dot_kr / (pu * pu) - 3.0 * nb_kr * nb_kr / (pu * pu)) +
                       (4.0 * nb_rb * dot_rb / (pb_ru * pb_ru) -
                        2.0 * nb_rb * nb_rb * p_ru / (pb_ru * pb_ru * pb_ru) -
                        nb_rb * nb_rb / (pb_ru * pb_ru));
  const double inv_iuxi = 1.0 / (i_u * xi);
  const double inv_iuxi2 = inv_iuxi / xi;
  val += std::log(l1u) + std::log(l2u) - std::log(i_u) + 1.0 - s_u * inv_iuxi -
         0.5 * s_u * s_u * inv_iuxi2 + 0.5 * lin_u * inv_iuxi2;

  value_out += val;
  if (!grad) return true;

  const std::size_t kk = s.num_ue();
  std::vector<double>& g = *grad;
  const double cd = inv_idxi + s_d * inv_idxi2;  // weight of dS_d
  const double cu = inv_iuxi + s_u * inv_iuxi2;
  // position (x, y components)
  for (int c = 0; c < 2; ++c) {
    double gx = (2.0 / (l1 * pb_b * xi)) * db_rb[c] + (2.0 / (l2 * pb_rd * xi)) * db_kr[c];
    gx -= cd * (2.0 * sc.d_rb[c] / p_b + 2.0 * d_kr[c] / p_rd);
    gx += 0.5 * inv_idxi2 *
          (4.0 * nb_rb * db_rb[c] / (pb_b * pb_b) + 4.0 * nb_kr * db_kr[c] / (pb_rd * pb_rd));
    gx += (2.0 / (l1u * pu * xi)) * db_kr[c] + (2.0 / (l2u * pb_ru * xi)) * db_rb[c];
    gx -= cu * (2.0 * d_kr[c] / pu + 2.0 * sc.d_rb[c] / p_ru);
    gx += 0.5 * inv_iuxi2 *
          (4.0 * nb_kr * db_kr[c] / (pu * pu) + 4.0 * nb_rb * db_rb[c] / (pb_ru * pb_ru));
    g[c] += gx;
  }
  // p_r_u
  g[2 + k] += -(nb_rb / (pb_ru * pb_ru)) / (l2u * xi) + cu * sc.n_rb / (p_ru * p_ru) -
              inv_iuxi2 * nb_rb * nb_rb / (pb_ru * pb_ru * pb_ru);
  // p_r_d
  g[2 + kk + k] += -(nb_kr / (pb_rd * pb_rd)) / (l2 * xi) + cd * n_kr / (p_rd * p_rd) -
                   inv_idxi2 * nb_kr * nb_kr / (pb_rd * pb_rd * pb_rd);
  // p_b
  g[2 + 2 * kk + k] += -(nb_rb / (pb_b * pb_b)) / (l1 * xi) + cd * sc.n_rb / (p_b * p_b) -
                       inv_idxi2 * nb_rb * nb_rb / (pb_b * pb_b * pb_b);
  return true;
}

// Baseline surrogate, written over amplitudes (a_ru, a_rd, a_b). grad_amp, if
// given, accumulates d/d(amplitude); grad_pow accumulates d/d(power) via the
// chain rule 1/(2a).
inline bool baseline_terms(std::size_t k, const Vec3& x_r, double a_ru, double a_rd, double a_b,
                           const SurrogateContext& ctx, const Scenario& s, const LinkParams& lp,
                           double& value_out, std::vector<double>* grad, bool grad_in_amp,
                           const EvalScratch& sc) {
  const double xi = lp.xi;
  const Vec3 d_kr = x_r - s.ue_positions[k];
  const double n_kr = norm2(d_kr);
  const Vec3& db_rb = ctx.d_bar_rb;
  const Vec3& db_kr = ctx.d_bar_kr[k];
  const double nb_rb = ctx.n_bar_rb;
  const double nb_kr = ctx.n_bar_kr[k];
  const double ab_b = ctx.a_bar_b[k];
  const double ab_rd = ctx.a_bar_rd[k];
  const double ab_ru = ctx.a_bar_ru[k];
  const double pu = s.p_ue_max_w[k];
  const double j_d = ctx.j_bar_d[k];
  const double j_u = ctx.j_bar_u[k];

  // Linearized squared distances (tangents of ||x_r - u||^2, ||x_r - b||^2).
  const double q_kr = norm2(s.ue_positions[k]) - norm2(ctx.anchor.x_r) + 2.0 * dot(db_kr, x_r);
  const double q_rb = norm2(s.bs_position) - norm2(ctx.anchor.x_r) + 2.0 * dot(db_rb, x_r);
  if (q_kr <= kLogDomainGuard || q_rb <= kLogDomainGuard) return false;

  const double l1 = 1.0 + xi * (2.0 * ab_rd * a_rd / nb_kr - ab_rd * ab_rd * n_kr / (nb_kr * nb_kr));
  const double l2 = 1.0 + xi * (2.0 * ab_b * a_b / nb_rb - ab_b * ab_b * sc.n_rb / (nb_rb * nb_rb));
  const double l1u = 1.0 + xi * (2.0 * ab_ru * a_ru / nb_rb - ab_ru * ab_ru * sc.n_rb / (nb_rb * nb_rb));
  const double l2u = 1.0 + xi * (2.0 * pu / nb_kr - pu * n_kr / (nb_kr * nb_kr));
  if (l1 <= kLogDomainGuard || l2 <= kLogDomainGuard || l1u <= kLogDomainGuard ||
      l2u <= kLogDomainGuard)
    return false;

  const double wd = xi / (1.0 + j_d);
  const double wu = xi / (1.0 + j_u);
  double val = std::log(l1) + std::log(l2) - std::log1p(j_d) + j_d / (1.0 + j_d) -
               wd * (a_rd * a_rd / q_kr + a_b * a_b / q_rb);
  val += std::log(l1u) + std::log(l2u) - std::log1p(j_u) + j_u / (1.0 + j_u) -
         wu * (a_ru * a_ru / q_rb + pu / q_kr);
  value_out += val;
  if (!grad) return true;

  const std::size_t kk = s.num_ue();
  std::vector<double>& g = *grad;
  for (int c = 0; c < 2; ++c) {
    double gx = -(xi * ab_rd * ab_rd / (nb_kr * nb_kr)) * 2.0 * d_kr[c] / l1 -
                (xi * ab_b * ab_b / (nb_rb * nb_rb)) * 2.0 * sc.d_rb[c] / l2 -
                (xi * ab_ru * ab_ru / (nb_rb * nb_rb)) * 2.0 * sc.d_rb[c] / l1u -
                (xi * pu / (nb_kr * nb_kr)) * 2.0 * d_kr[c] / l2u;
    gx += wd * (a_rd * a_rd / (q_kr * q_kr) * 2.0 * db_kr[c] +
                a_b * a_b / (q_rb * q_rb) * 2.0 * db_rb[c]);
    gx += wu * (a_ru * a_ru / (q_rb * q_rb) * 2.0 * db_rb[c] + pu / (q_kr * q_kr) * 2.0 * db_kr[c]);
    g[c] += gx;
  }
  // d/d(amplitude)
  const double ga_ru = (2.0 * xi * ab_ru / nb_rb) / l1u - wu * 2.0 * a_ru / q_rb;
  const double ga_rd = (2.0 * xi * ab_rd / nb_kr) / l1 - wd * 2.0 * a_rd / q_kr;
  const double ga_b = (2.0 * xi * ab_b / nb_rb) / l2 - wd * 2.0 * a_b / q_rb;
  if (grad_in_amp) {
    g[2 + k] += ga_ru;
    g[2 + kk + k] += ga_rd;
    g[2 + 2 * kk + k] += ga_b;
  } else {
    g[2 + k] += ga_ru / (2.0 * a_ru);
    g[2 + kk + k] += ga_rd / (2.0 * a_rd);
    g[2 + 2 * kk + k] += ga_b / (2.0 * a_b);
  }
  return true;
}

inline EvalScratch scratch_for(const Vec3& x_r, const Scenario& s) {
  EvalScratch sc;
  sc.d_rb = x_r - s.bs_position;
  sc.n_rb = norm2(sc.d_rb);
  return sc;
}

}  // namespace detail

inline SurrogateValue eval_proposed(const Decision& y, const SurrogateContext& ctx,
                                    const Scenario& s, const LinkParams& lp) {
  const auto sc = detail::scratch_for(y.x_r, s);
  double acc = 0.0;
  for (std::size_t k = 0; k < s.num_ue(); ++k) {
    const double p_ru = std::max(y.p_r_u[k], kPowerFloorW);
    const double p_rd = std::max(y.p_r_d[k], kPowerFloorW);
    const double p_b = std::max(y.p_b[k], kPowerFloorW);
    if (!detail::proposed_terms(k, y.x_r, p_ru, p_rd, p_b, ctx, s, lp, acc, nullptr, sc))
      return {};
  }
  return {rate_scale(s) * acc, true};
}

inline std::vector<double> grad_proposed(const Decision& y, const SurrogateContext& ctx,
                                         const Scenario& s, const LinkParams& lp) {
  const auto sc = detail::scratch_for(y.x_r, s);
  std::vector<double> g(flat_dim(s), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < s.num_ue(); ++k) {
    const double p_ru = std::max(y.p_r_u[k], kPowerFloorW);
    const double p_rd = std::max(y.p_r_d[k], kPowerFloorW);
    const double p_b = std::max(y.p_b[k], kPowerFloorW);
    if (!detail::proposed_terms(k, y.x_r, p_ru, p_rd, p_b, ctx, s, lp, acc, &g, sc))
      throw std::domain_error("grad_proposed: point outside surrogate domain");
  }
  const double scale = rate_scale(s);
  for (double& v : g) v *= scale;
  return g;
}

inline SurrogateValue eval_baseline(const Decision& y, const SurrogateContext& ctx,
                                    const Scenario& s, const LinkParams& lp) {
  const auto sc = detail::scratch_for(y.x_r, s);
  double acc = 0.0;
  for (std::size_t k = 0; k < s.num_ue(); ++k) {
    const double a_ru = std::sqrt(std::max(y.p_r_u[k], kPowerFloorW));
    const double a_rd = std::sqrt(std::max(y.p_r_d[k], kPowerFloorW));
    const double a_b = std::sqrt(std::max(y.p_b[k], kPowerFloorW));
    if (!detail::baseline_terms(k, y.x_r, a_ru, a_rd, a_b, ctx, s, lp, acc, nullptr, false, sc))
      return {};
  }
  return {rate_scale(s) * acc, true};
}

inline std::vector<double> grad_baseline(const Decision& y, const SurrogateContext& ctx,
                                         const Scenario& s, const LinkParams& lp) {
  const auto sc = detail::scratch_for(y.x_r, s);
  std::vector<double> g(flat_dim(s), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < s.num_ue(); ++k) {
    const double a_ru = std::sqrt(std::max(y.p_r_u[k], kPowerFloorW));
    const double a_rd = std::sqrt(std::max(y.p_r_d[k], kPowerFloorW));
    const double a_b = std::sqrt(std::max(y.p_b[k], kPowerFloorW));
    if (!detail::baseline_terms(k, y.x_r, a_ru, a_rd, a_b, ctx, s, lp, acc, &g, false, sc))
      throw std::domain_error("grad_baseline: point outside surrogate domain");
  }
  const double scale = rate_scale(s);
  for (double& v : g) v *= scale;
  return g;
}

// Amplitude-coordinate access used by the DSA inner solver for the baseline
// surrogate; flat layout [x, y, a_ru(K), a_rd(K), a_b(K)].
inline SurrogateValue eval_baseline_amp(const std::vector<double>& xa, const SurrogateContext& ctx,
                                        const Scenario& s, const LinkParams& lp) {
  const std::size_t kk = s.num_ue();
  const Vec3 x_r{xa[0], xa[1], s.altitude_h};
  const auto sc = detail::scratch_for(x_r, s);
  double acc = 0.0;
  for (std::size_t k = 0; k < kk; ++k) {
    if (!detail::baseline_terms(k, x_r, xa[2 + k], xa[2 + kk + k], xa[2 + 2 * kk + k], ctx, s, lp,
                                acc, nullptr, true, sc))
      return {};
  }
  return {rate_scale(s) * acc, true};
}

inline bool grad_baseline_amp(const std::vector<double>& xa, const SurrogateContext& ctx,
                              const Scenario& s, const LinkParams& lp, std::vector<double>& g) {
  const std::size_t kk = s.num_ue();
  const Vec3 x_r{xa[0], xa[1], s.altitude_h};
  const auto sc = detail::scratch_for(x_r, s);
  g.assign(2 + 3 * kk, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < kk; ++k) {
    if (!detail::baseline_terms(k, x_r, xa[2 + k], xa[2 + kk + k], xa[2 + 2 * kk + k], ctx, s, lp,
                                acc, &g, true, sc))
      return false;
  }
  const double scale = rate_scale(s);
  for (double& v : g) v *= scale;
  return true;
}

inline SurrogateValue eval_surrogate(SurrogateKind kind, const Decision& y,
                                     const SurrogateContext& ctx, const Scenario& s,
                                     const LinkParams& lp) {
  return kind == SurrogateKind::proposed ? eval_proposed(y, ctx, s, lp)
                                         : eval_baseline(y, ctx, s, lp);
}

inline std::vector<double> grad_surrogate(SurrogateKind kind, const Decision& y,
                                          const SurrogateContext& ctx, const Scenario& s,
                                          const LinkParams& lp) {
  return kind == SurrogateKind::proposed ? grad_proposed(y, ctx, s, lp)
                                         : grad_baseline(y, ctx, s, lp);
}

struct CurvatureReport {
  double rho_proposed = 0.0;
  double rho_baseline = 0.0;
};

// Spectral radii of the 2x2 position Hessians at the anchor, powers held at
// the anchor values. Central differences of the analytic position gradients.
inline CurvatureReport curvature_report(const SurrogateContext& ctx, const Scenario& s,
                                        const LinkParams& lp, double step_m = 0.5) {
  auto position_hessian = [&](SurrogateKind kind) {
    std::array<std::array<double, 2>, 2> h{};
    for (int i = 0; i < 2; ++i) {
      Decision yp = ctx.anchor;
      Decision ym = ctx.anchor;
      yp.x_r[i] += step_m;
      ym.x_r[i] -= step_m;
      const auto gp = grad_surrogate(kind, yp, ctx, s, lp);
      const auto gm = grad_surrogate(kind, ym, ctx, s, lp);
      for (int j = 0; j < 2; ++j) h[i][j] = (gp[j] - gm[j]) / (2.0 * step_m);
    }
    const double a = h[0][0], b = 0.5 * (h[0][1] + h[1][0]), c = h[1][1];
    const double disc = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
    return std::max(std::abs(0.5 * (a + c + disc)), std::abs(0.5 * (a + c - disc)));
  };
  CurvatureReport r;
  r.rho_proposed = position_hessian(SurrogateKind::proposed);
  r.rho_baseline = position_hessian(SurrogateKind::baseline);
  return r;
}

}  // namespace jppc
