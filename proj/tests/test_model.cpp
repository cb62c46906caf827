#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "jppc/io.hpp"
#include "jppc/model.hpp"
#include "oracles.hpp"

using namespace jppc;

namespace {

Scenario single_link_scenario() {
  Scenario s;
  s.ue_positions = {{0.0, 0.0, 0.0}};
  s.bs_position = {6000.0, 0.0, 0.0};
  s.altitude_h = 100.0;
  s.beta_ref_gain = db_to_linear(-40.0);
  s.noise_psd_dbm_hz = -169.0;
  s.bandwidth_w_hz = 1e6;
  s.p_ue_max_w = {0.1995};
  s.p_uav_max_w = dbm_to_watt(36.0);
  s.p_bs_max_w = dbm_to_watt(43.0);
  s.gamma_c_linear = 100.0;
  return s;
}

}  // namespace

TEST_CASE("link_params unit arithmetic") {
  Scenario s = single_link_scenario();
  LinkParams lp = link_params(s);
  CHECK(lp.sigma2_w == doctest::Approx(1.2589254117941672e-14).epsilon(1e-12));
  CHECK(lp.xi == doctest::Approx(7943282347.242815).epsilon(1e-12));

  // 10 MHz noise bandwidth gives sigma^2 = -99 dBm and xi ~ 1e9.
  s.bandwidth_w_hz = 10e6;
  lp = link_params(s);
  CHECK(watt_to_dbm(lp.sigma2_w) == doctest::Approx(-99.0).epsilon(1e-12));
  CHECK(lp.xi / 1e9 == doctest::Approx(0.7943282347).epsilon(1e-9));

  s.beta_ref_gain = 1.0;
  s.bandwidth_w_hz = 1.0;
  s.noise_psd_dbm_hz = 30.0;  // sigma^2 = 1 W
  lp = link_params(s);
  CHECK(lp.xi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dbm round trip") {
  for (double dbm : {-99.0, 0.0, 23.0, 36.0, 43.0}) {
    CHECK(watt_to_dbm(dbm_to_watt(dbm)) == doctest::Approx(dbm).epsilon(1e-12));
  }
}

TEST_CASE("snr_uplink formula") {
  Scenario s = single_link_scenario();
  LinkParams lp = link_params(s);
  lp.xi = 7.943e9;  // pinned for the frozen value
  const Vec3 x_r{3000.0, 0.0, 100.0};

  CHECK(snr_uplink(0, x_r, 0.0, s, lp) == 0.0);
  // Frozen against a 40-digit evaluation of the same formula.
  CHECK(snr_uplink(0, x_r, 1.0, s, lp) == doctest::Approx(146.48458119974456).epsilon(1e-12));

  // P_u -> infinity approaches the relay-hop limit xi p_r^U / d_rb^2.
  Scenario s_big = s;
  s_big.p_ue_max_w = {1e12};
  const double drb2 = norm2(x_r - s.bs_position);
  CHECK(snr_uplink(0, x_r, 1.0, s_big, lp) ==
        doctest::Approx(lp.xi * 1.0 / drb2).epsilon(1e-6));
}

TEST_CASE("snr_downlink zeros and uplink symmetry") {
  Scenario s = single_link_scenario();
  const LinkParams lp = link_params(s);
  const Vec3 x_r{2500.0, 300.0, 100.0};
  CHECK(snr_downlink(0, x_r, 0.0, 1.0, s, lp) == 0.0);
  CHECK(snr_downlink(0, x_r, 1.0, 0.0, s, lp) == 0.0);

  // Swapping (u <-> b) and power roles maps downlink onto uplink.
  test::Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    Scenario a = single_link_scenario();
    a.ue_positions = {{rng.uniform(0, 2000), rng.uniform(0, 2000), 0.0}};
    a.bs_position = {rng.uniform(4000, 7000), rng.uniform(0, 2000), 0.0};
    const double pb = rng.uniform(0.01, 10.0);
    const double prd = rng.uniform(0.01, 3.0);
    const Vec3 x{rng.uniform(0, 7000), rng.uniform(0, 2000), 100.0};
    const double dn = snr_downlink(0, x, pb, prd, a, lp);

    Scenario b = a;
    std::swap(b.ue_positions[0], b.bs_position);
    b.ue_positions[0][2] = 0.0;
    b.bs_position[2] = 0.0;
    b.p_ue_max_w = {pb};
    const double up = snr_uplink(0, x, prd, b, lp);
    CHECK(dn == doctest::Approx(up).epsilon(1e-12));
  }
}

TEST_CASE("sum_rate basics") {
  test::Rng rng(11);
  Scenario s = test::random_scenario(rng, 2);
  const LinkParams lp = link_params(s);
  Decision d = test::random_feasible_decision(rng, s, lp);

  SUBCASE("zero powers give zero rate") {
    Decision z = make_decision(s);
    z.x_r = d.x_r;
    CHECK(sum_rate(z, s, lp) == 0.0);
  }

  SUBCASE("additivity over UEs") {
    double split = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      Scenario sk = s;
      sk.ue_positions = {s.ue_positions[k]};
      sk.p_ue_max_w = {s.p_ue_max_w[k]};
      Decision dk = make_decision(sk);
      dk.x_r = d.x_r;
      dk.p_r_u = {d.p_r_u[k]};
      dk.p_r_d = {d.p_r_d[k]};
      dk.p_b = {d.p_b[k]};
      split += sum_rate(dk, sk, lp);
    }
    CHECK(sum_rate(d, s, lp) == doctest::Approx(split).epsilon(1e-12));
  }

  SUBCASE("matches direct formula oracle") {
    for (int t = 0; t < 20; ++t) {
      Decision r = test::random_feasible_decision(rng, s, lp);
      const double got = sum_rate(r, s, lp);
      const double want = static_cast<double>(test::sum_rate_direct(r, s, lp));
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }

  SUBCASE("nats unit") {
    CHECK(sum_rate(d, s, lp, RateUnit::nats) ==
          doctest::Approx(sum_rate(d, s, lp) * std::numbers::ln2).epsilon(1e-12));
  }
}

TEST_CASE("sum_rate monotone in each power") {
  test::Rng rng(13);
  Scenario s = test::random_scenario(rng, 3);
  const LinkParams lp = link_params(s);
  for (int t = 0; t < 100; ++t) {
    Decision d = test::random_feasible_decision(rng, s, lp);
    const double base = sum_rate(d, s, lp);
    const std::size_t k = rng.raw() % 3;
    Decision du = d, dd = d, db = d;
    du.p_r_u[k] += 1e-4;
    dd.p_r_d[k] += 1e-4;
    db.p_b[k] += 1e-4;
    CHECK(sum_rate(du, s, lp) > base);
    CHECK(sum_rate(dd, s, lp) > base);
    CHECK(sum_rate(db, s, lp) > base);
  }
}

TEST_CASE("sum_rate invariant under UE permutation") {
  test::Rng rng(17);
  Scenario s = test::random_scenario(rng, 4);
  const LinkParams lp = link_params(s);
  Decision d = test::random_feasible_decision(rng, s, lp);
  Scenario sp = s;
  Decision dp = d;
  const std::size_t perm[4] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i) {
    sp.ue_positions[i] = s.ue_positions[perm[i]];
    sp.p_ue_max_w[i] = s.p_ue_max_w[perm[i]];
    dp.p_r_u[i] = d.p_r_u[perm[i]];
    dp.p_r_d[i] = d.p_r_d[perm[i]];
    dp.p_b[i] = d.p_b[perm[i]];
  }
  CHECK(sum_rate(dp, sp, lp) == doctest::Approx(sum_rate(d, s, lp)).epsilon(1e-12));
}

TEST_CASE("control_power") {
  Scenario s = single_link_scenario();
  LinkParams lp = link_params(s);
  lp.xi = 7.943e9;

  Scenario s0 = s;
  s0.gamma_c_linear = 0.0;
  CHECK(control_power({123.0, 45.0, 100.0}, s0, lp) == 0.0);

  const Vec3 above_bs{s.bs_position[0], s.bs_position[1], 100.0};
  CHECK(control_power(above_bs, s, lp) == doctest::Approx(1.258970162407151e-4).epsilon(1e-12));

  // ||x_r - b|| = 3000 exactly.
  const double dz = std::sqrt(3000.0 * 3000.0 - 100.0 * 100.0);
  const Vec3 x{s.bs_position[0] - dz, 0.0, 100.0};
  CHECK(control_power(x, s, lp) == doctest::Approx(0.11330731461664359).epsilon(1e-12));
}

TEST_CASE("is_feasible") {
  Scenario s = single_link_scenario();
  const LinkParams lp = link_params(s);
  Decision d = make_decision(s);
  d.x_r = {s.bs_position[0], s.bs_position[1], s.altitude_h};

  CHECK(is_feasible(d, s, lp));

  SUBCASE("UAV budget violation is reported") {
    d.p_r_u[0] = s.p_uav_max_w + 1.0;
    const auto rep = check_feasible(d, s, lp);
    CHECK(!rep.feasible);
    CHECK(rep.uav_violation_w == doctest::Approx(1.0 + control_power(d.x_r, s, lp)).epsilon(1e-9));
  }

  SUBCASE("boundary point counts as feasible") {
    const double pc = control_power(d.x_r, s, lp);
    d.p_r_u[0] = 0.5 * (s.p_uav_max_w - pc);
    d.p_r_d[0] = 0.5 * (s.p_uav_max_w - pc);
    d.p_b[0] = s.p_bs_max_w - pc;
    CHECK(is_feasible(d, s, lp, 1e-9));
  }

  SUBCASE("negative power rejected") {
    d.p_b[0] = -1e-3;
    CHECK(!is_feasible(d, s, lp));
  }
}

TEST_CASE("geometry_center") {
  Scenario s;
  s.altitude_h = 100.0;
  s.beta_ref_gain = 1e-4;
  s.bandwidth_w_hz = 1e6;
  s.p_uav_max_w = s.p_bs_max_w = 1.0;

  s.ue_positions = {{0, 0, 0}, {1000, 1000, 0}};
  s.p_ue_max_w = {1.0, 1.0};
  s.bs_position = {6500, 500, 0};
  Vec3 c = geometry_center(s);
  CHECK(c[0] == doctest::Approx(3500.0));
  CHECK(c[1] == doctest::Approx(500.0));
  CHECK(c[2] == doctest::Approx(100.0));

  s.ue_positions = {{6500, 500, 0}};
  s.p_ue_max_w = {1.0};
  c = geometry_center(s);
  CHECK(c[0] == doctest::Approx(6500.0));
  CHECK(c[1] == doctest::Approx(500.0));

  s.ue_positions = {{0, 0, 0}};
  s.bs_position = {6000, 0, 0};
  c = geometry_center(s);
  CHECK(c[0] == doctest::Approx(3000.0));
  CHECK(c[1] == doctest::Approx(0.0));
}

TEST_CASE("scenario json round trip and defaults") {
  nlohmann::json j = {
      {"ue_positions", {{100.0, 200.0}, {300.0, 400.0}}},
      {"bs_position", {6500.0, 500.0}},
  };
  Scenario s = scenario_from_json(j);
  CHECK(s.num_ue() == 2);
  CHECK(s.altitude_h == 100.0);
  CHECK(s.beta_ref_gain == doctest::Approx(1e-4));
  CHECK(s.bandwidth_w_hz == 1e6);
  CHECK(s.p_ue_max_w[0] == doctest::Approx(dbm_to_watt(23.0)));
  CHECK(s.p_uav_max_w == doctest::Approx(dbm_to_watt(36.0)));
  CHECK(s.p_bs_max_w == doctest::Approx(dbm_to_watt(43.0)));
  CHECK(s.gamma_c_linear == doctest::Approx(100.0));

  Scenario s2 = scenario_from_json(scenario_to_json(s));
  CHECK(s2.p_uav_max_w == doctest::Approx(s.p_uav_max_w).epsilon(1e-12));
  CHECK(s2.ue_positions[1][0] == doctest::Approx(300.0));

  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"bs_position", {0, 0}}}),
                  std::invalid_argument);
}

TEST_CASE("flat round trip") {
  test::Rng rng(19);
  Scenario s = test::random_scenario(rng, 3);
  const LinkParams lp = link_params(s);
  Decision d = test::random_feasible_decision(rng, s, lp);
  Decision d2 = from_flat(to_flat(d), s);
  CHECK(d2.x_r[0] == d.x_r[0]);
  CHECK(d2.p_b[2] == d.p_b[2]);
  CHECK(d2.x_r[2] == s.altitude_h);
}
