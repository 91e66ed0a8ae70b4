// SPDX-License-Identifier: Apache-2.0
//
// Tests for the silence-pattern search, the OFDM pipeline, the Monte Carlo
// harness and the CLI command functions.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hybeam/cli.hpp"
#include "hybeam/montecarlo.hpp"
#include "hybeam/ofdm.hpp"
#include "hybeam/silence.hpp"

using namespace hybeam;
namespace fs = std::filesystem;

namespace {

CVec rand_channel(Rng& rng, int n, double scale = 1e-4) {
  CVec h(n);
  for (int i = 0; i < n; ++i) h(i) = scale * rng.cnormal();
  return h;
}

struct Net {
  std::vector<AnalogPrecoder> analog;
  std::vector<std::vector<CVec>> h;
  Vec targets, noise;
  std::vector<HardwareProfile> profiles;
};

Net make_net(Rng& rng, int k_users, int m_bs, int n, int l, double tau,
             bool zero_last_bs = false) {
  Net net;
  net.h.assign(k_users, std::vector<CVec>(m_bs));
  for (int m = 0; m < m_bs; ++m) {
    std::vector<CVec> hk(k_users);
    for (int k = 0; k < k_users; ++k) {
      hk[k] = (zero_last_bs && m == m_bs - 1) ? CVec(1e-12 * CVec::Ones(n))
                                              : rand_channel(rng, n);
      net.h[k][m] = hk[k];
    }
    net.analog.push_back(egt_fhp(hk, l));
  }
  net.targets = Vec::Constant(k_users, tau);
  net.noise = Vec::Constant(k_users, dbm_to_watt(-84.0));
  net.profiles.assign(m_bs, HardwareProfile::table1());
  return net;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("hybeam_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST_CASE("algorithm1 with one BS equals the direct solve") {
  Rng rng(61);
  Net net = make_net(rng, 2, 1, 8, 2, 3.0);
  const AlgoResult r = algorithm1(net.analog, net.h, net.targets, net.noise, net.profiles);
  REQUIRE(r.status == SolveStatus::kOptimal);
  REQUIRE(r.iterations == 1);
  REQUIRE(r.pattern == std::vector<int>{1});

  SdpProblem prob = assemble(net.analog, net.h, net.targets, net.noise, {1}, net.profiles);
  SdpSolution sol = solve(prob);
  REQUIRE(r.sdp_objective_total_w ==
          Catch::Approx(sol.objective_w + prob.kappa_w).epsilon(1e-12));
  // Reported totals agree with an independent power-model recomputation.
  double recomputed = 0.0;
  for (int m = 0; m < 1; ++m)
    recomputed += net.profiles[m].weight *
                  bs_power(r.per_bs_tx_w(m), true, Architecture::kFhp, 8, 2, net.profiles[m]);
  REQUIRE(r.p_star_w == Catch::Approx(recomputed).epsilon(1e-12));
  REQUIRE(r.p_star_w == Catch::Approx(r.sdp_objective_total_w).epsilon(1e-6));
}

TEST_CASE("algorithm1 silences a BS with no useful channels") {
  Rng rng(67);
  Net net = make_net(rng, 2, 2, 8, 2, 2.5, true);
  const AlgoResult r = algorithm1(net.analog, net.h, net.targets, net.noise, net.profiles);
  REQUIRE(r.status == SolveStatus::kOptimal);
  REQUIRE(r.iterations == 3);
  REQUIRE(r.pattern == std::vector<int>{1, 0});
  REQUIRE(r.per_bs_tx_w(1) <= 1e-8);
  // Total charges the silent BS at a * P_hw.
  const double phw = hw_power(Architecture::kFhp, 8, 2, net.profiles[1]);
  const double active_power =
      bs_power(r.per_bs_tx_w(0), true, Architecture::kFhp, 8, 2, net.profiles[0]);
  REQUIRE(r.p_star_w == Catch::Approx(active_power + 0.5 * phw).epsilon(1e-9));

  // The minimum over patterns can only improve on the all-active pattern.
  const AlgoResult aa = solve_all_active(net.analog, net.h, net.targets, net.noise,
                                         net.profiles);
  REQUIRE(aa.status == SolveStatus::kOptimal);
  REQUIRE(r.sdp_objective_total_w <= aa.sdp_objective_total_w + 1e-12);
}

TEST_CASE("algorithm2 agrees with algorithm1 on a single active BS") {
  Rng rng(71);
  for (int t = 0; t < 5; ++t) {
    Net net = make_net(rng, 2, 1, 8, 2, 3.0);
    const AlgoResult a1 = algorithm1(net.analog, net.h, net.targets, net.noise, net.profiles);
    const AlgoResult a2 = algorithm2(net.analog, net.h, net.targets, net.noise, net.profiles);
    REQUIRE(a1.status == SolveStatus::kOptimal);
    REQUIRE(a2.status == SolveStatus::kOptimal);
    REQUIRE(a2.converged);
    REQUIRE(a2.p_tx_star_w == Catch::Approx(a1.p_tx_star_w).epsilon(1e-4));
  }
}

TEST_CASE("algorithm2 drives the useless BS silent and stays above algorithm1") {
  Rng rng(73);
  Net net = make_net(rng, 2, 2, 8, 2, 2.5, true);
  const AlgoResult a2 = algorithm2(net.analog, net.h, net.targets, net.noise, net.profiles);
  REQUIRE(a2.status == SolveStatus::kOptimal);
  REQUIRE(a2.pattern == std::vector<int>{1, 0});
  REQUIRE(a2.per_bs_tx_w(1) == 0.0);

  int above = 0, total = 0;
  for (int t = 0; t < 8; ++t) {
    Net n2 = make_net(rng, 2, 2, 8, 2, 2.5);
    const AlgoResult r1 = algorithm1(n2.analog, n2.h, n2.targets, n2.noise, n2.profiles);
    const AlgoResult r2 = algorithm2(n2.analog, n2.h, n2.targets, n2.noise, n2.profiles);
    if (r1.status != SolveStatus::kOptimal || r2.status != SolveStatus::kOptimal) continue;
    ++total;
    if (r2.p_star_w >= r1.p_star_w * (1.0 - 1e-5)) ++above;
    // The true-envelope trace is nonincreasing within solver tolerance.
    for (size_t i = 1; i < r2.envelope_trace.size(); ++i)
      REQUIRE(r2.envelope_trace[i] <=
              r2.envelope_trace[i - 1] * (1.0 + 1e-6) + 1e-9);
  }
  REQUIRE(total >= 5);
  REQUIRE(above == total);
}

TEST_CASE("association extraction") {
  Rng rng(79);
  Net net = make_net(rng, 2, 2, 8, 2, 2.0);
  SdpProblem prob = assemble(net.analog, net.h, net.targets, net.noise, {1, 1}, net.profiles);

  SECTION("all-zero precoders give empty sets") {
    DigitalPrecoders dp;
    dp.d.assign(2, std::vector<CVec>(2, CVec::Zero(2)));
    const Association a = extract_association(prob.gram, dp, 1e-6);
    for (const auto& s : a.users_of_bs) REQUIRE(s.empty());
    for (const auto& s : a.bs_of_user) REQUIRE(s.empty());
  }
  SECTION("feasible single-user single-BS solve serves the user") {
    Net single = make_net(rng, 1, 1, 8, 1, 2.0);
    const AlgoResult r =
        algorithm1(single.analog, single.h, single.targets, single.noise, single.profiles);
    REQUIRE(r.status == SolveStatus::kOptimal);
    REQUIRE(r.assoc.bs_of_user[0] == std::vector<int>{0});
  }
  SECTION("sets shrink monotonically in the threshold") {
    const AlgoResult r = algorithm1(net.analog, net.h, net.targets, net.noise, net.profiles);
    REQUIRE(r.status == SolveStatus::kOptimal);
    size_t prev = SIZE_MAX;
    for (double thr : {1e-12, 1e-8, 1e-4, 1.0, 100.0}) {
      const Association a = extract_association(prob.gram, r.precoders, thr);
      size_t count = 0;
      for (const auto& s : a.users_of_bs) count += s.size();
      REQUIRE(count <= prev);
      prev = count;
    }
  }
}

TEST_CASE("kkt_check validates served pairs and rejects missing duals") {
  Rng rng(83);
  int applicable = 0;
  for (int t = 0; t < 6; ++t) {
    Net net = make_net(rng, 3, 2, 16, 3, 3.0);
    SdpProblem prob =
        assemble(net.analog, net.h, net.targets, net.noise, {1, 1}, net.profiles);
    SdpSolution sol = solve(prob);
    if (sol.status != SolveStatus::kOptimal) continue;
    const DigitalPrecoders dp = extract_precoders(sol, prob);
    const KktReport rep = kkt_check(sol, prob, dp);
    REQUIRE(rep.applicable);
    ++applicable;
    REQUIRE(rep.consistent(1e-3));

    // Zeroed duals must be reported as inconsistent for positive targets.
    SdpSolution broken = sol;
    broken.lambda.setZero();
    const KktReport bad = kkt_check(broken, prob, dp);
    REQUIRE(bad.applicable);
    REQUIRE_FALSE(bad.consistent(1e-3));
  }
  REQUIRE(applicable >= 4);

  Net net = make_net(rng, 2, 2, 8, 2, 2.0);
  SdpProblem prob = assemble(net.analog, net.h, net.targets, net.noise, {1, 0}, net.profiles);
  SdpSolution sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  const DigitalPrecoders dp = extract_precoders(sol, prob);
  const KktReport rep = kkt_check(sol, prob, dp);
  REQUIRE_FALSE(rep.applicable); // pattern is not all-active
}

TEST_CASE("association scores are invariant under analog column phase rotations") {
  Rng rng(87);
  Net net = make_net(rng, 3, 2, 16, 3, 3.0);
  SdpProblem prob = assemble(net.analog, net.h, net.targets, net.noise, {1, 1}, net.profiles);
  SdpSolution sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  const DigitalPrecoders dp = extract_precoders(sol, prob);
  const KktReport base = kkt_check(sol, prob, dp);
  REQUIRE(base.applicable);

  // Rotate each column of R_0 by an arbitrary phase: g -> U^H g, G -> U^H G U.
  SdpProblem rotated = prob;
  CVec phases(3);
  phases << std::polar(1.0, 0.7), std::polar(1.0, -1.9), std::polar(1.0, 2.4);
  const CMat u = phases.asDiagonal();
  rotated.gram[0] = u.adjoint() * prob.gram[0] * u;
  for (int k = 0; k < 3; ++k) rotated.eff[k][0] = u.adjoint() * prob.eff[k][0];
  DigitalPrecoders dpr = dp;
  for (int k = 0; k < 3; ++k) dpr.d[k][0] = u.adjoint() * dp.d[k][0];
  const KktReport rot = kkt_check(sol, rotated, dpr);
  REQUIRE(rot.applicable);
  for (int k = 0; k < 3; ++k)
    for (int m = 0; m < 2; ++m)
      REQUIRE(rot.score(k, m) == Catch::Approx(base.score(k, m)).epsilon(1e-10));
}

TEST_CASE("single-subcarrier OFDM equals the single-carrier pipeline bit for bit") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    ClusterParams cl;
    PathLossParams pl;
    const auto bs_pos = place_bs(2);
    Rng drop = Rng::substream(seed, 0, 0, 2);
    const auto users = drop_users(3, 200.0, drop);
    const std::vector<int> antennas(2, 16);
    const Vec targets = Vec::Constant(3, 3.0);
    const Vec noise = Vec::Constant(3, dbm_to_watt(-84.0));
    const std::vector<HardwareProfile> profiles(2, HardwareProfile::table1());

    const ChannelSet sc = draw_channel_set(bs_pos, users, antennas, cl, pl, seed);
    std::vector<AnalogPrecoder> analog;
    for (int m = 0; m < 2; ++m) {
      std::vector<CVec> hk(3);
      for (int k = 0; k < 3; ++k) hk[k] = sc.h[k][m];
      analog.push_back(egt_fhp(hk, 3));
    }
    const AlgoResult direct = algorithm1(analog, sc.h, targets, noise, profiles);

    const OfdmChannelSet of = draw_ofdm_channel_set(bs_pos, users, antennas, cl, pl, 1, seed);
    const OfdmResult r = solve_ofdm(of, Architecture::kFhp, 16, 3,
                                    Mat::Constant(3, 1, 3.0), noise, profiles,
                                    RunMode::kAlgorithm1);
    REQUIRE(r.per_subcarrier.size() == 1);
    const AlgoResult& sub = r.per_subcarrier[0];
    REQUIRE(sub.status == direct.status);
    if (direct.status != SolveStatus::kOptimal) continue;
    REQUIRE(sub.p_tx_star_w == direct.p_tx_star_w);
    REQUIRE(sub.p_star_w == direct.p_star_w);
    REQUIRE(sub.pattern == direct.pattern);
    for (int k = 0; k < 3; ++k)
      for (int m = 0; m < 2; ++m)
        REQUIRE(sub.precoders.d[k][m] == direct.precoders.d[k][m]);
  }
}

TEST_CASE("subcarrier permutation leaves aggregate sums unchanged") {
  ClusterParams cl;
  PathLossParams pl;
  const auto bs_pos = place_bs(1);
  Rng drop = Rng::substream(5, 0, 0, 2);
  const auto users = drop_users(2, 200.0, drop);
  const OfdmChannelSet of =
      draw_ofdm_channel_set(bs_pos, users, {8}, cl, pl, 4, 5);
  const Vec noise = Vec::Constant(2, dbm_to_watt(-84.0));
  const std::vector<HardwareProfile> profiles(1, HardwareProfile::table1());

  const OfdmResult base = solve_ofdm(of, Architecture::kFhp, 8, 2, Mat::Constant(2, 4, 2.0),
                                     noise, profiles, RunMode::kAlgorithm1);

  OfdmChannelSet perm = of;
  const std::vector<int> order{2, 0, 3, 1};
  for (int k = 0; k < 2; ++k)
    for (int m = 0; m < 1; ++m)
      for (int ns = 0; ns < 4; ++ns) perm.h[k][m][ns] = of.h[k][m][order[ns]];
  const OfdmResult shuffled = solve_ofdm(perm, Architecture::kFhp, 8, 2,
                                         Mat::Constant(2, 4, 2.0), noise, profiles,
                                         RunMode::kAlgorithm1);
  REQUIRE(shuffled.sum_se == Catch::Approx(base.sum_se).epsilon(1e-12));
  REQUIRE(shuffled.sum_tx_w == Catch::Approx(base.sum_tx_w).epsilon(1e-12));
  REQUIRE(shuffled.sum_power_w == Catch::Approx(base.sum_power_w).epsilon(1e-12));
  // Per-subcarrier results permute along with the inputs.
  for (int ns = 0; ns < 4; ++ns)
    REQUIRE(shuffled.per_subcarrier[ns].p_tx_star_w ==
            Catch::Approx(base.per_subcarrier[order[ns]].p_tx_star_w).epsilon(1e-9));
}

TEST_CASE("OFDM feasible subcarriers meet their rate targets with one shared precoder") {
  ClusterParams cl;
  PathLossParams pl;
  const auto bs_pos = place_bs(2);
  Rng drop = Rng::substream(8, 0, 0, 2);
  const auto users = drop_users(2, 200.0, drop);
  const OfdmChannelSet of =
      draw_ofdm_channel_set(bs_pos, users, {16, 16}, cl, pl, 5, 8);
  const Vec noise = Vec::Constant(2, dbm_to_watt(-84.0));
  const std::vector<HardwareProfile> profiles(2, HardwareProfile::table1());
  const OfdmResult r = solve_ofdm(of, Architecture::kFhp, 16, 2, Mat::Constant(2, 5, 2.5),
                                  noise, profiles, RunMode::kAlgorithm1);
  REQUIRE(r.n_feasible >= 1);
  REQUIRE(r.analog.size() == 2);
  for (const auto& sub : r.per_subcarrier) {
    if (sub.status != SolveStatus::kOptimal) continue;
    for (int k = 0; k < 2; ++k) REQUIRE(sub.rates(k) >= 2.5 - 1e-4);
  }
  // Energy efficiency consistency with its own definition.
  REQUIRE(r.energy_efficiency == Catch::Approx(r.sum_se / r.sum_power_w).epsilon(1e-15));
}

TEST_CASE("zero OFDM targets give zero energy efficiency") {
  ClusterParams cl;
  PathLossParams pl;
  const auto bs_pos = place_bs(1);
  Rng drop = Rng::substream(6, 0, 0, 2);
  const auto users = drop_users(2, 200.0, drop);
  const OfdmChannelSet of = draw_ofdm_channel_set(bs_pos, users, {8}, cl, pl, 3, 6);
  const Vec noise = Vec::Constant(2, dbm_to_watt(-84.0));
  const std::vector<HardwareProfile> profiles(1, HardwareProfile::table1());
  const OfdmResult r = solve_ofdm(of, Architecture::kFhp, 8, 2, Mat::Zero(2, 3), noise,
                                  profiles, RunMode::kAlgorithm1);
  REQUIRE(r.sum_tx_w <= 1e-9);
  REQUIRE(r.energy_efficiency == 0.0);
  REQUIRE(r.sum_power_w > 0.0);
}

TEST_CASE("energy efficiency is the plain ratio and scales with the numerator") {
  OfdmResult r;
  r.sum_se = 4.0;
  r.sum_power_w = 20.0;
  REQUIRE(energy_efficiency(r) == Catch::Approx(0.2).epsilon(1e-15));
  r.sum_se *= 2.0;
  REQUIRE(energy_efficiency(r) == Catch::Approx(0.4).epsilon(1e-15));
  r.sum_power_w = 0.0;
  REQUIRE_THROWS_AS(energy_efficiency(r), std::invalid_argument);
}

TEST_CASE("BS placement follows the canonical layouts") {
  REQUIRE(place_bs(1) == std::vector<Eigen::Vector2d>{{0.0, 0.0}});
  const auto two = place_bs(2);
  REQUIRE(two[0] == -two[1]); // symmetric about the center
  const auto four = place_bs(4);
  const auto five = place_bs(5);
  for (int i = 0; i < 4; ++i) REQUIRE(five[i] == four[i]);
  REQUIRE(five[4] == Eigen::Vector2d(0.0, 0.0));
  REQUIRE_THROWS_AS(place_bs(0), std::invalid_argument);
  REQUIRE_THROWS_AS(place_bs(6), std::invalid_argument);
}

TEST_CASE("user drops are uniform, in bounds and reproducible") {
  Rng a(91), b(91);
  const auto d1 = drop_users(5, 200.0, a);
  const auto d2 = drop_users(5, 200.0, b);
  for (int i = 0; i < 5; ++i) REQUIRE(d1[i] == d2[i]);

  Rng rng(92);
  double mx = 0.0, my = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto p = drop_users(1, 200.0, rng)[0];
    REQUIRE(std::abs(p.x()) <= 100.0);
    REQUIRE(std::abs(p.y()) <= 100.0);
    mx += p.x();
    my += p.y();
  }
  // Standard error of the mean is 100/sqrt(3n) ~ 0.41; allow 3 sigma.
  REQUIRE(std::abs(mx / n) <= 3 * 100.0 / std::sqrt(3.0 * n));
  REQUIRE(std::abs(my / n) <= 3 * 100.0 / std::sqrt(3.0 * n));
}

TEST_CASE("monte carlo run: zero targets and single realizations") {
  Scenario sc;
  sc.n_bs = 1;
  sc.n_users = 2;
  sc.n_antennas = 8;
  sc.n_rf_chains = 2;
  sc.arch = Architecture::kFhp;
  sc.realizations = 10;
  sc.seed = 33;

  SECTION("zero targets: no infeasibility, zero RF power") {
    sc.target_se = 0.0;
    const Metrics m = run(sc);
    REQUIRE(m.infeasibility_prob == 0.0);
    REQUIRE(m.mean_sum_rf_w <= 1e-12);
  }
  SECTION("one realization reproduces the direct algorithm result") {
    sc.target_se = 3.0;
    sc.realizations = 1;
    std::vector<RealizationRecord> log;
    const Metrics m = run(sc, 1, &log);
    REQUIRE(log.size() == 1);

    const std::uint64_t rseed = mix_key(sc.seed, 0, 0, 3);
    Rng drop = Rng::substream(rseed, 0, 0, 2);
    const auto users = drop_users(2, 200.0, drop);
    const ChannelSet set =
        draw_channel_set(place_bs(1), users, {8}, sc.cluster, sc.pathloss, rseed);
    std::vector<CVec> hk{set.h[0][0], set.h[1][0]};
    std::vector<AnalogPrecoder> analog{egt_fhp(hk, 2)};
    const AlgoResult direct =
        algorithm1(analog, set.h, Vec::Constant(2, 3.0),
                   Vec::Constant(2, dbm_to_watt(-84.0)),
                   std::vector<HardwareProfile>(1, sc.profile));
    REQUIRE(log[0].status == direct.status);
    if (direct.status == SolveStatus::kOptimal) {
      REQUIRE(m.mean_sum_rf_w == direct.p_tx_star_w);
      REQUIRE(m.mean_sum_total_w == direct.p_star_w);
    }
  }
}

TEST_CASE("monte carlo metrics are worker-count invariant") {
  Scenario sc;
  sc.n_bs = 2;
  sc.n_users = 3;
  sc.n_antennas = 8;
  sc.n_rf_chains = 3;
  sc.arch = Architecture::kFhp;
  sc.target_se = 2.0;
  sc.realizations = 24;
  sc.seed = 44;
  const Metrics m1 = run(sc, 1);
  const Metrics m2 = run(sc, 2);
  const Metrics m4 = run(sc, 4);
  REQUIRE(metrics_csv_row("none", 0, m1) == metrics_csv_row("none", 0, m2));
  REQUIRE(metrics_csv_row("none", 0, m1) == metrics_csv_row("none", 0, m4));
  REQUIRE(m1.mean_sum_rf_w == m2.mean_sum_rf_w);
  REQUIRE(m1.rf_cdf_all == m4.rf_cdf_all);

  // CDF samples are sorted (nondecreasing cumulative plot).
  for (size_t i = 1; i < m1.rf_cdf_all.size(); ++i)
    REQUIRE(m1.rf_cdf_all[i] >= m1.rf_cdf_all[i - 1]);
}

TEST_CASE("metrics JSON round-trips exactly") {
  Scenario sc;
  sc.n_bs = 1;
  sc.n_users = 2;
  sc.n_antennas = 8;
  sc.n_rf_chains = 2;
  sc.arch = Architecture::kFhp;
  sc.target_se = 2.5;
  sc.realizations = 6;
  sc.seed = 55;
  const Metrics m = run(sc);
  const json j = m;
  const std::string text = j.dump();
  const Metrics back = json::parse(text).get<Metrics>();
  REQUIRE(back.mean_sum_rf_w == m.mean_sum_rf_w);
  REQUIRE(back.mean_sum_total_w == m.mean_sum_total_w);
  REQUIRE(back.infeasibility_prob == m.infeasibility_prob);
  REQUIRE(back.rf_cdf_all == m.rf_cdf_all);
  REQUIRE(back.rf_cdf_active == m.rf_cdf_active);
}

TEST_CASE("config parsing reports missing and invalid fields by name") {
  json cfg;
  cfg["scenario"] = {{"n_bs", 1},         {"n_users", 2},    {"n_antennas", 8},
                     {"n_rf_chains", 2},  {"architecture", "fhp"},
                     {"target_se_bps_hz", 2.0}, {"realizations", 3}};
  REQUIRE_NOTHROW(parse_config(cfg));

  json missing = cfg;
  missing["scenario"].erase("realizations");
  try {
    parse_config(missing);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("scenario.realizations") != std::string::npos);
  }

  json bad_arch = cfg;
  bad_arch["scenario"]["architecture"] = "xyz";
  REQUIRE_THROWS_AS(parse_config(bad_arch), ConfigError);

  json bad_php = cfg;
  bad_php["scenario"]["architecture"] = "php";
  bad_php["scenario"]["n_antennas"] = 9;
  REQUIRE_THROWS_AS(parse_config(bad_php), ConfigError);

  // Overrides apply before validation.
  CliOverrides ov;
  ov.seed = 99;
  const RunConfig rc = parse_config(cfg, ov);
  REQUIRE(rc.scenario.seed == 99);
}

TEST_CASE("cmd_run writes the documented output files") {
  const fs::path out = temp_dir("run");
  json cfg;
  cfg["scenario"] = {{"n_bs", 1},        {"n_users", 2},          {"n_antennas", 8},
                     {"n_rf_chains", 2}, {"architecture", "fhp"},
                     {"target_se_bps_hz", 2.0}, {"realizations", 4}, {"seed", 7}};
  cfg["output"] = {{"dir", out.string()}, {"write_realizations", true}};
  std::ostringstream log;
  const RunConfig rc = parse_config(cfg);
  REQUIRE(cmd_run(rc, 1, log) == 0);
  REQUIRE(fs::exists(out / "config.json"));
  REQUIRE(fs::exists(out / "metrics.csv"));
  REQUIRE(fs::exists(out / "metrics.json"));
  REQUIRE(fs::exists(out / "cdf_rf_all.csv"));
  REQUIRE(fs::exists(out / "cdf_rf_active.csv"));
  REQUIRE(fs::exists(out / "realizations.jsonl"));

  std::ifstream csv(out / "metrics.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == 2); // header + one data row

  // The config echo reproduces the run exactly.
  const RunConfig again = load_config((out / "config.json").string());
  REQUIRE(again.scenario.seed == rc.scenario.seed);
  REQUIRE(again.scenario.n_bs == rc.scenario.n_bs);

  int jsonl_rows = 0;
  std::ifstream jl(out / "realizations.jsonl");
  while (std::getline(jl, line))
    if (!line.empty()) ++jsonl_rows;
  REQUIRE(jsonl_rows == 4);
}

TEST_CASE("cmd_sweep emits one row per point with monotone RF power in tau") {
  const fs::path out = temp_dir("sweep");
  json cfg;
  cfg["scenario"] = {{"n_bs", 2},        {"n_users", 2},          {"n_antennas", 8},
                     {"n_rf_chains", 2}, {"architecture", "fhp"},
                     {"target_se_bps_hz", 1.0}, {"realizations", 12}, {"seed", 11}};
  cfg["channel"] = {{"blockage_beta_per_m", 0.0}};
  cfg["sweep"] = {{"parameter", "target_se_bps_hz"}, {"values", {1, 2, 3, 4, 5, 6, 7}}};
  cfg["output"] = {{"dir", out.string()}};
  std::ostringstream log;
  REQUIRE(cmd_sweep(parse_config(cfg), 2, log) == 0);

  std::ifstream csv(out / "metrics.csv");
  std::string line;
  std::getline(csv, line); // header
  std::vector<double> rf;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    // mean_sum_rf_w is the 9th column
    std::stringstream ss(line);
    std::string field;
    for (int i = 0; i < 9; ++i) std::getline(ss, field, ',');
    rf.push_back(std::stod(field));
  }
  REQUIRE(rf.size() == 7);
  for (size_t i = 1; i < rf.size(); ++i) REQUIRE(rf[i] >= rf[i - 1] * (1.0 - 1e-9));
}

TEST_CASE("cmd_beam_pattern writes normalized per-architecture files") {
  const fs::path out = temp_dir("beam");
  json cfg;
  cfg["scenario"] = {{"n_bs", 2},        {"n_users", 4},          {"n_antennas", 16},
                     {"n_rf_chains", 4}, {"architecture", "fhp"},
                     {"target_se_bps_hz", 4.0}, {"realizations", 1}, {"seed", 1}};
  cfg["beam_pattern"] = {{"grid_step_deg", 0.5}};
  cfg["output"] = {{"dir", out.string()}};
  std::ostringstream log;
  REQUIRE(cmd_beam_pattern(parse_config(cfg), log) == 0);
  for (const char* arch : {"fdp", "fhp", "php"})
    for (int m = 0; m < 2; ++m) {
      const fs::path f = out / (std::string("beam_") + arch + "_bs" + std::to_string(m) +
                                ".csv");
      REQUIRE(fs::exists(f));
      std::ifstream is(f);
      std::string line;
      std::getline(is, line); // header
      double peak = -1e30;
      while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto pos = line.rfind(',');
        peak = std::max(peak, std::stod(line.substr(pos + 1)));
      }
      REQUIRE(peak == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("FHP main lobes land within 2 degrees of the FDP lobes") {
  Scenario sc;
  sc.n_bs = 2;
  sc.n_users = 4;
  sc.n_antennas = 32;
  sc.n_rf_chains = 4;
  sc.target_se = 4.0;
  BeamPatternSpec spec;
  spec.grid_step_deg = 0.5;
  spec.architectures = {Architecture::kFdp, Architecture::kFhp};
  const auto patterns = compute_beam_patterns(sc, spec);
  REQUIRE(patterns.size() == 4); // 2 architectures x 2 BSs

  auto peak_angle = [&](const BeamPatternData& bp, int k) {
    int arg = 0;
    bp.user_gain_db.col(k).maxCoeff(&arg);
    return bp.angle_deg(arg);
  };
  for (int m = 0; m < 2; ++m) {
    const auto& fdp = patterns[m];
    const auto& fhp = patterns[2 + m];
    REQUIRE(fdp.arch == Architecture::kFdp);
    REQUIRE(fhp.arch == Architecture::kFhp);
    for (int k = 0; k < 4; ++k) {
      // Compare only beams that carry meaningful power in both architectures.
      if (fdp.user_gain_db.col(k).maxCoeff() < -20.0) continue;
      if (fhp.user_gain_db.col(k).maxCoeff() < -20.0) continue;
      REQUIRE(std::abs(peak_angle(fdp, k) - peak_angle(fhp, k)) <= 2.0);
    }
  }
}

TEST_CASE("single-ray beam peaks near the departure angle") {
  Scenario sc;
  sc.n_bs = 1;
  sc.n_users = 1;
  sc.n_antennas = 32;
  sc.n_rf_chains = 1;
  sc.target_se = 4.0;
  BeamPatternSpec spec;
  spec.aod_deg = {-37.0};
  spec.grid_step_deg = 0.5;
  spec.architectures = {Architecture::kFhp};
  const auto patterns = compute_beam_patterns(sc, spec);
  REQUIRE(patterns.size() == 1);
  int arg = 0;
  patterns[0].user_gain_db.col(0).maxCoeff(&arg);
  REQUIRE(std::abs(patterns[0].angle_deg(arg) - (-37.0)) <= 2.0);
}

TEST_CASE("cli binary end-to-end exit codes") {
#ifdef HYBEAM_CLI_PATH
  const std::string bin = HYBEAM_CLI_PATH;
  REQUIRE(std::system((bin + " validate > /dev/null").c_str()) == 0);

  const fs::path dir = temp_dir("cli");
  const fs::path cfgp = dir / "cfg.json";
  {
    json cfg;
    cfg["scenario"] = {{"n_bs", 1},        {"n_users", 2},          {"n_antennas", 8},
                       {"n_rf_chains", 2}, {"architecture", "fhp"},
                       {"target_se_bps_hz", 2.0}, {"realizations", 2}, {"seed", 3}};
    cfg["output"] = {{"dir", (dir / "out").string()}};
    std::ofstream(cfgp) << cfg.dump();
  }
  REQUIRE(std::system((bin + " run --config " + cfgp.string() + " > /dev/null").c_str()) == 0);

  // Missing required field: exit code 1.
  const fs::path badp = dir / "bad.json";
  {
    json cfg;
    cfg["scenario"] = {{"n_bs", 1}};
    std::ofstream(badp) << cfg.dump();
  }
  const int rc = std::system((bin + " run --config " + badp.string() + " 2> /dev/null").c_str());
  REQUIRE(WEXITSTATUS(rc) == 1);

  const int rc2 = std::system((bin + " run --config /nonexistent.json 2> /dev/null").c_str());
  REQUIRE(WEXITSTATUS(rc2) == 1);

  // Unwritable output directory: runtime error, exit code 2.
  const int rc3 = std::system(
      (bin + " run --config " + cfgp.string() + " --out /dev/null/x > /dev/null 2>&1").c_str());
  REQUIRE(WEXITSTATUS(rc3) == 2);
#else
  SUCCEED("CLI path not wired");
#endif
}
