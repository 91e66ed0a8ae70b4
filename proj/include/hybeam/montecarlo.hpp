// SPDX-License-Identifier: Apache-2.0
//
// Scenario definition, BS/user placement, the Monte Carlo realization loop,
// and metric aggregation with CSV/JSON export. Realizations are the parallel
// unit; each draws from substreams keyed by (master seed, realization index),
// results land in an index-addressed array, and aggregation runs in index
// order, so metrics are identical for any worker count.

#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybeam/channel.hpp"
#include "hybeam/ofdm.hpp"
#include "hybeam/silence.hpp"

namespace hybeam {

using json = nlohmann::json;

struct OfdmSettings {
  int n_subcarriers = 64;
  bool per_subcarrier_hw = false;
  std::optional<double> p_max_fraction;  // per-subcarrier cap fraction; default 1/N_s
  double subcarrier_bandwidth_mhz = 3.0; // metadata only
};

struct Scenario {
  int n_bs = 2;
  int n_users = 4;
  int n_antennas = 64;
  int n_rf_chains = 4;
  Architecture arch = Architecture::kFhp;
  double target_se = 4.0;    // bit/s/Hz per user
  double noise_dbm = -84.0;  // sigma_k^2
  int realizations = 500;
  std::uint64_t seed = 1;
  double area_m = 200.0;
  RunMode mode = RunMode::kAlgorithm1;
  HardwareProfile profile;   // applied to every BS
  ClusterParams cluster;
  PathLossParams pathloss;
  AlgoParams algo;
  std::optional<OfdmSettings> ofdm;
  std::vector<Eigen::Vector2d> bs_positions; // empty: canonical layout

  int effective_rf_chains() const {
    return arch == Architecture::kFdp ? n_antennas : n_rf_chains;
  }

  void validate() const {
    require(n_bs >= 1, "scenario: n_bs must be >= 1");
    require(n_users >= 1, "scenario: n_users must be >= 1");
    require(n_antennas >= 1, "scenario: n_antennas must be >= 1");
    require(realizations >= 1, "scenario: realizations must be >= 1");
    require(area_m > 0, "scenario: area must be > 0");
    require(target_se >= 0, "scenario: target_se must be >= 0");
    if (arch != Architecture::kFdp) {
      require(n_rf_chains >= 1, "scenario: n_rf_chains must be >= 1");
      require(n_users <= n_rf_chains, "scenario: needs n_users <= n_rf_chains");
      if (arch == Architecture::kPhp)
        require(n_antennas % n_rf_chains == 0, "scenario: PHP needs integer N/L");
    }
    if (ofdm) require(ofdm->n_subcarriers >= 1, "scenario: need at least one subcarrier");
    profile.validate();
    cluster.validate();
    pathloss.validate();
  }
};

// Canonical BS layouts over the 200 m x 200 m area (overridable via
// Scenario::bs_positions): 1 BS at the center, 2 at (+-50, 0), 3 adds
// (0, 50), 4 at (+-50, +-50), 5 = the 4-BS layout plus the center.
inline std::vector<Eigen::Vector2d> place_bs(int m_bs) {
  require(m_bs >= 1 && m_bs <= 5, "place_bs: supported for 1..5 BSs (use custom positions)");
  switch (m_bs) {
    case 1: return {{0.0, 0.0}};
    case 2: return {{-50.0, 0.0}, {50.0, 0.0}};
    case 3: return {{-50.0, 0.0}, {50.0, 0.0}, {0.0, 50.0}};
    case 4: return {{-50.0, -50.0}, {-50.0, 50.0}, {50.0, -50.0}, {50.0, 50.0}};
    default:
      return {{-50.0, -50.0}, {-50.0, 50.0}, {50.0, -50.0}, {50.0, 50.0}, {0.0, 0.0}};
  }
}

inline std::vector<Eigen::Vector2d> drop_users(int k_users, double area_m, Rng& rng) {
  require(k_users >= 1, "drop_users: need at least one user");
  std::vector<Eigen::Vector2d> pos(k_users);
  for (auto& p : pos) {
    p.x() = rng.uniform(-area_m / 2, area_m / 2);
    p.y() = rng.uniform(-area_m / 2, area_m / 2);
  }
  return pos;
}

struct RealizationRecord {
  SolveStatus status = SolveStatus::kNumericalFailure;
  bool numerical_taint = false; // any pattern solve failed numerically
  std::vector<int> pattern;
  std::vector<double> per_bs_tx_w;
  double p_tx_w = 0.0;
  double p_star_w = 0.0;
  double sdp_total_w = 0.0;
  int iterations = 0;
  int n_joint_users = 0;
  int n_active_bs = 0;
  double max_rank_ratio = 0.0;
  // OFDM extras
  double sum_se = 0.0;
  double energy_efficiency = 0.0;
  int sc_infeasible = 0;
};

struct Metrics {
  int realizations = 0;
  int n_feasible = 0;
  int n_infeasible = 0;
  int n_numerical_failures = 0;
  double infeasibility_prob = 0.0;
  double numerical_failure_rate = 0.0;
  double mean_sum_rf_w = 0.0;
  double mean_sum_total_w = 0.0;
  double joint_tx_prob = 0.0;
  double activation_prob = 0.0;
  double mean_iterations = 0.0;
  double mean_energy_efficiency = 0.0; // OFDM runs
  std::vector<double> rf_cdf_all;      // sorted per-BS RF power samples
  std::vector<double> rf_cdf_active;   // conditioned on the BS being active
};

namespace mc_detail {

inline RealizationRecord run_one(const Scenario& sc,
                                 const std::vector<Eigen::Vector2d>& bs_pos,
                                 const std::vector<HardwareProfile>& profiles,
                                 std::uint64_t rseed) {
  const int m_bs = static_cast<int>(bs_pos.size());
  Rng drop_rng = Rng::substream(rseed, 0, 0, 2);
  const auto users = drop_users(sc.n_users, sc.area_m, drop_rng);
  const std::vector<int> antennas(m_bs, sc.n_antennas);
  const Vec targets = Vec::Constant(sc.n_users, sc.target_se);
  const Vec noise = Vec::Constant(sc.n_users, dbm_to_watt(sc.noise_dbm));
  const int l_eff = sc.effective_rf_chains();

  RealizationRecord rec;
  if (sc.ofdm) {
    const OfdmChannelSet set = draw_ofdm_channel_set(bs_pos, users, antennas, sc.cluster,
                                                     sc.pathloss, sc.ofdm->n_subcarriers, rseed);
    OfdmOptions oo;
    oo.per_subcarrier_hw = sc.ofdm->per_subcarrier_hw;
    oo.p_max_fraction = sc.ofdm->p_max_fraction;
    const Mat tau = Mat::Constant(sc.n_users, sc.ofdm->n_subcarriers, sc.target_se);
    OfdmResult r = solve_ofdm(set, sc.arch, sc.n_antennas, l_eff, tau, noise, profiles,
                              sc.mode, sc.algo, oo);
    rec.numerical_taint = r.n_numerical_failures > 0;
    rec.status = r.n_feasible > 0 ? SolveStatus::kOptimal : SolveStatus::kInfeasible;
    if (rec.numerical_taint) rec.status = SolveStatus::kNumericalFailure;
    rec.sum_se = r.sum_se;
    rec.energy_efficiency = r.energy_efficiency;
    rec.sc_infeasible = r.n_infeasible;
    rec.p_tx_w = r.sum_tx_w;
    rec.p_star_w = r.sum_power_w;
    rec.per_bs_tx_w.assign(m_bs, 0.0);
    for (const auto& sub : r.per_subcarrier)
      if (sub.status == SolveStatus::kOptimal)
        for (int m = 0; m < m_bs; ++m) rec.per_bs_tx_w[m] += sub.per_bs_tx_w(m);
    rec.pattern.assign(m_bs, 0);
    for (int m = 0; m < m_bs; ++m) rec.pattern[m] = rec.per_bs_tx_w[m] > 0.0 ? 1 : 0;
    for (int m = 0; m < m_bs; ++m) rec.n_active_bs += rec.pattern[m];
    return rec;
  }

  const ChannelSet set =
      draw_channel_set(bs_pos, users, antennas, sc.cluster, sc.pathloss, rseed);
  std::vector<AnalogPrecoder> analog;
  analog.reserve(m_bs);
  for (int m = 0; m < m_bs; ++m) {
    if (sc.arch == Architecture::kFdp) {
      analog.push_back(analog_identity(sc.n_antennas));
    } else {
      std::vector<CVec> hk(sc.n_users);
      for (int k = 0; k < sc.n_users; ++k) hk[k] = set.h[k][m];
      analog.push_back(sc.arch == Architecture::kFhp
                           ? egt_fhp(hk, l_eff)
                           : egt_php(hk, sc.n_antennas, l_eff));
    }
  }

  AlgoResult r;
  switch (sc.mode) {
    case RunMode::kAlgorithm1:
      r = algorithm1(analog, set.h, targets, noise, profiles, sc.algo);
      break;
    case RunMode::kAlgorithm2:
      r = algorithm2(analog, set.h, targets, noise, profiles, sc.algo);
      break;
    case RunMode::kAllActive:
      r = solve_all_active(analog, set.h, targets, noise, profiles, sc.algo);
      break;
  }
  rec.status = r.status;
  rec.numerical_taint = r.n_numerical_failures > 0;
  if (rec.numerical_taint) rec.status = SolveStatus::kNumericalFailure;
  if (r.status == SolveStatus::kOptimal) {
    rec.pattern = r.pattern;
    rec.per_bs_tx_w.assign(r.per_bs_tx_w.data(), r.per_bs_tx_w.data() + m_bs);
    rec.p_tx_w = r.p_tx_star_w;
    rec.p_star_w = r.p_star_w;
    rec.sdp_total_w = r.sdp_objective_total_w;
    rec.iterations = r.iterations;
    rec.max_rank_ratio = r.max_rank_ratio;
    for (int k = 0; k < sc.n_users; ++k)
      if (r.assoc.joint_transmission(k)) ++rec.n_joint_users;
    for (int m = 0; m < m_bs; ++m) rec.n_active_bs += r.pattern[m];
  }
  return rec;
}

} // namespace mc_detail

// Runs the scenario; deterministic for a given seed independent of n_workers.
inline Metrics run(const Scenario& sc, int n_workers = 1,
                   std::vector<RealizationRecord>* log = nullptr) {
  sc.validate();
  const auto bs_pos = sc.bs_positions.empty() ? place_bs(sc.n_bs) : sc.bs_positions;
  require(static_cast<int>(bs_pos.size()) == sc.n_bs, "scenario: bs_positions size mismatch");
  const std::vector<HardwareProfile> profiles(sc.n_bs, sc.profile);

  std::vector<RealizationRecord> records(sc.realizations);
  const int workers = std::max(1, std::min(n_workers, sc.realizations));
  if (workers == 1) {
    for (int r = 0; r < sc.realizations; ++r)
      records[r] = mc_detail::run_one(sc, bs_pos, profiles, mix_key(sc.seed, r, 0, 3));
  } else {
    std::atomic<int> next{0};
    auto work = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= sc.realizations) return;
        records[r] = mc_detail::run_one(sc, bs_pos, profiles, mix_key(sc.seed, r, 0, 3));
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  Metrics m;
  m.realizations = sc.realizations;
  double sum_rf = 0.0, sum_total = 0.0, sum_iters = 0.0, sum_ee = 0.0;
  long joint = 0, active = 0;
  for (const auto& rec : records) {
    if (rec.numerical_taint || rec.status == SolveStatus::kNumericalFailure) {
      ++m.n_numerical_failures;
      continue;
    }
    if (rec.status == SolveStatus::kInfeasible) {
      ++m.n_infeasible;
      continue;
    }
    ++m.n_feasible;
    sum_rf += rec.p_tx_w;
    sum_total += rec.p_star_w;
    sum_iters += rec.iterations;
    sum_ee += rec.energy_efficiency;
    joint += rec.n_joint_users;
    active += rec.n_active_bs;
    for (size_t i = 0; i < rec.per_bs_tx_w.size(); ++i) {
      m.rf_cdf_all.push_back(rec.per_bs_tx_w[i]);
      if (rec.pattern[i]) m.rf_cdf_active.push_back(rec.per_bs_tx_w[i]);
    }
  }
  const int classified = m.n_feasible + m.n_infeasible;
  m.infeasibility_prob = classified > 0 ? double(m.n_infeasible) / classified : 0.0;
  m.numerical_failure_rate = double(m.n_numerical_failures) / sc.realizations;
  if (m.n_feasible > 0) {
    m.mean_sum_rf_w = sum_rf / m.n_feasible;
    m.mean_sum_total_w = sum_total / m.n_feasible;
    m.mean_iterations = sum_iters / m.n_feasible;
    m.mean_energy_efficiency = sum_ee / m.n_feasible;
    m.joint_tx_prob = double(joint) / (double(m.n_feasible) * sc.n_users);
    m.activation_prob = double(active) / (double(m.n_feasible) * sc.n_bs);
  }
  std::sort(m.rf_cdf_all.begin(), m.rf_cdf_all.end());
  std::sort(m.rf_cdf_active.begin(), m.rf_cdf_active.end());
  if (log) *log = std::move(records);
  return m;
}

inline void to_json(json& j, const Metrics& m) {
  j = json{{"realizations", m.realizations},
           {"n_feasible", m.n_feasible},
           {"n_infeasible", m.n_infeasible},
           {"n_numerical_failures", m.n_numerical_failures},
           {"infeasibility_prob", m.infeasibility_prob},
           {"numerical_failure_rate", m.numerical_failure_rate},
           {"mean_sum_rf_w", m.mean_sum_rf_w},
           {"mean_sum_total_w", m.mean_sum_total_w},
           {"joint_tx_prob", m.joint_tx_prob},
           {"activation_prob", m.activation_prob},
           {"mean_iterations", m.mean_iterations},
           {"mean_energy_efficiency", m.mean_energy_efficiency},
           {"rf_cdf_all", m.rf_cdf_all},
           {"rf_cdf_active", m.rf_cdf_active}};
}

inline void from_json(const json& j, Metrics& m) {
  j.at("realizations").get_to(m.realizations);
  j.at("n_feasible").get_to(m.n_feasible);
  j.at("n_infeasible").get_to(m.n_infeasible);
  j.at("n_numerical_failures").get_to(m.n_numerical_failures);
  j.at("infeasibility_prob").get_to(m.infeasibility_prob);
  j.at("numerical_failure_rate").get_to(m.numerical_failure_rate);
  j.at("mean_sum_rf_w").get_to(m.mean_sum_rf_w);
  j.at("mean_sum_total_w").get_to(m.mean_sum_total_w);
  j.at("joint_tx_prob").get_to(m.joint_tx_prob);
  j.at("activation_prob").get_to(m.activation_prob);
  j.at("mean_iterations").get_to(m.mean_iterations);
  j.at("mean_energy_efficiency").get_to(m.mean_energy_efficiency);
  j.at("rf_cdf_all").get_to(m.rf_cdf_all);
  j.at("rf_cdf_active").get_to(m.rf_cdf_active);
}

// CSV columns shared by single runs (one row) and sweeps (one row per point).
inline std::string metrics_csv_header() {
  return "sweep_param,sweep_value,realizations,n_feasible,n_infeasible,"
         "n_numerical_failures,infeasibility_prob,numerical_failure_rate,"
         "mean_sum_rf_w,mean_sum_total_w,joint_tx_prob,activation_prob,"
         "mean_iterations,mean_energy_efficiency";
}

inline std::string metrics_csv_row(const std::string& param, double value, const Metrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%.12g,%d,%d,%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g",
                param.c_str(), value, m.realizations, m.n_feasible, m.n_infeasible,
                m.n_numerical_failures, m.infeasibility_prob, m.numerical_failure_rate,
                m.mean_sum_rf_w, m.mean_sum_total_w, m.joint_tx_prob, m.activation_prob,
                m.mean_iterations, m.mean_energy_efficiency);
  return buf;
}

// Two-column CDF file: value (watts), cumulative fraction.
inline void write_cdf_csv(const std::vector<double>& sorted_samples, std::ostream& os) {
  os << "watts,cumulative_fraction\n";
  const size_t n = sorted_samples.size();
  char buf[64];
  for (size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g", sorted_samples[i],
                  double(i + 1) / double(n));
    os << buf << "\n";
  }
}

inline json realization_to_json(const RealizationRecord& r) {
  return json{{"status", to_string(r.status)},
              {"pattern", r.pattern},
              {"per_bs_tx_w", r.per_bs_tx_w},
              {"p_tx_w", r.p_tx_w},
              {"p_star_w", r.p_star_w},
              {"iterations", r.iterations},
              {"n_joint_users", r.n_joint_users},
              {"n_active_bs", r.n_active_bs},
              {"max_rank_ratio", r.max_rank_ratio},
              {"sum_se", r.sum_se},
              {"energy_efficiency", r.energy_efficiency}};
}

} // namespace hybeam
