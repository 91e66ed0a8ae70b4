// SPDX-License-Identifier: Apache-2.0
//
// OFDM extension: one analog precoder per BS built from the subcarrier-summed
// channel, independent per-subcarrier digital solves, and the
// energy-efficiency metric (sum spectral efficiency over sum BS power).

#pragma once

#include <optional>
#include <vector>

#include "hybeam/analog.hpp"
#include "hybeam/channel.hpp"
#include "hybeam/common.hpp"
#include "hybeam/silence.hpp"

namespace hybeam {

enum class RunMode { kAlgorithm1, kAlgorithm2, kAllActive };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::kAlgorithm1: return "algorithm1";
    case RunMode::kAlgorithm2: return "algorithm2";
    case RunMode::kAllActive: return "all-active";
  }
  return "?";
}

struct OfdmOptions {
  // Per-subcarrier power cap = p_max_fraction * P_max; defaults to 1/N_s.
  std::optional<double> p_max_fraction;
  // Charge hardware power per subcarrier in the efficiency denominator
  // instead of once per BS.
  bool per_subcarrier_hw = false;
};

struct OfdmResult {
  std::vector<AlgoResult> per_subcarrier;   // length N_s
  std::vector<AnalogPrecoder> analog;       // shared across subcarriers
  EgtOfdmDiag analog_diag;
  double sum_se = 0.0;                      // sum_k sum_ns Gamma_k[ns], feasible subcarriers
  double sum_tx_w = 0.0;                    // total RF power over subcarriers
  double sum_power_w = 0.0;                 // sum_m P_m (hardware counted per the hw rule)
  double energy_efficiency = 0.0;           // sum_se / sum_power
  int n_feasible = 0;
  int n_infeasible = 0;
  int n_numerical_failures = 0;
};

// Per-subcarrier digital solves with a shared analog precoder. targets is
// K x N_s (per user, per subcarrier).
inline OfdmResult solve_ofdm(const OfdmChannelSet& set, Architecture arch, int n_antennas,
                             int n_rf, const Mat& targets, const Vec& noise_w,
                             const std::vector<HardwareProfile>& profiles, RunMode mode,
                             const AlgoParams& params = {}, const OfdmOptions& oopts = {}) {
  const int k_users = static_cast<int>(set.h.size());
  require(k_users >= 1, "solve_ofdm: no users");
  const int m_bs = static_cast<int>(set.h.front().size());
  const int n_sc = set.n_subcarriers;
  require(targets.rows() == k_users && targets.cols() == n_sc,
          "solve_ofdm: targets must be K x N_s");

  OfdmResult out;
  out.analog.reserve(m_bs);
  for (int m = 0; m < m_bs; ++m) {
    if (arch == Architecture::kFdp) {
      out.analog.push_back(analog_identity(n_antennas));
      continue;
    }
    std::vector<std::vector<CVec>> per_user(k_users);
    for (int k = 0; k < k_users; ++k) per_user[k] = set.h[k][m];
    EgtOfdmDiag diag;
    out.analog.push_back(egt_ofdm(per_user, arch, n_antennas, n_rf, &diag));
    for (int k : diag.degenerate_users) out.analog_diag.degenerate_users.push_back(k);
  }

  const double frac = oopts.p_max_fraction ? *oopts.p_max_fraction : 1.0 / n_sc;
  std::vector<HardwareProfile> sc_profiles = profiles;
  for (auto& p : sc_profiles) p.p_max_w *= frac;

  out.per_subcarrier.resize(n_sc);
  for (int ns = 0; ns < n_sc; ++ns) {
    std::vector<std::vector<CVec>> h(k_users, std::vector<CVec>(m_bs));
    for (int k = 0; k < k_users; ++k)
      for (int m = 0; m < m_bs; ++m) h[k][m] = set.h[k][m][ns];
    const Vec tau = targets.col(ns);
    AlgoResult r;
    switch (mode) {
      case RunMode::kAlgorithm1:
        r = algorithm1(out.analog, h, tau, noise_w, sc_profiles, params);
        break;
      case RunMode::kAlgorithm2:
        r = algorithm2(out.analog, h, tau, noise_w, sc_profiles, params);
        break;
      case RunMode::kAllActive:
        r = solve_all_active(out.analog, h, tau, noise_w, sc_profiles, params);
        break;
    }
    out.per_subcarrier[ns] = std::move(r);
  }

  Vec tx_per_bs = Vec::Zero(m_bs);
  std::vector<char> hw_active(m_bs, 0);
  for (const auto& r : out.per_subcarrier) {
    if (r.status == SolveStatus::kOptimal) {
      ++out.n_feasible;
      out.sum_se += r.rates.sum();
      out.sum_tx_w += r.p_tx_star_w;
      for (int m = 0; m < m_bs; ++m) {
        tx_per_bs(m) += r.per_bs_tx_w(m);
        if (r.per_bs_tx_w(m) > 0.0) hw_active[m] = 1;
      }
    } else if (r.status == SolveStatus::kInfeasible) {
      ++out.n_infeasible;
    } else {
      ++out.n_numerical_failures;
    }
  }

  // Energy-efficiency denominator. A BS is active if it transmits on at
  // least one subcarrier; hardware power is charged once per BS, or per
  // subcarrier when per_subcarrier_hw is set.
  out.sum_power_w = 0.0;
  for (int m = 0; m < m_bs; ++m) {
    const auto& prof = profiles[m];
    const double phw = hw_power(arch, out.analog[m].n_antennas(), out.analog[m].n_rf(), prof);
    const double hw_units = oopts.per_subcarrier_hw ? static_cast<double>(n_sc) : 1.0;
    if (hw_active[m])
      out.sum_power_w += prof.weight * (prof.eta_prime() * tx_per_bs(m) + hw_units * phw);
    else
      out.sum_power_w += prof.weight * prof.silent_scalar * hw_units * phw;
  }
  out.energy_efficiency = out.sum_power_w > 0.0 ? out.sum_se / out.sum_power_w : 0.0;
  return out;
}

// E = sum_k sum_ns Gamma_k[ns] / sum_m P_m for an existing result.
inline double energy_efficiency(const OfdmResult& result) {
  require(result.sum_power_w > 0.0, "energy_efficiency: zero total power");
  return result.sum_se / result.sum_power_w;
}

} // namespace hybeam
