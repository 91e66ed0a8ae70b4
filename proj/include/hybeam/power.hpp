// SPDX-License-Identifier: Apache-2.0
//
// BS power accounting: RF transmit power, hardware power per precoding
// architecture, and silent-mode totals.

#pragma once

#include <vector>

#include "hybeam/common.hpp"

namespace hybeam {

enum class Architecture { kFdp, kFhp, kPhp };

inline const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::kFdp: return "fdp";
    case Architecture::kFhp: return "fhp";
    case Architecture::kPhp: return "php";
  }
  return "?";
}

struct HardwareProfile {
  double p_ps_w = 0.040;        // per phase shifter
  double p_dac_w = 0.200;       // per RF chain
  double p_rf_w = 0.040;        // per RF chain
  double loss_factor = 0.15;    // Delta in [0,1)
  double pa_efficiency = 0.3;   // eta in (0,1]
  double silent_scalar = 0.5;   // a in [0,1]
  double p_max_w = dbm_to_watt(55.0);
  double weight = 1.0;          // b_m > 0

  void validate() const {
    require(p_ps_w >= 0 && p_dac_w >= 0 && p_rf_w >= 0, "hardware powers must be >= 0");
    require(loss_factor >= 0 && loss_factor < 1, "loss factor must be in [0,1)");
    require(pa_efficiency > 0 && pa_efficiency <= 1, "PA efficiency must be in (0,1]");
    require(silent_scalar >= 0 && silent_scalar <= 1, "silent scalar must be in [0,1]");
    require(p_max_w > 0, "p_max must be > 0");
    require(weight > 0, "BS weight must be > 0");
  }

  // eta'_m = 1 / (eta_m (1 - Delta_m)), the PA/loss markup on RF power.
  double eta_prime() const { return 1.0 / (pa_efficiency * (1.0 - loss_factor)); }

  // Reference values from the evaluation setup shipped with the project.
  static HardwareProfile table1() { return HardwareProfile{}; }
};

// Number of phase shifters per architecture.
inline int ps_count(Architecture arch, int n_antennas, int n_rf) {
  switch (arch) {
    case Architecture::kFdp: return 0;
    case Architecture::kFhp: return n_rf * n_antennas;
    case Architecture::kPhp: return n_antennas;
  }
  return 0;
}

// Hardware power: (N_ps * P_ps + L * (P_dac + P_rf)) / (1 - Delta).
inline double hw_power(Architecture arch, int n_antennas, int n_rf,
                       const HardwareProfile& prof) {
  const double num = ps_count(arch, n_antennas, n_rf) * prof.p_ps_w +
                     n_rf * (prof.p_dac_w + prof.p_rf_w);
  return num / (1.0 - prof.loss_factor);
}

// RF transmit power: sum_k ||w_k||^2.
inline double tx_power(const std::vector<CVec>& precoders) {
  double p = 0.0;
  for (const auto& w : precoders) p += w.squaredNorm();
  return p;
}

// Total BS power. Silent mode requires zero transmit power.
inline double bs_power(double p_tx_w, bool active, Architecture arch, int n_antennas,
                       int n_rf, const HardwareProfile& prof) {
  require(p_tx_w >= 0, "transmit power must be >= 0");
  if (!active) {
    require(p_tx_w <= 1e-12, "silent BS must have zero transmit power");
    return prof.silent_scalar * hw_power(arch, n_antennas, n_rf, prof);
  }
  return prof.eta_prime() * p_tx_w + hw_power(arch, n_antennas, n_rf, prof);
}

} // namespace hybeam
