// SPDX-License-Identifier: Apache-2.0
//
// Release-gate checks: every check pits an implementation path against an
// independent oracle (closed form, exhaustive grid, algebraic identity or a
// paired run) on deterministic seeds. The CLI `validate` subcommand runs the
// whole list and reports pass/fail per check.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hybeam/channel.hpp"
#include "hybeam/montecarlo.hpp"
#include "hybeam/silence.hpp"

namespace hybeam {

struct ValidationResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace validation_detail {

inline CVec random_channel(Rng& rng, int n, double scale = 1.0) {
  CVec h(n);
  for (int i = 0; i < n; ++i) h(i) = scale * rng.cnormal();
  return h;
}

// Exhaustive equal-gain check on one channel: the closed form must beat every
// 16-level quantized phase vector and exceed the grid max by at most the
// quantization slack (1 - cos(pi/16)) * sum|h| / sqrt(LN).
inline bool egt_grid_one(const CVec& h, double& gap_out) {
  const int n = static_cast<int>(h.size());
  const AnalogPrecoder ap = egt_fhp({h}, 1);
  const double closed = std::abs(cplx(h.adjoint() * ap.matrix.col(0)));
  double sum_abs = 0.0;
  for (int i = 0; i < n; ++i) sum_abs += std::abs(h(i));
  const double expect = sum_abs / std::sqrt(double(n));
  if (std::abs(closed - expect) > 1e-12 * std::max(1.0, expect)) return false;
  const int levels = 16;
  double best = 0.0;
  std::vector<int> idx(n, 0);
  const double amp = 1.0 / std::sqrt(double(n));
  for (;;) {
    cplx acc(0.0, 0.0);
    for (int i = 0; i < n; ++i)
      acc += std::conj(h(i)) * std::polar(amp, 2.0 * kPi * idx[i] / levels);
    best = std::max(best, std::abs(acc));
    int d = 0;
    while (d < n && ++idx[d] == levels) idx[d++] = 0;
    if (d == n) break;
  }
  const double slack = (1.0 - std::cos(kPi / levels)) * sum_abs / std::sqrt(double(n));
  gap_out = closed - best;
  return closed >= best - 1e-12 && closed <= best + slack + 1e-12;
}

struct SingleUserInstance {
  std::vector<AnalogPrecoder> analog;
  std::vector<std::vector<CVec>> h;
  Vec targets, noise;
  std::vector<HardwareProfile> profiles;
  double h2 = 0.0;
};

inline SingleUserInstance single_user_fdp(Rng& rng, int n, double tau, double noise_w) {
  SingleUserInstance si;
  si.analog.push_back(analog_identity(n));
  si.h.assign(1, std::vector<CVec>(1, random_channel(rng, n, 1e-4)));
  si.h2 = si.h[0][0].squaredNorm();
  si.targets = Vec::Constant(1, tau);
  si.noise = Vec::Constant(1, noise_w);
  si.profiles.assign(1, HardwareProfile::table1());
  return si;
}

} // namespace validation_detail

// Closed-form transmit power and rate dual for the single-user fully digital
// case: p* = (2^tau - 1) sigma^2 / ||h||^2, lambda* = eta' / ||h||^2.
inline ValidationResult check_single_user_closed_form(int trials = 25) {
  using namespace validation_detail;
  Rng rng(20240901);
  double worst_p = 0.0, worst_l = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double tau = rng.uniform(0.5, 6.0);
    const double noise_w = dbm_to_watt(-84.0);
    auto si = single_user_fdp(rng, 8, tau, noise_w);
    const std::vector<int> z(1, 1);
    SdpProblem prob = assemble(si.analog, si.h, si.targets, si.noise, z, si.profiles);
    SdpSolution sol = solve(prob);
    if (sol.status != SolveStatus::kOptimal)
      return {"single-user closed form", false, "solver failed on a feasible instance"};
    const double p_expect = snr_gap(tau) * noise_w / si.h2;
    const double l_expect = si.profiles[0].eta_prime() / si.h2;
    worst_p = std::max(worst_p, std::abs(sol.tx_per_bs_w(0) - p_expect) / p_expect);
    worst_l = std::max(worst_l, std::abs(sol.lambda(0) - l_expect) / l_expect);
  }
  const bool ok = worst_p <= 1e-6 && worst_l <= 1e-4;
  char buf[128];
  std::snprintf(buf, sizeof buf, "max rel err: power %.2e, dual %.2e", worst_p, worst_l);
  return {"single-user closed form", ok, buf};
}

inline ValidationResult check_egt_grid_oracle(int trials = 10) {
  using namespace validation_detail;
  Rng rng(20240902);
  for (int t = 0; t < trials; ++t) {
    const CVec h = random_channel(rng, 4);
    double gap = 0.0;
    if (!egt_grid_one(h, gap)) return {"EGT grid oracle", false, "grid beat the closed form"};
  }
  return {"EGT grid oracle", true, "closed form optimal vs 16^4 grid"};
}

inline ValidationResult check_trace_identity(int trials = 50) {
  using namespace validation_detail;
  Rng rng(20240903);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int k_users = 3, m_bs = 2, n = 8, l = 3;
    std::vector<AnalogPrecoder> analog;
    std::vector<std::vector<CVec>> h(k_users, std::vector<CVec>(m_bs));
    for (int m = 0; m < m_bs; ++m) {
      std::vector<CVec> hk(k_users);
      for (int k = 0; k < k_users; ++k) hk[k] = random_channel(rng, n);
      analog.push_back(egt_fhp(hk, l));
      for (int k = 0; k < k_users; ++k) h[k][m] = hk[k];
    }
    const Vec targets = Vec::Constant(k_users, 2.0);
    const Vec noise = Vec::Constant(k_users, 1.0);
    const std::vector<int> z(m_bs, 1);
    SdpProblem prob =
        assemble(analog, h, targets, noise, z, std::vector<HardwareProfile>(m_bs));
    // Random rank-1 blocks D = d d^H; the direct rate from w = R d must
    // match the trace form on D.
    std::vector<std::vector<CVec>> d(k_users, std::vector<CVec>(m_bs));
    std::vector<std::vector<CMat>> dm(k_users, std::vector<CMat>(m_bs));
    for (int k = 0; k < k_users; ++k)
      for (int m = 0; m < m_bs; ++m) {
        d[k][m] = random_channel(rng, l);
        dm[k][m] = d[k][m] * d[k][m].adjoint();
      }
    const auto w = apply_analog(analog, DigitalPrecoders{d, 0.0, 1.0, false});
    const Vec direct = evaluate_rates(w, h, noise);
    for (int k = 0; k < k_users; ++k)
      worst = std::max(worst, std::abs(direct(k) - rate_trace_form(prob, dm, k)));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |direct - trace form| = %.2e", worst);
  return {"trace identity", worst <= 1e-10, buf};
}

// FHP's overall precoder is FDP-feasible, so the FDP optimum can never need
// more transmit power on the same channels.
inline ValidationResult check_nesting(int trials = 10) {
  using namespace validation_detail;
  Rng rng(20240904);
  int used = 0;
  for (int t = 0; t < trials; ++t) {
    const int k_users = 3, m_bs = 2, n = 12, l = 3;
    std::vector<std::vector<CVec>> h(k_users, std::vector<CVec>(m_bs));
    std::vector<AnalogPrecoder> fhp, fdp;
    for (int m = 0; m < m_bs; ++m) {
      std::vector<CVec> hk(k_users);
      for (int k = 0; k < k_users; ++k) hk[k] = random_channel(rng, n, 1e-4);
      fhp.push_back(egt_fhp(hk, l));
      fdp.push_back(analog_identity(n));
      for (int k = 0; k < k_users; ++k) h[k][m] = hk[k];
    }
    const Vec targets = Vec::Constant(k_users, 3.0);
    const Vec noise = Vec::Constant(k_users, dbm_to_watt(-84.0));
    const std::vector<int> z(m_bs, 1);
    const std::vector<HardwareProfile> profiles(m_bs, HardwareProfile::table1());
    SdpSolution s_fhp = solve(assemble(fhp, h, targets, noise, z, profiles));
    SdpSolution s_fdp = solve(assemble(fdp, h, targets, noise, z, profiles));
    if (s_fhp.status != SolveStatus::kOptimal || s_fdp.status != SolveStatus::kOptimal)
      continue;
    ++used;
    const double p_fhp = s_fhp.tx_per_bs_w.sum();
    const double p_fdp = s_fdp.tx_per_bs_w.sum();
    if (p_fdp > p_fhp * (1.0 + 1e-5))
      return {"FDP/FHP nesting", false, "FDP optimum exceeded FHP optimum"};
  }
  return {"FDP/FHP nesting", used > 0, used > 0 ? "FDP <= FHP on all paired solves"
                                                : "no jointly feasible instances"};
}

inline ValidationResult check_kkt_spot(int trials = 5) {
  using namespace validation_detail;
  Rng rng(20240905);
  double worst = 0.0;
  int used = 0;
  for (int t = 0; t < trials; ++t) {
    const int k_users = 3, m_bs = 2, n = 16, l = 3;
    std::vector<std::vector<CVec>> h(k_users, std::vector<CVec>(m_bs));
    std::vector<AnalogPrecoder> analog;
    for (int m = 0; m < m_bs; ++m) {
      std::vector<CVec> hk(k_users);
      for (int k = 0; k < k_users; ++k) hk[k] = random_channel(rng, n, 1e-4);
      analog.push_back(egt_fhp(hk, l));
      for (int k = 0; k < k_users; ++k) h[k][m] = hk[k];
    }
    const Vec targets = Vec::Constant(k_users, 3.0);
    const Vec noise = Vec::Constant(k_users, dbm_to_watt(-84.0));
    const std::vector<int> z(m_bs, 1);
    const std::vector<HardwareProfile> profiles(m_bs, HardwareProfile::table1());
    SdpProblem prob = assemble(analog, h, targets, noise, z, profiles);
    SdpSolution sol = solve(prob);
    if (sol.status != SolveStatus::kOptimal) continue;
    DigitalPrecoders dp = extract_precoders(sol, prob);
    KktReport rep = kkt_check(sol, prob, dp);
    if (!rep.applicable) continue;
    ++used;
    worst = std::max({worst, rep.max_served_rel_err, rep.max_served_score_gap,
                      rep.max_bound_violation});
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max association residual %.2e on %d instances", worst, used);
  return {"KKT association check", used > 0 && worst <= 1e-3, buf};
}

inline ValidationResult check_path_loss_reference() {
  PathLossParams pl;
  pl.shadow_sigma_los_db = 0.0;
  pl.shadow_sigma_nlos_db = 0.0;
  Rng rng(1);
  const double ref = 20.0 * std::log10(4.0 * kPi / pl.carrier_wavelength_m);
  const double at1 = path_loss_db(1.0, true, pl, rng);
  const double at100 = path_loss_db(100.0, true, pl, rng);
  const double at100n = path_loss_db(100.0, false, pl, rng);
  const bool ok = std::abs(at1 - ref) < 1e-9 &&
                  std::abs(at100 - (ref + 42.0)) < 1e-9 &&
                  std::abs((at100n - at100) - 10.0 * (3.4 - 2.1) * 2.0) < 1e-9;
  return {"path loss reference", ok, "close-in model, 28 GHz"};
}

inline std::vector<ValidationResult> run_validation_suite() {
  return {check_path_loss_reference(), check_egt_grid_oracle(),
          check_single_user_closed_form(), check_trace_identity(), check_nesting(),
          check_kkt_spot()};
}

} // namespace hybeam
