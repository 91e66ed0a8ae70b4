// SPDX-License-Identifier: Apache-2.0
//
// BS silence strategies on top of the digital precoding program:
//  * algorithm1: exhaustive search over the 2^M - 1 nonempty active patterns,
//    picking the minimum of sum transmit cost plus the pattern's hardware
//    constant (ties: more silent BSs, then lexicographically smallest z);
//  * algorithm2: iterative convex-envelope reweighting that drives BSs with
//    small RF transmit power into silent mode;
//  * user-association extraction and the Lagrangian association checker.

#pragma once

#include <string>
#include <vector>

#include "hybeam/common.hpp"
#include "hybeam/power.hpp"
#include "hybeam/sdp.hpp"

namespace hybeam {

struct AlgoParams {
  double eps_w = 1e-6;              // epsilon in the envelope slope update
  double eps_stop_w = 1e-4;         // absolute floor on the sum_m |P_tx change| stop
  double eps_stop_rel = 1e-2;       // plus this fraction of the current sum power
  int max_iter = 20;
  double silent_threshold_w = 1e-6; // BS counts as silent below this RF power
  double assoc_threshold_w = 1e-6;  // ||R_m d_{k,m}||^2 above this serves user k
  double tie_tol = 1e-8;            // relative tie window between patterns
  SdpSolveOptions sdp;
};

struct Association {
  std::vector<std::vector<int>> users_of_bs; // K_m
  std::vector<std::vector<int>> bs_of_user;  // M_k

  bool joint_transmission(int k) const { return bs_of_user[k].size() > 1; }
};

struct AlgoResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  DigitalPrecoders precoders;
  std::vector<int> pattern;          // z, final active/silent assignment
  double p_tx_star_w = 0.0;          // sum RF transmit power
  double p_star_w = 0.0;             // exact total power for the final pattern
  double sdp_objective_total_w = 0.0;// solver objective + kappa (selection value)
  double p_star_envelope_w = 0.0;    // algorithm2's envelope-form total
  Vec per_bs_tx_w;
  Vec rates;                         // achieved, from extracted precoders
  Association assoc;
  Vec lambda, mu;                    // duals of the reported solve
  int iterations = 0;                // alg1: P1 solves; alg2: P2 re-solves
  int n_numerical_failures = 0;      // pattern solves lost to numerics
  double max_rank_ratio = 0.0;
  bool flagged = false;
  bool converged = true;             // alg2 stopping criterion reached
  std::vector<double> envelope_trace;// alg2: true envelope total per iterate
};

inline Association extract_association(const std::vector<CMat>& gram,
                                       const DigitalPrecoders& dp, double power_threshold) {
  const int k_users = static_cast<int>(dp.d.size());
  const int m_bs = k_users ? static_cast<int>(dp.d.front().size()) : 0;
  Association a;
  a.users_of_bs.resize(m_bs);
  a.bs_of_user.resize(k_users);
  for (int k = 0; k < k_users; ++k)
    for (int m = 0; m < m_bs; ++m) {
      const double p = (dp.d[k][m].adjoint() * gram[m] * dp.d[k][m]).real()(0, 0);
      if (p > power_threshold) {
        a.users_of_bs[m].push_back(k);
        a.bs_of_user[k].push_back(m);
      }
    }
  return a;
}

namespace silence_detail {

inline Vec tx_from_precoders(const SdpProblem& prob, const DigitalPrecoders& dp) {
  Vec tx = Vec::Zero(prob.n_bs);
  for (int m = 0; m < prob.n_bs; ++m)
    for (int k = 0; k < prob.n_users; ++k)
      tx(m) += (dp.d[k][m].adjoint() * prob.gram[m] * dp.d[k][m]).real()(0, 0);
  return tx;
}

inline double exact_total_power(const std::vector<int>& z, const Vec& tx,
                                const SdpProblem& prob,
                                const std::vector<HardwareProfile>& profiles) {
  double total = 0.0;
  for (int m = 0; m < prob.n_bs; ++m)
    total += profiles[m].weight * bs_power(z[m] ? tx(m) : 0.0, z[m] != 0, prob.arch[m],
                                           prob.antenna_dims[m], prob.rf_dims[m], profiles[m]);
  return total;
}

// Scales every precoder by the smallest common factor >= 1 (capped by the
// power constraints and 1.1) restoring the rate targets; used after the
// rank-1 extraction or after zeroing near-silent BSs.
inline void restore_rates(DigitalPrecoders& dp, const SdpProblem& prob) {
  const Vec rates = rates_from_effective(prob.eff, dp.d, prob.noise_w);
  double worst = 0.0;
  for (int k = 0; k < prob.n_users; ++k) worst = std::max(worst, prob.targets(k) - rates(k));
  if (worst <= 1e-9) return;
  auto ok_at = [&](double scale) {
    auto scaled = dp.d;
    for (auto& row : scaled)
      for (auto& v : row) v *= scale;
    const Vec r = rates_from_effective(prob.eff, scaled, prob.noise_w);
    for (int k = 0; k < prob.n_users; ++k)
      if (r(k) < prob.targets(k) - 1e-9) return false;
    return true;
  };
  double hi = 1.1;
  const Vec tx = tx_from_precoders(prob, dp);
  for (int m = 0; m < prob.n_bs; ++m)
    if (tx(m) > 0.0)
      hi = std::min(hi, std::sqrt((prob.p_max_w(m) * (1.0 + 1e-9) + 1e-12) / tx(m)));
  hi = std::max(hi, 1.0);
  double factor = hi;
  if (ok_at(hi)) {
    double lo = 1.0;
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok_at(mid) ? hi : lo) = mid;
    }
    factor = hi;
  } else {
    dp.flagged = true;
  }
  if (factor > 1.0) {
    for (auto& row : dp.d)
      for (auto& v : row) v *= factor;
    dp.rescale_factor *= factor;
    dp.flagged = dp.flagged || factor > 1.0 + 1e-9;
  }
}

inline void finalize_result(AlgoResult& res, const SdpProblem& prob, const SdpSolution& sol,
                            const std::vector<int>& z,
                            const std::vector<HardwareProfile>& profiles,
                            const AlgoParams& params) {
  res.precoders = extract_precoders(sol, prob);
  // Force exact zeros on silent BSs, then re-check the rate targets.
  bool zeroed = false;
  for (int m = 0; m < prob.n_bs; ++m)
    if (!z[m])
      for (int k = 0; k < prob.n_users; ++k)
        if (res.precoders.d[k][m].squaredNorm() > 0.0) {
          res.precoders.d[k][m].setZero();
          zeroed = true;
        }
  if (zeroed) restore_rates(res.precoders, prob);
  res.pattern = z;
  res.per_bs_tx_w = tx_from_precoders(prob, res.precoders);
  res.p_tx_star_w = res.per_bs_tx_w.sum();
  res.p_star_w = exact_total_power(z, res.per_bs_tx_w, prob, profiles);
  res.sdp_objective_total_w = sol.objective_w + prob.kappa_w;
  res.rates = rates_from_effective(prob.eff, res.precoders.d, prob.noise_w);
  res.assoc = extract_association(prob.gram, res.precoders, params.assoc_threshold_w);
  res.lambda = sol.lambda;
  res.mu = sol.mu;
  res.max_rank_ratio = res.precoders.max_rank_ratio;
  res.flagged = res.precoders.flagged;
}

} // namespace silence_detail

// Exhaustive optimal silence search (Algorithm 1). Also used with the single
// all-active pattern as the fixed "all BSs active" baseline.
inline AlgoResult algorithm1(const std::vector<AnalogPrecoder>& analog,
                             const std::vector<std::vector<CVec>>& channels,
                             const Vec& targets, const Vec& noise_w,
                             const std::vector<HardwareProfile>& profiles,
                             const AlgoParams& params = {}, bool all_active_only = false) {
  const int m_bs = static_cast<int>(analog.size());
  require(m_bs >= 1, "algorithm1: need at least one BS");
  AlgoResult res;
  bool have_best = false;
  SdpProblem best_prob;
  SdpSolution best_sol;
  std::vector<int> best_z;
  double best_total = 0.0;
  int best_silent = -1;

  const unsigned full = (1u << m_bs) - 1u;
  for (unsigned mask = 1; mask <= full; ++mask) {
    if (all_active_only && mask != full) continue;
    std::vector<int> z(m_bs, 0);
    int n_silent = 0;
    for (int m = 0; m < m_bs; ++m) {
      z[m] = (mask >> m) & 1u;
      n_silent += z[m] ? 0 : 1;
    }
    SdpProblem prob = assemble(analog, channels, targets, noise_w, z, profiles);
    SdpSolution sol = solve(prob, params.sdp);
    ++res.iterations;
    if (sol.status == SolveStatus::kNumericalFailure) {
      ++res.n_numerical_failures;
      continue;
    }
    if (sol.status == SolveStatus::kInfeasible) continue;
    const double total = sol.objective_w + prob.kappa_w;
    bool take = false;
    if (!have_best) {
      take = true;
    } else {
      const double tie = params.tie_tol * std::max(1.0, std::abs(best_total));
      if (total < best_total - tie) {
        take = true;
      } else if (total <= best_total + tie) {
        if (n_silent > best_silent) take = true;
        else if (n_silent == best_silent && z < best_z) take = true;
      }
    }
    if (take) {
      have_best = true;
      best_prob = std::move(prob);
      best_sol = std::move(sol);
      best_z = z;
      best_total = total;
      best_silent = n_silent;
    }
  }

  if (!have_best) {
    res.status = res.n_numerical_failures > 0 ? SolveStatus::kNumericalFailure
                                              : SolveStatus::kInfeasible;
    return res;
  }
  res.status = SolveStatus::kOptimal;
  silence_detail::finalize_result(res, best_prob, best_sol, best_z, profiles, params);
  return res;
}

inline AlgoResult solve_all_active(const std::vector<AnalogPrecoder>& analog,
                                   const std::vector<std::vector<CVec>>& channels,
                                   const Vec& targets, const Vec& noise_w,
                                   const std::vector<HardwareProfile>& profiles,
                                   const AlgoParams& params = {}) {
  return algorithm1(analog, channels, targets, noise_w, profiles, params, true);
}

// Iterative sub-optimal silence strategy (Algorithm 2). The objective slope
// per BS starts at eta_hat = (1-a) P_hw / P_max + eta' and is re-weighted
// each iteration with the previous transmit power in the denominator, so
// low-power BSs see a steep slope and are pushed to zero.
inline AlgoResult algorithm2(const std::vector<AnalogPrecoder>& analog,
                             const std::vector<std::vector<CVec>>& channels,
                             const Vec& targets, const Vec& noise_w,
                             const std::vector<HardwareProfile>& profiles,
                             const AlgoParams& params = {}) {
  const int m_bs = static_cast<int>(analog.size());
  require(m_bs >= 1, "algorithm2: need at least one BS");
  require(params.eps_w > 0 && params.eps_stop_w > 0, "algorithm2: eps and eps_stop must be > 0");
  AlgoResult res;
  const std::vector<int> all_active(m_bs, 1);

  Vec phw(m_bs);
  for (int m = 0; m < m_bs; ++m)
    phw(m) = hw_power(analog[m].arch, analog[m].n_antennas(), analog[m].n_rf(), profiles[m]);

  Vec eta_hat(m_bs);
  for (int m = 0; m < m_bs; ++m)
    eta_hat(m) = (1.0 - profiles[m].silent_scalar) * phw(m) / profiles[m].p_max_w +
                 profiles[m].eta_prime();

  // True envelope total a*Phw + (1-a)*Phw*P/(P+eps) + eta'*P, summed over BSs.
  auto envelope_total = [&](const Vec& tx) {
    double v = 0.0;
    for (int m = 0; m < m_bs; ++m) {
      const double a = profiles[m].silent_scalar;
      v += profiles[m].weight *
           (a * phw(m) + (1.0 - a) * phw(m) * tx(m) / (tx(m) + params.eps_w) +
            profiles[m].eta_prime() * tx(m));
    }
    return v;
  };

  SdpProblem prob = assemble(analog, channels, targets, noise_w, all_active, profiles,
                             true, &eta_hat);
  SdpSolution sol = solve(prob, params.sdp);
  if (sol.status != SolveStatus::kOptimal) {
    res.status = sol.status;
    return res;
  }
  Vec prev_tx = sol.tx_per_bs_w;
  res.envelope_trace.push_back(envelope_total(prev_tx));

  res.converged = false;
  for (int i = 1; i <= params.max_iter; ++i) {
    for (int m = 0; m < m_bs; ++m)
      eta_hat(m) = (1.0 - profiles[m].silent_scalar) * phw(m) / (prev_tx(m) + params.eps_w) +
                   profiles[m].eta_prime();
    SdpProblem prob_i = assemble(analog, channels, targets, noise_w, all_active, profiles,
                                 true, &eta_hat);
    SdpSolution sol_i = solve(prob_i, params.sdp);
    if (sol_i.status != SolveStatus::kOptimal) {
      res.status = SolveStatus::kNumericalFailure;
      ++res.n_numerical_failures;
      return res;
    }
    res.iterations = i;
    const double delta = (sol_i.tx_per_bs_w - prev_tx).cwiseAbs().sum();
    prev_tx = sol_i.tx_per_bs_w;
    res.envelope_trace.push_back(envelope_total(prev_tx));
    prob = std::move(prob_i);
    sol = std::move(sol_i);
    if (delta < params.eps_stop_w + params.eps_stop_rel * prev_tx.sum()) {
      res.converged = true;
      break;
    }
  }

  // Final modes: silent iff the RF transmit power fell below the threshold.
  // With all-zero targets every BS may end up silent; the totals below then
  // consist of hardware power only.
  std::vector<int> z(m_bs, 0);
  for (int m = 0; m < m_bs; ++m) z[m] = prev_tx(m) > params.silent_threshold_w ? 1 : 0;

  res.status = SolveStatus::kOptimal;
  silence_detail::finalize_result(res, prob, sol, z, profiles, params);
  res.flagged = res.flagged || !res.converged;
  // Envelope-form total: solver objective with the final slopes + a*sum b*Phw.
  res.p_star_envelope_w = sol.objective_w + prob.kappa_w;
  return res;
}

// Lagrangian association certificate (all-active patterns only).
struct KktReport {
  bool applicable = false;
  std::string reason;
  Mat score;                    // s_{k,m} = g^H B^{-1} g
  Vec lambda;
  double max_served_rel_err = 0.0;   // |lambda_k * s_{k,m} - 1| over served pairs
  double max_served_score_gap = 0.0; // (max_m s - s_serving)/max_m s over served pairs
  double max_bound_violation = 0.0;  // max over all pairs of lambda_k*s_{k,m} - 1

  bool consistent(double tol) const {
    return applicable && max_served_rel_err <= tol && max_served_score_gap <= tol &&
           max_bound_violation <= tol;
  }
};

inline KktReport kkt_check(const SdpSolution& sol, const SdpProblem& prob,
                           const DigitalPrecoders& dp, double assoc_threshold_w = 1e-6) {
  KktReport rep;
  if (sol.status != SolveStatus::kOptimal) {
    rep.reason = "solution not optimal";
    return rep;
  }
  for (int m = 0; m < prob.n_bs; ++m)
    if (!prob.silence[m]) {
      rep.reason = "pattern is not all-active";
      return rep;
    }
  if (sol.lambda.size() != prob.n_users || sol.mu.size() != prob.n_bs) {
    rep.reason = "duals missing";
    return rep;
  }
  rep.applicable = true;
  rep.lambda = sol.lambda;
  rep.score.resize(prob.n_users, prob.n_bs);
  for (int k = 0; k < prob.n_users; ++k) {
    for (int m = 0; m < prob.n_bs; ++m) {
      CMat b = (prob.obj_weight(m) + sol.mu(m)) * prob.gram[m];
      for (int kp = 0; kp < prob.n_users; ++kp) {
        if (kp == k) continue;
        b += sol.lambda(kp) * prob.snr_gap_k(kp) * prob.eff[kp][m] * prob.eff[kp][m].adjoint();
      }
      const CVec& g = prob.eff[k][m];
      Eigen::LDLT<CMat> fac(sdp_detail::hermitian(b));
      rep.score(k, m) = (g.adjoint() * fac.solve(g)).real()(0, 0);
    }
  }
  for (int k = 0; k < prob.n_users; ++k) {
    const double smax = rep.score.row(k).maxCoeff();
    for (int m = 0; m < prob.n_bs; ++m) {
      const double ls = sol.lambda(k) * rep.score(k, m);
      rep.max_bound_violation = std::max(rep.max_bound_violation, ls - 1.0);
      const double p = (dp.d[k][m].adjoint() * prob.gram[m] * dp.d[k][m]).real()(0, 0);
      if (p > assoc_threshold_w) {
        rep.max_served_rel_err = std::max(rep.max_served_rel_err, std::abs(ls - 1.0));
        if (smax > 0.0)
          rep.max_served_score_gap =
              std::max(rep.max_served_score_gap, (smax - rep.score(k, m)) / smax);
      }
    }
  }
  return rep;
}

} // namespace hybeam
