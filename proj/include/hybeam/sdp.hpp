// SPDX-License-Identifier: Apache-2.0
//
// Digital precoding stage: the per-user rate-constrained sum-power
// minimization, relaxed to a semidefinite program over Hermitian PSD blocks
// D_{k,m} (one per user-BS pair; the constraint data is block diagonal, so
// cross-BS blocks of the stacked D_k never enter the program and the cone
// factorizes exactly).
//
// The complex Hermitian program is solved through the standard real symmetric
// embedding H -> [[Re H, -Im H], [Im H, Re H]] (traces double, right-hand
// sides are doubled to match; the embedding preserves optimal values and
// multipliers). Two exact reductions are applied before embedding:
//   * silent BSs are removed from the cone (their transmit power is forced
//     to zero by the z_m = 0 power row);
//   * for identity-Gram BSs (fully digital precoding) the per-BS block is
//     restricted to the span of the K effective channels, which leaves the
//     optimum unchanged since orthogonal-complement components only add
//     transmit power; and when K < L only the first K RF-chain coordinates
//     carry digital power.
// Problem data is rescaled so the expected solution sits at O(1) before the
// cone solver runs; values and duals are mapped back afterwards.

#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "hybeam/analog.hpp"
#include "hybeam/common.hpp"
#include "hybeam/conelp.hpp"
#include "hybeam/power.hpp"

namespace hybeam {

enum class SolveStatus { kOptimal, kInfeasible, kNumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct SdpProblem {
  int n_users = 0;
  int n_bs = 0;
  std::vector<Architecture> arch;          // per BS
  std::vector<int> rf_dims;                // L_m
  std::vector<int> antenna_dims;           // N_m
  std::vector<std::vector<CVec>> eff;      // eff[k][m] = R_m^H h_{k,m}
  std::vector<CMat> gram;                  // G_m = R_m^H R_m
  Vec targets;                             // tau_k (bit/s/Hz)
  Vec noise_w;                             // sigma_k^2 (W)
  std::vector<int> silence;                // z_m
  Vec obj_weight;                          // omega_m = b_m eta'_m (or b_m eta_hat_m)
  Vec p_max_w;                             // per-BS RF cap (W)
  Vec bs_weight;                           // b_m
  double kappa_w = 0.0;                    // pattern-dependent hardware constant
  bool envelope_mode = false;

  double snr_gap_k(int k) const { return snr_gap(targets(k)); }
};

struct SdpSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<std::vector<CMat>> d;        // D_{k,m}, full L_m x L_m (silent: zero)
  double objective_w = 0.0;                // sum_k Tr(Rhat D_k), no kappa
  Vec lambda;                              // rate-constraint duals, >= 0
  Vec mu;                                  // power-constraint duals, >= 0
  Vec tx_per_bs_w;                         // sum_k Tr(Q_m D_k)
  double rel_gap = 0.0;
  int iterations = 0;
};

struct SdpSolveOptions {
  double gap_tol = 1e-7;
  double feas_tol = 1e-8;
  int max_iter = 120;
  bool verbose = false;
};

namespace sdp_detail {

// Real symmetric embedding of a Hermitian matrix.
inline Mat embed(const CMat& h) {
  const int n = static_cast<int>(h.rows());
  Mat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.bottomRightCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  return out;
}

// Inverse of embed, projecting onto the embedded (J-invariant) subspace.
inline CMat unembed(const Mat& x) {
  const int n = static_cast<int>(x.rows()) / 2;
  CMat out(n, n);
  out.real() = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  out.imag() = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  out = 0.5 * (out + out.adjoint()).eval();
  return out;
}

inline CMat hermitian(const CMat& m) { return 0.5 * (m + m.adjoint()); }

} // namespace sdp_detail

// Builds the digital precoding program for one silence pattern. In envelope
// mode the objective slope eta_hat (per BS) replaces eta' and the hardware
// constant becomes a * sum_m b_m P_hw_m.
inline SdpProblem assemble(const std::vector<AnalogPrecoder>& analog,
                           const std::vector<std::vector<CVec>>& channels,
                           const Vec& targets, const Vec& noise_w,
                           const std::vector<int>& silence,
                           const std::vector<HardwareProfile>& profiles,
                           bool envelope_mode = false, const Vec* eta_hat = nullptr) {
  const int m_bs = static_cast<int>(analog.size());
  const int k_users = static_cast<int>(channels.size());
  require(m_bs >= 1 && k_users >= 1, "assemble: need at least one BS and user");
  require(static_cast<int>(silence.size()) == m_bs, "assemble: silence size mismatch");
  require(static_cast<int>(profiles.size()) == m_bs, "assemble: profiles size mismatch");
  require(targets.size() == k_users && noise_w.size() == k_users,
          "assemble: per-user vector size mismatch");
  bool any_active = false;
  for (int z : silence) any_active = any_active || (z != 0);
  require(any_active, "assemble: all-silent pattern has no feasible rate constraints");
  for (int k = 0; k < k_users; ++k) {
    require(targets(k) >= 0, "assemble: negative rate target");
    require(noise_w(k) > 0, "assemble: noise power must be > 0");
  }
  if (envelope_mode) require(eta_hat != nullptr && eta_hat->size() == m_bs,
                             "assemble: envelope mode needs eta_hat per BS");

  SdpProblem prob;
  prob.n_users = k_users;
  prob.n_bs = m_bs;
  prob.targets = targets;
  prob.noise_w = noise_w;
  prob.silence = silence;
  prob.envelope_mode = envelope_mode;
  prob.arch.resize(m_bs);
  prob.rf_dims.resize(m_bs);
  prob.antenna_dims.resize(m_bs);
  prob.gram.resize(m_bs);
  prob.obj_weight.resize(m_bs);
  prob.p_max_w.resize(m_bs);
  prob.bs_weight.resize(m_bs);
  prob.eff.assign(k_users, std::vector<CVec>(m_bs));

  prob.kappa_w = 0.0;
  for (int m = 0; m < m_bs; ++m) {
    check_analog_invariants(analog[m]);
    profiles[m].validate();
    prob.arch[m] = analog[m].arch;
    prob.antenna_dims[m] = analog[m].n_antennas();
    prob.rf_dims[m] = analog[m].n_rf();
    prob.gram[m] = sdp_detail::hermitian(analog[m].matrix.adjoint() * analog[m].matrix);
    prob.p_max_w(m) = profiles[m].p_max_w;
    prob.bs_weight(m) = profiles[m].weight;
    const double slope = envelope_mode ? (*eta_hat)(m) : profiles[m].eta_prime();
    prob.obj_weight(m) = profiles[m].weight * slope;
    const double phw = hw_power(analog[m].arch, prob.antenna_dims[m], prob.rf_dims[m], profiles[m]);
    if (envelope_mode) {
      prob.kappa_w += profiles[m].weight * profiles[m].silent_scalar * phw;
    } else {
      const double zm = silence[m] ? 1.0 : 0.0;
      prob.kappa_w += profiles[m].weight * (zm + profiles[m].silent_scalar * (1.0 - zm)) * phw;
    }
    for (int k = 0; k < k_users; ++k) {
      require(static_cast<int>(channels[k].size()) == m_bs, "assemble: channel grid mismatch");
      require(channels[k][m].size() == prob.antenna_dims[m], "assemble: channel length mismatch");
      prob.eff[k][m] = analog[m].matrix.adjoint() * channels[k][m];
    }
  }
  return prob;
}

inline SdpSolution solve(const SdpProblem& prob, const SdpSolveOptions& opts = {}) {
  using sdp_detail::embed;
  using sdp_detail::unembed;

  // All-zero targets admit the exact optimum D = 0 (every rate row reads
  // 0 >= 0), with zero multipliers.
  if (prob.targets.maxCoeff() <= 0.0) {
    SdpSolution out;
    out.status = SolveStatus::kOptimal;
    out.d.assign(prob.n_users, std::vector<CMat>(prob.n_bs));
    for (int k = 0; k < prob.n_users; ++k)
      for (int m = 0; m < prob.n_bs; ++m)
        out.d[k][m] = CMat::Zero(prob.rf_dims[m], prob.rf_dims[m]);
    out.lambda = Vec::Zero(prob.n_users);
    out.mu = Vec::Zero(prob.n_bs);
    out.tx_per_bs_w = Vec::Zero(prob.n_bs);
    return out;
  }

  // Active-BS reduction and per-BS representation basis.
  std::vector<int> active;
  for (int m = 0; m < prob.n_bs; ++m)
    if (prob.silence[m]) active.push_back(m);
  const int ma = static_cast<int>(active.size());
  const int K = prob.n_users;

  // basis[j]: L_m x r_j with orthonormal columns; empty means identity.
  std::vector<CMat> basis(ma);
  std::vector<int> rdim(ma);
  for (int j = 0; j < ma; ++j) {
    const int m = active[j];
    const int l = prob.rf_dims[m];
    const bool identity_gram =
        (prob.gram[m] - CMat::Identity(l, l)).norm() <= 1e-10 * std::sqrt(double(l));
    if (identity_gram && l > K) {
      CMat g(l, K);
      for (int k = 0; k < K; ++k) g.col(k) = prob.eff[k][m];
      Eigen::HouseholderQR<CMat> qr(g);
      basis[j] = qr.householderQ() * CMat::Identity(l, K);
      rdim[j] = K;
    } else if (!identity_gram && l > K) {
      // Unused RF-chain columns carry zero digital power: keep first K coords.
      basis[j] = CMat::Identity(l, K);
      rdim[j] = K;
    } else {
      basis[j] = CMat();
      rdim[j] = l;
    }
  }

  auto reduce_vec = [&](int j, const CVec& v) -> CVec {
    return basis[j].size() ? CVec(basis[j].adjoint() * v) : v;
  };
  auto reduce_mat = [&](int j, const CMat& g) -> CMat {
    return basis[j].size() ? CMat(basis[j].adjoint() * g * basis[j]) : g;
  };

  // Problem scaling: channel scale gamma and power scale p0.
  double g2max = 0.0;
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < ma; ++j) g2max = std::max(g2max, prob.eff[k][active[j]].squaredNorm());
  const double gamma2 = g2max > 0 ? g2max : 1.0;
  double p0 = 0.0;
  for (int k = 0; k < K; ++k) {
    double denom = 0.0;
    for (int j = 0; j < ma; ++j) denom += prob.eff[k][active[j]].squaredNorm();
    if (denom > 0) p0 += prob.snr_gap_k(k) * prob.noise_w(k) / denom;
  }
  const double p_cap = prob.p_max_w.maxCoeff();
  if (!(p0 > 0)) p0 = 1.0;
  p0 = std::min(p0, p_cap);
  p0 = std::max(p0, 1e-300);
  const double w0 = prob.obj_weight.maxCoeff();

  // Cone problem: blocks (k, j) then K rate slacks then ma power slacks.
  ConeProblem cone;
  const int nblocks = K * ma;
  cone.dims.resize(nblocks + K + ma);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < ma; ++j) cone.dims[k * ma + j] = 2 * rdim[j];
  for (int i = 0; i < K + ma; ++i) cone.dims[nblocks + i] = 1;
  cone.rhs.resize(K + ma);
  cone.rows.resize(K + ma);

  std::vector<CMat> gram_red(ma);
  std::vector<std::vector<CVec>> eff_red(K, std::vector<CVec>(ma));
  for (int j = 0; j < ma; ++j) gram_red[j] = reduce_mat(j, prob.gram[active[j]]);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < ma; ++j)
      eff_red[k][j] = reduce_vec(j, prob.eff[k][active[j]]) / std::sqrt(gamma2);

  for (int k = 0; k < K; ++k) {
    const double beta = prob.snr_gap_k(k);
    for (int j = 0; j < ma; ++j) {
      const CMat hk = eff_red[k][j] * eff_red[k][j].adjoint();
      cone.rows[k].push_back({k * ma + j, embed(hk)});
      if (beta > 0.0)
        for (int kp = 0; kp < K; ++kp)
          if (kp != k) cone.rows[k].push_back({kp * ma + j, embed(CMat(-beta * hk))});
    }
    cone.rows[k].push_back({nblocks + k, -Mat::Identity(1, 1)});
    cone.rhs(k) = 2.0 * beta * prob.noise_w(k) / (p0 * gamma2);
  }
  for (int j = 0; j < ma; ++j) {
    const Mat gq = embed(gram_red[j]);
    for (int k = 0; k < K; ++k) cone.rows[K + j].push_back({k * ma + j, gq});
    cone.rows[K + j].push_back({nblocks + K + j, Mat::Identity(1, 1)});
    cone.rhs(K + j) = 2.0 * prob.p_max_w(active[j]) / p0;
  }
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < ma; ++j) {
      const double w = prob.obj_weight(active[j]) / w0;
      cone.cost.push_back({k * ma + j, Mat(w * embed(gram_red[j]))});
    }

  ConeOptions copts;
  copts.feas_tol = opts.feas_tol;
  copts.gap_tol = opts.gap_tol;
  copts.max_iter = opts.max_iter;
  copts.verbose = opts.verbose;
  const ConeSolution cs = solve_cone(cone, copts);

  SdpSolution out;
  out.iterations = cs.iterations;
  out.rel_gap = cs.rel_gap;
  switch (cs.status) {
    case ConeStatus::kOptimal: out.status = SolveStatus::kOptimal; break;
    case ConeStatus::kPrimalInfeasible: out.status = SolveStatus::kInfeasible; return out;
    default: out.status = SolveStatus::kNumericalFailure; return out;
  }

  out.d.assign(K, std::vector<CMat>(prob.n_bs));
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < prob.n_bs; ++m)
      out.d[k][m] = CMat::Zero(prob.rf_dims[m], prob.rf_dims[m]);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < ma; ++j) {
      CMat dred = p0 * unembed(cs.x[k * ma + j]);
      out.d[k][active[j]] =
          basis[j].size() ? CMat(basis[j] * dred * basis[j].adjoint()) : dred;
    }

  out.tx_per_bs_w = Vec::Zero(prob.n_bs);
  out.objective_w = 0.0;
  for (int m = 0; m < prob.n_bs; ++m) {
    for (int k = 0; k < K; ++k)
      out.tx_per_bs_w(m) += (prob.gram[m] * out.d[k][m]).real().trace();
    out.objective_w += prob.obj_weight(m) * out.tx_per_bs_w(m);
  }

  out.lambda = Vec::Zero(K);
  out.mu = Vec::Zero(prob.n_bs);
  for (int k = 0; k < K; ++k) out.lambda(k) = std::max(0.0, cs.y(k) * w0 / gamma2);
  for (int j = 0; j < ma; ++j) out.mu(active[j]) = std::max(0.0, -cs.y(K + j) * w0);
  return out;
}

// Dominant-eigenpair extraction from a relaxed PSD block.
struct Rank1 {
  CVec d;
  double rank_ratio = 0.0; // lambda_2 / lambda_1
};

inline Rank1 extract_rank1(const CMat& d_matrix) {
  const int n = static_cast<int>(d_matrix.rows());
  Eigen::SelfAdjointEigenSolver<CMat> es(sdp_detail::hermitian(d_matrix));
  const Vec ev = es.eigenvalues(); // ascending
  const double lmax = ev(n - 1);
  require(ev(0) >= -1e-8 * std::max(lmax, 0.0) - 1e-300,
          "extract_rank1: matrix is not PSD within tolerance");
  Rank1 out;
  if (lmax <= 0.0) {
    out.d = CVec::Zero(n);
    return out;
  }
  out.d = std::sqrt(lmax) * es.eigenvectors().col(n - 1);
  out.rank_ratio = n > 1 ? std::max(0.0, ev(n - 2)) / lmax : 0.0;
  return out;
}

struct DigitalPrecoders {
  std::vector<std::vector<CVec>> d; // d_{k,m}, length L_m
  double max_rank_ratio = 0.0;
  double rescale_factor = 1.0;
  bool flagged = false;
};

// Spectral efficiencies from effective channels g and digital precoders:
// Gamma_k = log2(1 + sum_m |g_{k,m}^H d_{k,m}|^2 / (I_k + sigma_k^2)).
inline Vec rates_from_effective(const std::vector<std::vector<CVec>>& eff,
                                const std::vector<std::vector<CVec>>& d, const Vec& noise_w) {
  const int K = static_cast<int>(eff.size());
  Vec rates(K);
  for (int k = 0; k < K; ++k) {
    double sig = 0.0, intf = 0.0;
    for (size_t m = 0; m < eff[k].size(); ++m) {
      for (int kp = 0; kp < K; ++kp) {
        const double p = std::norm(cplx(eff[k][m].adjoint() * d[kp][m]));
        (kp == k ? sig : intf) += p;
      }
    }
    rates(k) = std::log2(1.0 + sig / (intf + noise_w(k)));
  }
  return rates;
}

// Direct rate expression from full precoders w_{k,m} and channels h_{k,m}.
inline Vec evaluate_rates(const std::vector<std::vector<CVec>>& w,
                          const std::vector<std::vector<CVec>>& h, const Vec& noise_w) {
  return rates_from_effective(h, w, noise_w);
}

// Trace-form rate of user k computed from the PSD blocks directly.
inline double rate_trace_form(const SdpProblem& prob,
                              const std::vector<std::vector<CMat>>& d, int k) {
  double sig = 0.0, intf = 0.0;
  for (int m = 0; m < prob.n_bs; ++m) {
    const CVec& g = prob.eff[k][m];
    for (int kp = 0; kp < prob.n_users; ++kp) {
      const double p = (g.adjoint() * d[kp][m] * g).real()(0, 0);
      (kp == k ? sig : intf) += p;
    }
  }
  return std::log2(1.0 + sig / (intf + prob.noise_w(k)));
}

// Extracts per-pair precoders from the solved blocks. If relaxation rounding
// left a rate slightly short, all precoders are scaled by the smallest common
// factor >= 1 (capped at 1.1) that restores the targets.
inline DigitalPrecoders extract_precoders(const SdpSolution& sol, const SdpProblem& prob) {
  require(sol.status == SolveStatus::kOptimal, "extract_precoders: needs an optimal solution");
  DigitalPrecoders out;
  out.d.assign(prob.n_users, std::vector<CVec>(prob.n_bs));
  for (int k = 0; k < prob.n_users; ++k)
    for (int m = 0; m < prob.n_bs; ++m) {
      Rank1 r1 = extract_rank1(sol.d[k][m]);
      out.max_rank_ratio = std::max(out.max_rank_ratio, r1.rank_ratio);
      out.d[k][m] = std::move(r1.d);
    }
  if (out.max_rank_ratio > 1e-4) out.flagged = true;

  const Vec rates = rates_from_effective(prob.eff, out.d, prob.noise_w);
  double worst = 0.0;
  for (int k = 0; k < prob.n_users; ++k) worst = std::max(worst, prob.targets(k) - rates(k));
  if (worst <= 1e-9) return out;

  auto ok_at = [&](double scale) {
    std::vector<std::vector<CVec>> scaled = out.d;
    for (auto& row : scaled)
      for (auto& v : row) v *= scale;
    const Vec r = rates_from_effective(prob.eff, scaled, prob.noise_w);
    for (int k = 0; k < prob.n_users; ++k)
      if (r(k) < prob.targets(k) - 1e-9) return false;
    return true;
  };
  double lo = 1.0, hi = 1.1;
  // Power caps bound the admissible rescale.
  for (int m = 0; m < prob.n_bs; ++m) {
    double txm = 0.0;
    for (int k = 0; k < prob.n_users; ++k)
      txm += (out.d[k][m].adjoint() * prob.gram[m] * out.d[k][m]).real()(0, 0);
    if (txm > 0.0)
      hi = std::min(hi, std::sqrt((prob.p_max_w(m) * (1.0 + 1e-9) + 1e-12) / txm));
  }
  hi = std::max(hi, 1.0);
  if (!ok_at(hi)) {
    out.flagged = true;
    out.rescale_factor = hi;
  } else {
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok_at(mid) ? hi : lo) = mid;
    }
    out.rescale_factor = hi;
    out.flagged = out.flagged || hi > 1.0 + 1e-9;
  }
  if (out.rescale_factor != 1.0)
    for (auto& row : out.d)
      for (auto& v : row) v *= out.rescale_factor;
  return out;
}

// Applies the analog stage: w_{k,m} = R_m d_{k,m}.
inline std::vector<std::vector<CVec>> apply_analog(const std::vector<AnalogPrecoder>& analog,
                                                   const DigitalPrecoders& dp) {
  std::vector<std::vector<CVec>> w(dp.d.size());
  for (size_t k = 0; k < dp.d.size(); ++k) {
    w[k].resize(dp.d[k].size());
    for (size_t m = 0; m < dp.d[k].size(); ++m) w[k][m] = analog[m].matrix * dp.d[k][m];
  }
  return w;
}

struct VerifyReport {
  Vec rate_residual;   // scaled; >= -tol means satisfied
  Vec power_residual;  // scaled; <= tol means satisfied
  Vec min_eigenvalue;  // scaled by block lambda_max
  bool pass = false;
};

// Residuals of an optimal solution against the assembled program, each
// normalized by the natural scale of its constraint.
inline VerifyReport verify_solution(const SdpSolution& sol, const SdpProblem& prob,
                                    double tol = 1e-5) {
  require(sol.status == SolveStatus::kOptimal, "verify_solution: needs optimal status");
  VerifyReport rep;
  rep.rate_residual.resize(prob.n_users);
  rep.power_residual.resize(prob.n_bs);
  rep.min_eigenvalue.resize(prob.n_users * prob.n_bs);
  bool ok = true;
  for (int k = 0; k < prob.n_users; ++k) {
    const double beta = prob.snr_gap_k(k);
    double sig = 0.0, intf = 0.0;
    for (int m = 0; m < prob.n_bs; ++m) {
      const CVec& g = prob.eff[k][m];
      for (int kp = 0; kp < prob.n_users; ++kp) {
        const double p = (g.adjoint() * sol.d[kp][m] * g).real()(0, 0);
        (kp == k ? sig : intf) += p;
      }
    }
    const double lhs = sig - beta * intf;
    const double rhs = beta * prob.noise_w(k);
    const double scale = std::max({rhs, sig, beta * intf, 1e-300});
    rep.rate_residual(k) = (lhs - rhs) / scale;
    ok = ok && rep.rate_residual(k) >= -tol;
  }
  for (int m = 0; m < prob.n_bs; ++m) {
    const double cap = prob.silence[m] ? prob.p_max_w(m) : 0.0;
    const double scale = std::max(prob.p_max_w(m), 1e-300);
    rep.power_residual(m) = (sol.tx_per_bs_w(m) - cap) / scale;
    ok = ok && rep.power_residual(m) <= tol;
  }
  int idx = 0;
  for (int k = 0; k < prob.n_users; ++k)
    for (int m = 0; m < prob.n_bs; ++m, ++idx) {
      Eigen::SelfAdjointEigenSolver<CMat> es(sdp_detail::hermitian(sol.d[k][m]),
                                             Eigen::EigenvaluesOnly);
      const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
      rep.min_eigenvalue(idx) = es.eigenvalues().minCoeff() / lmax;
      ok = ok && rep.min_eigenvalue(idx) >= -tol;
    }
  rep.pass = ok;
  return rep;
}

// Self-describing sparse-triplet dump of the assembled program.
inline void dump_problem(const SdpProblem& prob, std::ostream& os) {
  os << "# hybeam sdp dump v1\n";
  os << "# users " << prob.n_users << " bs " << prob.n_bs << " envelope "
     << int(prob.envelope_mode) << "\n";
  os << "# entries: section k m i j re im   (matrices are Hermitian, L_m x L_m per BS block)\n";
  char buf[128];
  auto put = [&](const char* section, int k, int m, const CMat& mat) {
    for (int i = 0; i < mat.rows(); ++i)
      for (int j = 0; j < mat.cols(); ++j) {
        if (mat(i, j) == cplx(0.0, 0.0)) continue;
        std::snprintf(buf, sizeof buf, "%s %d %d %d %d %.17g %.17g\n", section, k, m, i, j,
                      mat(i, j).real(), mat(i, j).imag());
        os << buf;
      }
  };
  for (int m = 0; m < prob.n_bs; ++m)
    put("objective", -1, m, CMat(prob.obj_weight(m) * prob.gram[m]));
  for (int k = 0; k < prob.n_users; ++k)
    for (int m = 0; m < prob.n_bs; ++m)
      put("rate", k, m, CMat(prob.eff[k][m] * prob.eff[k][m].adjoint()));
  for (int k = 0; k < prob.n_users; ++k) {
    std::snprintf(buf, sizeof buf, "rate_rhs %d %.17g %.17g\n", k, prob.snr_gap_k(k),
                  prob.noise_w(k));
    os << buf;
  }
  for (int m = 0; m < prob.n_bs; ++m)
    put("power", -1, m, prob.gram[m]);
  for (int m = 0; m < prob.n_bs; ++m) {
    std::snprintf(buf, sizeof buf, "power_rhs %d %d %.17g\n", m, prob.silence[m],
                  prob.p_max_w(m));
    os << buf;
  }
}

} // namespace hybeam
