// SPDX-License-Identifier: Apache-2.0
//
// Small dense conic interior-point solver for semidefinite programs in
// standard primal form
//
//     min <C, X>   s.t.  <A_i, X> = b_i  (i = 1..p),   X >= 0,
//
// where X lives in a product of real symmetric PSD blocks (size-1 blocks act
// as nonnegative scalars, e.g. inequality slacks). The implementation is a
// homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector step, so primal/dual solutions and infeasibility
// certificates come out of one code path. Problem sizes in this project are
// tiny (blocks of ~8-16 rows, <= ~12 constraints), so everything is dense.

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hybeam/common.hpp"

namespace hybeam {

struct ConeRowEntry {
  int block = 0;
  Mat mat; // symmetric, dims[block] x dims[block]
};

// min <cost, X> s.t. <rows[i], X> = rhs[i], X in PSD block cone.
struct ConeProblem {
  std::vector<int> dims;
  std::vector<std::vector<ConeRowEntry>> rows;
  std::vector<ConeRowEntry> cost;
  Vec rhs;
};

enum class ConeStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kNumericalFailure };

struct ConeSolution {
  ConeStatus status = ConeStatus::kNumericalFailure;
  std::vector<Mat> x; // tau-normalized primal blocks (certificate if infeasible)
  Vec y;              // equality multipliers
  std::vector<Mat> s; // dual slack blocks
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double rel_gap = std::numeric_limits<double>::infinity();
  double pres = std::numeric_limits<double>::infinity();
  double dres = std::numeric_limits<double>::infinity();
  double cert_quality = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct ConeOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-7;
  int max_iter = 100;
  bool verbose = false;
};

namespace conelp_detail {

inline Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline double dot(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

// Per-block Nesterov-Todd scaling. R satisfies W = R R^T with W S W = X, and
// the scaled point R^{-1} X R^{-T} = R^T S R = diag(lambda) is diagonal.
struct NtScaling {
  Mat r;     // n x n
  Mat rinv;  // n x n
  Vec lambda;
  bool ok = false;
};

inline NtScaling nt_scaling(const Mat& x, const Mat& s) {
  NtScaling out;
  const int n = static_cast<int>(x.rows());
  if (n == 1) {
    const double xv = x(0, 0), sv = s(0, 0);
    if (!(xv > 0.0) || !(sv > 0.0)) return out;
    const double w = std::sqrt(xv / sv);
    out.r = Mat::Constant(1, 1, std::sqrt(w));
    out.rinv = Mat::Constant(1, 1, 1.0 / std::sqrt(w));
    out.lambda = Vec::Constant(1, std::sqrt(xv * sv));
    out.ok = true;
    return out;
  }
  Eigen::LLT<Mat> llt(x);
  if (llt.info() != Eigen::Success) return out;
  const Mat l = llt.matrixL();
  const Mat m = l.transpose() * s * l;
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(m));
  if (es.info() != Eigen::Success) return out;
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) return out;
  const Vec q14 = ev.array().pow(0.25);
  // r = L Q diag(ev^{-1/4}); rinv = diag(ev^{1/4}) Q^T L^{-1}
  out.r = l * es.eigenvectors() * q14.cwiseInverse().asDiagonal();
  Mat linv = Mat::Identity(n, n);
  l.triangularView<Eigen::Lower>().solveInPlace(linv);
  out.rinv = q14.asDiagonal() * es.eigenvectors().transpose() * linv;
  out.lambda = ev.array().sqrt();
  out.ok = true;
  return out;
}

// Solve lambda o U = T for U, with lambda diagonal: U_ij = 2 T_ij / (l_i + l_j).
inline Mat jordan_solve(const Vec& lambda, const Mat& t) {
  const int n = static_cast<int>(t.rows());
  Mat u(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) u(i, j) = 2.0 * t(i, j) / (lambda(i) + lambda(j));
  return u;
}

// Largest step alpha with diag(lambda) + alpha * d >= 0 (d symmetric).
inline double max_step_block(const Vec& lambda, const Mat& d) {
  const int n = static_cast<int>(d.rows());
  if (n == 1) {
    const double dv = d(0, 0);
    return dv >= 0.0 ? std::numeric_limits<double>::infinity() : lambda(0) / (-dv);
  }
  const Vec isq = lambda.array().sqrt().inverse();
  const Mat scaled = isq.asDiagonal() * d * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(scaled), Eigen::EigenvaluesOnly);
  const double mineig = es.eigenvalues().minCoeff();
  return mineig >= 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (-mineig);
}

} // namespace conelp_detail

inline ConeSolution solve_cone(const ConeProblem& prob, const ConeOptions& opts = {}) {
  using namespace conelp_detail;
  const int nblocks = static_cast<int>(prob.dims.size());
  const int p = static_cast<int>(prob.rhs.size());
  require(static_cast<int>(prob.rows.size()) == p, "conelp: rows/rhs size mismatch");

  ConeSolution sol;

  // Dense cost per block.
  std::vector<Mat> cost(nblocks);
  for (int b = 0; b < nblocks; ++b) cost[b] = Mat::Zero(prob.dims[b], prob.dims[b]);
  for (const auto& e : prob.cost) cost[e.block] += sym(e.mat);

  // Row entries grouped per block, for the Schur complement assembly.
  struct BlockUse { int row; int entry; };
  std::vector<std::vector<BlockUse>> uses(nblocks);
  for (int i = 0; i < p; ++i)
    for (int e = 0; e < static_cast<int>(prob.rows[i].size()); ++e)
      uses[prob.rows[i][e].block].push_back({i, e});

  double norm_b = prob.rhs.norm();
  double norm_c = 0.0;
  for (int b = 0; b < nblocks; ++b) norm_c += cost[b].squaredNorm();
  norm_c = std::sqrt(norm_c);

  // Iterates.
  std::vector<Mat> X(nblocks), S(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    X[b] = Mat::Identity(prob.dims[b], prob.dims[b]);
    S[b] = Mat::Identity(prob.dims[b], prob.dims[b]);
  }
  Vec y = Vec::Zero(p);
  double tau = 1.0, kappa = 1.0;

  double nu = 1.0;
  for (int b = 0; b < nblocks; ++b) nu += prob.dims[b];

  auto apply_a = [&](const std::vector<Mat>& v) {
    Vec out = Vec::Zero(p);
    for (int i = 0; i < p; ++i)
      for (const auto& e : prob.rows[i]) out(i) += dot(e.mat, v[e.block]);
    return out;
  };

  std::vector<Mat> dX(nblocks), dS(nblocks), dXs(nblocks), dSs(nblocks);
  std::vector<Mat> dXa(nblocks), dSa(nblocks), dXsa(nblocks), dSsa(nblocks);

  int stall_count = 0;

  // Best iterate seen so far; the path can wander once mu reaches the
  // rounding floor, so the final answer is taken from here.
  double best_merit = std::numeric_limits<double>::infinity();
  std::vector<Mat> bX = X, bS = S;
  Vec by_ = y;
  double btau = tau;
  double bpres = sol.pres, bdres = sol.dres, brelgap = sol.rel_gap;
  double bpobj = 0.0, bdobj = 0.0;

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    sol.iterations = iter;

    // Residuals of the self-dual system.
    Vec ax = apply_a(X);
    Vec res_p = ax - prob.rhs * tau;
    std::vector<Mat> res_d(nblocks);
    for (int b = 0; b < nblocks; ++b) res_d[b] = cost[b] * tau - S[b];
    for (int i = 0; i < p; ++i)
      for (const auto& e : prob.rows[i]) res_d[e.block] -= y(i) * sym(e.mat);
    double cx = 0.0, xs = 0.0;
    for (int b = 0; b < nblocks; ++b) {
      cx += dot(cost[b], X[b]);
      xs += dot(X[b], S[b]);
    }
    const double by = prob.rhs.dot(y);
    const double res_g = by - cx - kappa;
    const double mu = (xs + tau * kappa) / nu;

    // Convergence of the tau-normalized iterate.
    double dres_norm = 0.0;
    for (int b = 0; b < nblocks; ++b) dres_norm += res_d[b].squaredNorm();
    dres_norm = std::sqrt(dres_norm);
    sol.pres = res_p.norm() / tau / (1.0 + norm_b);
    sol.dres = dres_norm / tau / (1.0 + norm_c);
    sol.primal_obj = cx / tau;
    sol.dual_obj = by / tau;
    const double gap = xs / (tau * tau);
    sol.rel_gap = gap / std::max({1.0, std::abs(sol.primal_obj), std::abs(sol.dual_obj)});

    if (opts.verbose) {
      std::fprintf(stderr, "it %2d  pobj % .6e dobj % .6e gap %.2e pres %.2e dres %.2e tau %.2e kap %.2e\n",
                   iter, sol.primal_obj, sol.dual_obj, sol.rel_gap, sol.pres, sol.dres, tau, kappa);
    }

    if (sol.pres <= opts.feas_tol && sol.dres <= opts.feas_tol && sol.rel_gap <= opts.gap_tol) {
      sol.status = ConeStatus::kOptimal;
      sol.x.resize(nblocks);
      sol.s.resize(nblocks);
      for (int b = 0; b < nblocks; ++b) {
        sol.x[b] = X[b] / tau;
        sol.s[b] = S[b] / tau;
      }
      sol.y = y / tau;
      return sol;
    }
    const double merit = std::max({sol.pres, sol.dres, sol.rel_gap});
    if (merit < best_merit) {
      best_merit = merit;
      bX = X;
      bS = S;
      by_ = y;
      btau = tau;
      bpres = sol.pres;
      bdres = sol.dres;
      brelgap = sol.rel_gap;
      bpobj = sol.primal_obj;
      bdobj = sol.dual_obj;
    }

    // Infeasibility certificates: A^T(y) + S = C tau - res_d.
    if (by > 0.0) {
      double cert = 0.0;
      for (int b = 0; b < nblocks; ++b) cert += (cost[b] * tau - res_d[b]).squaredNorm();
      cert = std::sqrt(cert) / by;
      double ynorm = y.norm() / by;
      if (cert <= opts.feas_tol * (1.0 + ynorm)) {
        sol.status = ConeStatus::kPrimalInfeasible;
        sol.y = y / by;
        sol.s.resize(nblocks);
        sol.x.assign(nblocks, Mat());
        for (int b = 0; b < nblocks; ++b) sol.s[b] = (cost[b] * tau - res_d[b]) / by * -1.0;
        // s holds -A^T(y)/by >= 0 up to certificate error
        sol.cert_quality = cert;
        return sol;
      }
    }
    if (cx < 0.0) {
      const double cert = ax.norm() / (-cx);
      double xnorm = 0.0;
      for (int b = 0; b < nblocks; ++b) xnorm += X[b].squaredNorm();
      xnorm = std::sqrt(xnorm) / (-cx);
      if (cert <= opts.feas_tol * (1.0 + xnorm)) {
        sol.status = ConeStatus::kDualInfeasible;
        sol.x.resize(nblocks);
        for (int b = 0; b < nblocks; ++b) sol.x[b] = X[b] / (-cx);
        sol.cert_quality = cert;
        return sol;
      }
    }
    if (iter == opts.max_iter) break;

    // Nesterov-Todd scaling per block.
    std::vector<NtScaling> nt(nblocks);
    bool scaling_ok = true;
    for (int b = 0; b < nblocks; ++b) {
      nt[b] = nt_scaling(X[b], S[b]);
      scaling_ok = scaling_ok && nt[b].ok;
    }
    if (!scaling_ok) break;

    // Scaled data.
    std::vector<std::vector<Mat>> arows(p);
    for (int i = 0; i < p; ++i) {
      arows[i].resize(prob.rows[i].size());
      for (size_t e = 0; e < prob.rows[i].size(); ++e) {
        const auto& re = prob.rows[i][e];
        arows[i][e] = sym(nt[re.block].r.transpose() * re.mat * nt[re.block].r);
      }
    }
    std::vector<Mat> ctil(nblocks), rdtil(nblocks);
    for (int b = 0; b < nblocks; ++b) {
      ctil[b] = sym(nt[b].r.transpose() * cost[b] * nt[b].r);
      rdtil[b] = sym(nt[b].r.transpose() * res_d[b] * nt[b].r);
    }

    // Schur complement M_ij = sum_b <Atil_i, Atil_j>.
    Mat schur = Mat::Zero(p, p);
    for (int b = 0; b < nblocks; ++b) {
      const auto& us = uses[b];
      for (size_t a = 0; a < us.size(); ++a)
        for (size_t c = a; c < us.size(); ++c) {
          const double v = dot(arows[us[a].row][us[a].entry], arows[us[c].row][us[c].entry]);
          schur(us[a].row, us[c].row) += v;
          if (us[a].row != us[c].row) schur(us[c].row, us[a].row) += v;
        }
    }
    Eigen::LDLT<Mat> schur_fac(schur);
    if (schur_fac.info() != Eigen::Success) break;

    Vec hvec = Vec::Zero(p);
    Vec arvec = Vec::Zero(p);
    for (int i = 0; i < p; ++i)
      for (size_t e = 0; e < prob.rows[i].size(); ++e) {
        hvec(i) += dot(arows[i][e], ctil[prob.rows[i][e].block]);
        arvec(i) += dot(arows[i][e], rdtil[prob.rows[i][e].block]);
      }
    double c0 = 0.0, cr = 0.0;
    for (int b = 0; b < nblocks; ++b) {
      c0 += dot(ctil[b], ctil[b]);
      cr += dot(ctil[b], rdtil[b]);
    }
    const Vec v_dir = schur_fac.solve(hvec + prob.rhs);

    double dtau = 0.0, dkappa = 0.0;

    // One Newton direction for a given complementarity target.
    auto solve_dir = [&](const std::vector<Mat>& target, double tk, std::vector<Mat>& oX,
                         std::vector<Mat>& oS, std::vector<Mat>& oXs, std::vector<Mat>& oSs,
                         Vec& oy, double& otau, double& okappa) {
      std::vector<Mat> u(nblocks);
      for (int b = 0; b < nblocks; ++b) u[b] = jordan_solve(nt[b].lambda, target[b]);
      Vec agu = Vec::Zero(p);
      for (int i = 0; i < p; ++i)
        for (size_t e = 0; e < prob.rows[i].size(); ++e)
          agu(i) += dot(arows[i][e], u[prob.rows[i][e].block]);
      const Vec rhs1 = -res_p - agu + arvec;
      const Vec u_dir = schur_fac.solve(rhs1);
      double g0 = -cr;
      for (int b = 0; b < nblocks; ++b) g0 += dot(ctil[b], u[b]);
      const double denom = (prob.rhs - hvec).dot(v_dir) + c0 + kappa / tau;
      otau = (-res_g + g0 + tk / tau - (prob.rhs - hvec).dot(u_dir)) / denom;
      oy = u_dir + otau * v_dir;
      for (int b = 0; b < nblocks; ++b) oS[b] = cost[b] * otau + res_d[b];
      for (int i = 0; i < p; ++i)
        for (const auto& e : prob.rows[i]) oS[e.block] -= oy(i) * sym(e.mat);
      for (int b = 0; b < nblocks; ++b) {
        oSs[b] = sym(nt[b].r.transpose() * oS[b] * nt[b].r);
        oXs[b] = u[b] - oSs[b];
        oX[b] = sym(nt[b].r * oXs[b] * nt[b].r.transpose());
      }
      okappa = (tk - kappa * otau) / tau;
    };

    auto max_step = [&](const std::vector<Mat>& xs_dir, const std::vector<Mat>& ss_dir,
                        double dt, double dk) {
      double a = std::numeric_limits<double>::infinity();
      for (int b = 0; b < nblocks; ++b) {
        a = std::min(a, max_step_block(nt[b].lambda, xs_dir[b]));
        a = std::min(a, max_step_block(nt[b].lambda, ss_dir[b]));
      }
      if (dt < 0.0) a = std::min(a, tau / (-dt));
      if (dk < 0.0) a = std::min(a, kappa / (-dk));
      return a;
    };

    for (int b = 0; b < nblocks; ++b) {
      dXa[b].resize(prob.dims[b], prob.dims[b]);
      dSa[b].resize(prob.dims[b], prob.dims[b]);
    }

    // Predictor (affine) direction: drive lambda o lambda and tau*kappa to 0.
    std::vector<Mat> target(nblocks);
    for (int b = 0; b < nblocks; ++b) {
      target[b] = Mat::Zero(prob.dims[b], prob.dims[b]);
      target[b].diagonal() = -nt[b].lambda.array().square();
    }
    double dtau_a = 0.0, dkappa_a = 0.0;
    Vec dya(p);
    solve_dir(target, -tau * kappa, dXa, dSa, dXsa, dSsa, dya, dtau_a, dkappa_a);
    const double alpha_aff = std::min(1.0, max_step(dXsa, dSsa, dtau_a, dkappa_a));

    double xs_aff = 0.0;
    for (int b = 0; b < nblocks; ++b) {
      const Vec l = nt[b].lambda;
      xs_aff += l.squaredNorm();
      xs_aff += alpha_aff * (dXsa[b].diagonal().dot(l) + dSsa[b].diagonal().dot(l));
      xs_aff += alpha_aff * alpha_aff * dot(dXsa[b], dSsa[b]);
    }
    const double mu_aff =
        (xs_aff + (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkappa_a)) / nu;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(1.0, std::max(1e-10, sigma));

    // Corrector (combined) direction.
    for (int b = 0; b < nblocks; ++b) {
      Mat corr = 0.5 * (dXsa[b] * dSsa[b] + dSsa[b] * dXsa[b]);
      target[b] = -corr;
      target[b].diagonal() += (sigma * mu - nt[b].lambda.array().square()).matrix();
    }
    const double tk = sigma * mu - tau * kappa - dtau_a * dkappa_a;
    Vec dy(p);
    solve_dir(target, tk, dX, dS, dXs, dSs, dy, dtau, dkappa);

    double alpha = 0.99 * max_step(dXs, dSs, dtau, dkappa);
    alpha = std::min(1.0, alpha);
    if (!(alpha > 1e-10)) {
      if (++stall_count >= 3) break;
      alpha = std::max(alpha, 0.0);
    } else {
      stall_count = 0;
    }

    for (int b = 0; b < nblocks; ++b) {
      X[b] = sym(X[b] + alpha * dX[b]);
      S[b] = sym(S[b] + alpha * dS[b]);
    }
    y += alpha * dy;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0) || !std::isfinite(tau)) break;
  }

  // Fall back to the best iterate; accept it if it met the tolerances.
  sol.pres = bpres;
  sol.dres = bdres;
  sol.rel_gap = brelgap;
  sol.primal_obj = bpobj;
  sol.dual_obj = bdobj;
  sol.status = (bpres <= opts.feas_tol && bdres <= opts.feas_tol && brelgap <= opts.gap_tol)
                   ? ConeStatus::kOptimal
                   : ConeStatus::kNumericalFailure;
  sol.x.resize(nblocks);
  sol.s.resize(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    sol.x[b] = bX[b] / btau;
    sol.s[b] = bS[b] / btau;
  }
  sol.y = by_ / btau;
  return sol;
}

} // namespace hybeam
