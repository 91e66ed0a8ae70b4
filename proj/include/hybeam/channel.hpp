// SPDX-License-Identifier: Apache-2.0
//
// Clustered mmWave channel generation: uniform-linear-array response,
// exponential LOS probability, close-in reference path loss with log-normal
// shadowing, and the narrow-band / per-subcarrier channel synthesis.
//
// Randomness discipline: every (user, BS) pair draws from its own substream,
// and the draw order inside a pair is fixed (LOS flag, shadowing, cluster
// means, ray offsets, ray gains), so realizations are reproducible and
// independent of generation order. The single-carrier channel is the
// n_subcarriers = 1 special case of the OFDM synthesis, which makes the two
// paths bit-identical by construction.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hybeam/common.hpp"
#include "hybeam/rng.hpp"

namespace hybeam {

struct PathLossParams {
  double carrier_wavelength_m = kSpeedOfLight / 28e9; // 28 GHz
  double exponent_los = 2.1;
  double exponent_nlos = 3.4;
  double shadow_sigma_los_db = 3.6;
  double shadow_sigma_nlos_db = 9.7;
  double blockage_beta = 0.01; // 1/m

  void validate() const {
    require(carrier_wavelength_m > 0, "wavelength must be > 0");
    require(exponent_los > 0 && exponent_nlos > 0, "path loss exponents must be > 0");
    require(shadow_sigma_los_db >= 0 && shadow_sigma_nlos_db >= 0, "shadow sigmas must be >= 0");
    require(blockage_beta >= 0, "blockage beta must be >= 0");
  }
};

struct ClusterParams {
  int n_clusters = 2;
  int n_rays = 20;
  double sector_min_deg = -90.0;
  double sector_max_deg = 90.0;
  double angular_spread_deg = 10.0; // Laplace scale, truncated at +-2 spreads

  void validate() const {
    require(n_clusters >= 1 && n_rays >= 1, "need at least one cluster and ray");
    require(sector_min_deg < sector_max_deg, "sector bounds out of order");
    require(angular_spread_deg > 0, "angular spread must be > 0");
  }
};

// Normalized ULA response, entry i = exp(j pi i sin(theta)) / sqrt(N).
inline CVec array_response(double theta_rad, int n_antennas) {
  require(n_antennas >= 1, "array_response: need at least one antenna");
  CVec a(n_antennas);
  const double amp = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  const double shift = kPi * std::sin(theta_rad);
  for (int i = 0; i < n_antennas; ++i) a(i) = std::polar(amp, shift * i);
  return a;
}

// LOS with probability exp(-beta * distance).
inline bool sample_los(double distance_m, const PathLossParams& params, Rng& rng) {
  require(distance_m >= 0, "sample_los: negative distance");
  return rng.bernoulli(std::exp(-params.blockage_beta * distance_m));
}

// Close-in free-space reference model:
// PL[dB] = 20 log10(4 pi / lambda) + 10 nbar log10(d) + X, d >= 1 m,
// X ~ N(0, sigma^2) in dB for the matching LOS/NLOS branch.
inline double path_loss_db(double distance_m, bool is_los, const PathLossParams& params,
                           Rng& rng) {
  require(distance_m >= 1.0, "path_loss_db: distance must be >= 1 m");
  const double nbar = is_los ? params.exponent_los : params.exponent_nlos;
  const double sigma = is_los ? params.shadow_sigma_los_db : params.shadow_sigma_nlos_db;
  const double ref = 20.0 * std::log10(4.0 * kPi / params.carrier_wavelength_m);
  return ref + 10.0 * nbar * std::log10(distance_m) + sigma * rng.normal();
}

// One pair's multipath draw; kept separate so tests can force ray values.
struct RayDraw {
  int n_clusters = 0;
  int n_rays = 0;
  bool los = false;
  double rho = 0.0;                // linear path gain 10^(-PL/10)
  std::vector<double> theta_rad;   // n_clusters * n_rays, cluster-major
  std::vector<cplx> alpha;         // same layout, CN(0,1)
};

inline RayDraw draw_rays(double distance_m, const ClusterParams& cluster,
                         const PathLossParams& pl, Rng& rng) {
  cluster.validate();
  pl.validate();
  const double d = std::max(1.0, distance_m);
  RayDraw out;
  out.n_clusters = cluster.n_clusters;
  out.n_rays = cluster.n_rays;
  out.los = sample_los(d, pl, rng);
  out.rho = db_to_linear(-path_loss_db(d, out.los, pl, rng));
  out.theta_rad.resize(static_cast<size_t>(cluster.n_clusters) * cluster.n_rays);
  out.alpha.resize(out.theta_rad.size());
  std::vector<double> means(cluster.n_clusters);
  for (int i = 0; i < cluster.n_clusters; ++i)
    means[i] = deg2rad(rng.uniform(cluster.sector_min_deg, cluster.sector_max_deg));
  const double spread = deg2rad(cluster.angular_spread_deg);
  for (int i = 0; i < cluster.n_clusters; ++i)
    for (int l = 0; l < cluster.n_rays; ++l)
      out.theta_rad[static_cast<size_t>(i) * cluster.n_rays + l] =
          means[i] + rng.laplace_truncated(spread, 2.0 * spread);
  for (auto& a : out.alpha) a = rng.cnormal();
  return out;
}

// h[ns] = sqrt(rho N / (Ncl Nray)) sum_i sum_l alpha_il a(theta_il)
//         * exp(-j 2 pi ns (i+1) / Ns)   (cluster index 1-based in the phase)
inline std::vector<CVec> synthesize_channel(const RayDraw& rays, int n_antennas,
                                            int n_subcarriers) {
  require(n_antennas >= 1, "synthesize_channel: need antennas");
  require(n_subcarriers >= 1, "synthesize_channel: need at least one subcarrier");
  const double scale =
      std::sqrt(rays.rho * n_antennas / (static_cast<double>(rays.n_clusters) * rays.n_rays));
  std::vector<CVec> h(n_subcarriers, CVec::Zero(n_antennas));
  std::vector<CVec> per_cluster(rays.n_clusters, CVec::Zero(n_antennas));
  for (int i = 0; i < rays.n_clusters; ++i)
    for (int l = 0; l < rays.n_rays; ++l) {
      const size_t idx = static_cast<size_t>(i) * rays.n_rays + l;
      per_cluster[i] += rays.alpha[idx] * array_response(rays.theta_rad[idx], n_antennas);
    }
  for (int ns = 0; ns < n_subcarriers; ++ns) {
    for (int i = 0; i < rays.n_clusters; ++i) {
      const cplx phase = std::polar(1.0, -2.0 * kPi * ns * (i + 1.0) / n_subcarriers);
      h[ns] += phase * per_cluster[i];
    }
    h[ns] *= scale;
  }
  return h;
}

struct PairChannel {
  CVec h;
  bool los = false;
  double rho = 0.0;
};

inline PairChannel draw_channel(const Eigen::Vector2d& bs_pos, const Eigen::Vector2d& user_pos,
                                int n_antennas, const ClusterParams& cluster,
                                const PathLossParams& pl, Rng& rng) {
  require(bs_pos.allFinite() && user_pos.allFinite(), "draw_channel: positions must be finite");
  const RayDraw rays = draw_rays((bs_pos - user_pos).norm(), cluster, pl, rng);
  PairChannel out;
  out.h = synthesize_channel(rays, n_antennas, 1)[0];
  out.los = rays.los;
  out.rho = rays.rho;
  return out;
}

struct OfdmPairChannel {
  std::vector<CVec> h; // per subcarrier
  bool los = false;
  double rho = 0.0;
};

inline OfdmPairChannel draw_ofdm_channel(const Eigen::Vector2d& bs_pos,
                                         const Eigen::Vector2d& user_pos, int n_antennas,
                                         const ClusterParams& cluster, const PathLossParams& pl,
                                         int n_subcarriers, Rng& rng) {
  require(bs_pos.allFinite() && user_pos.allFinite(), "draw_ofdm_channel: positions must be finite");
  require(n_subcarriers >= 1, "draw_ofdm_channel: need at least one subcarrier");
  const RayDraw rays = draw_rays((bs_pos - user_pos).norm(), cluster, pl, rng);
  OfdmPairChannel out;
  out.h = synthesize_channel(rays, n_antennas, n_subcarriers);
  out.los = rays.los;
  out.rho = rays.rho;
  return out;
}

// All user-BS pairs of one realization.
struct ChannelSet {
  std::vector<std::vector<CVec>> h;       // [k][m]
  std::vector<std::vector<char>> los;     // [k][m]
  std::vector<std::vector<double>> rho;   // [k][m]
  std::uint64_t seed = 0;

  int n_users() const { return static_cast<int>(h.size()); }
  int n_bs() const { return h.empty() ? 0 : static_cast<int>(h.front().size()); }
};

struct OfdmChannelSet {
  std::vector<std::vector<std::vector<CVec>>> h; // [k][m][ns]
  std::vector<std::vector<char>> los;
  std::vector<std::vector<double>> rho;
  int n_subcarriers = 1;
  std::uint64_t seed = 0;
};

// Substream tag layout: channel pair (k, m) uses (seed, k, m, 1).
inline OfdmChannelSet draw_ofdm_channel_set(const std::vector<Eigen::Vector2d>& bs_pos,
                                            const std::vector<Eigen::Vector2d>& user_pos,
                                            const std::vector<int>& n_antennas,
                                            const ClusterParams& cluster,
                                            const PathLossParams& pl, int n_subcarriers,
                                            std::uint64_t seed) {
  require(bs_pos.size() == n_antennas.size(), "draw_channel_set: antenna list size mismatch");
  OfdmChannelSet set;
  set.seed = seed;
  set.n_subcarriers = n_subcarriers;
  const int k_users = static_cast<int>(user_pos.size());
  const int m_bs = static_cast<int>(bs_pos.size());
  set.h.resize(k_users);
  set.los.assign(k_users, std::vector<char>(m_bs, 0));
  set.rho.assign(k_users, std::vector<double>(m_bs, 0.0));
  for (int k = 0; k < k_users; ++k) {
    set.h[k].resize(m_bs);
    for (int m = 0; m < m_bs; ++m) {
      Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(m), 1);
      auto pc = draw_ofdm_channel(bs_pos[m], user_pos[k], n_antennas[m], cluster, pl,
                                  n_subcarriers, rng);
      set.h[k][m] = std::move(pc.h);
      set.los[k][m] = pc.los ? 1 : 0;
      set.rho[k][m] = pc.rho;
    }
  }
  return set;
}

inline ChannelSet draw_channel_set(const std::vector<Eigen::Vector2d>& bs_pos,
                                   const std::vector<Eigen::Vector2d>& user_pos,
                                   const std::vector<int>& n_antennas,
                                   const ClusterParams& cluster, const PathLossParams& pl,
                                   std::uint64_t seed) {
  OfdmChannelSet o = draw_ofdm_channel_set(bs_pos, user_pos, n_antennas, cluster, pl, 1, seed);
  ChannelSet set;
  set.seed = seed;
  set.h.resize(o.h.size());
  set.los = std::move(o.los);
  set.rho = std::move(o.rho);
  for (size_t k = 0; k < o.h.size(); ++k) {
    set.h[k].resize(o.h[k].size());
    for (size_t m = 0; m < o.h[k].size(); ++m) set.h[k][m] = std::move(o.h[k][m][0]);
  }
  return set;
}

// Text dump for cross-implementation regression. Format: a comment header,
// then one line per (k, m) pair:
//   k m N los rho re0 im0 re1 im1 ... re{N-1} im{N-1}
// i.e. the channel vector row-major with one complex entry per field pair.
inline void dump_channel_set(const ChannelSet& set, std::ostream& os) {
  os << "# hybeam channel dump v1\n";
  os << "# seed " << set.seed << "\n";
  os << "# users " << set.n_users() << " bs " << set.n_bs() << "\n";
  os << "# k m N los rho re im ...\n";
  char buf[64];
  for (int k = 0; k < set.n_users(); ++k)
    for (int m = 0; m < set.n_bs(); ++m) {
      const CVec& h = set.h[k][m];
      os << k << " " << m << " " << h.size() << " " << int(set.los[k][m]);
      std::snprintf(buf, sizeof buf, " %.17g", set.rho[k][m]);
      os << buf;
      for (int i = 0; i < h.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %.17g %.17g", h(i).real(), h(i).imag());
        os << buf;
      }
      os << "\n";
    }
}

inline ChannelSet load_channel_set(std::istream& is) {
  ChannelSet set;
  std::string line;
  std::vector<std::tuple<int, int, CVec, int, double>> rows;
  int max_k = -1, max_m = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line);
      std::string hash, key;
      hs >> hash >> key;
      if (key == "seed") hs >> set.seed;
      continue;
    }
    std::istringstream ls(line);
    int k, m, n, los;
    double rho;
    ls >> k >> m >> n >> los >> rho;
    CVec h(n);
    for (int i = 0; i < n; ++i) {
      double re, im;
      ls >> re >> im;
      h(i) = cplx(re, im);
    }
    require(!ls.fail(), "channel dump: malformed line");
    rows.emplace_back(k, m, std::move(h), los, rho);
    max_k = std::max(max_k, k);
    max_m = std::max(max_m, m);
  }
  set.h.assign(max_k + 1, std::vector<CVec>(max_m + 1));
  set.los.assign(max_k + 1, std::vector<char>(max_m + 1, 0));
  set.rho.assign(max_k + 1, std::vector<double>(max_m + 1, 0.0));
  for (auto& [k, m, h, los, rho] : rows) {
    set.h[k][m] = std::move(h);
    set.los[k][m] = static_cast<char>(los);
    set.rho[k][m] = rho;
  }
  return set;
}

} // namespace hybeam
