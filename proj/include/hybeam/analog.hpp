// SPDX-License-Identifier: Apache-2.0
//
// Closed-form equal-gain analog precoders for the fully-connected (FHP) and
// partially-connected (PHP) architectures, the OFDM variant built on the
// subcarrier-summed channel, and beam-pattern evaluation.
//
// The FHP column for user k co-phases the channel entrywise,
// r^(i) = exp(j angle(h^(i))) / sqrt(L N), which attains the equal-gain
// optimum |h^H r| = sum_i |h_i| / sqrt(L N). The PHP does the same per
// antenna subarray with entry modulus 1/sqrt(N). The global phase xi is an
// arbitrary constant and is fixed to 0; achieved gains do not depend on it.

#pragma once

#include <algorithm>
#include <ostream>
#include <vector>

#include "hybeam/common.hpp"
#include "hybeam/power.hpp"

namespace hybeam {

struct AnalogPrecoder {
  CMat matrix; // N x L
  Architecture arch = Architecture::kFdp;

  int n_antennas() const { return static_cast<int>(matrix.rows()); }
  int n_rf() const { return static_cast<int>(matrix.cols()); }
};

// Diagnostics for the OFDM variant (exact subcarrier cancellation).
struct EgtOfdmDiag {
  std::vector<int> degenerate_users;
};

namespace analog_detail {

inline cplx unit_phase(cplx v) {
  // angle(0) is taken as 0: any phase gives the same (zero) gain contribution.
  if (v == cplx(0.0, 0.0)) return cplx(1.0, 0.0);
  return v / std::abs(v);
}

} // namespace analog_detail

// FDP: no phase-shifter network, R = identity.
inline AnalogPrecoder analog_identity(int n_antennas) {
  require(n_antennas >= 1, "analog_identity: need at least one antenna");
  return {CMat::Identity(n_antennas, n_antennas), Architecture::kFdp};
}

// FHP equal-gain precoder for one BS. channels[k] is h_{k,m} of length N.
// Requires K <= L; users occupy the first K columns, remaining columns get
// the all-equal xi = 0 phases and carry zero digital power downstream.
inline AnalogPrecoder egt_fhp(const std::vector<CVec>& channels, int n_rf) {
  require(!channels.empty(), "egt_fhp: no channels");
  const int n = static_cast<int>(channels.front().size());
  const int k_users = static_cast<int>(channels.size());
  require(n >= 1, "egt_fhp: empty channel vector");
  require(k_users <= n_rf, "egt_fhp: more users than RF chains");
  const double amp = 1.0 / std::sqrt(static_cast<double>(n_rf) * n);
  CMat r = CMat::Constant(n, n_rf, cplx(amp, 0.0));
  for (int k = 0; k < k_users; ++k) {
    require(static_cast<int>(channels[k].size()) == n, "egt_fhp: channel length mismatch");
    for (int i = 0; i < n; ++i) r(i, k) = amp * analog_detail::unit_phase(channels[k](i));
  }
  return {std::move(r), Architecture::kFhp};
}

// PHP equal-gain precoder: block-diagonal, subarray k spans rows
// [(k-1) N/L, k N/L) with entry modulus 1/sqrt(N); off-block entries are 0.
inline AnalogPrecoder egt_php(const std::vector<CVec>& channels, int n_antennas, int n_rf) {
  require(!channels.empty(), "egt_php: no channels");
  require(n_rf >= 1 && n_antennas >= 1, "egt_php: bad dimensions");
  require(n_antennas % n_rf == 0, "egt_php: N/L must be an integer");
  const int k_users = static_cast<int>(channels.size());
  require(k_users <= n_rf, "egt_php: more users than RF chains");
  const int sub = n_antennas / n_rf;
  const double amp = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  CMat r = CMat::Zero(n_antennas, n_rf);
  for (int col = 0; col < n_rf; ++col) {
    for (int i = 0; i < sub; ++i) {
      const int row = col * sub + i;
      cplx phase(1.0, 0.0);
      if (col < k_users) {
        require(static_cast<int>(channels[col].size()) == n_antennas,
                "egt_php: channel length mismatch");
        phase = analog_detail::unit_phase(channels[col](row));
      }
      r(row, col) = amp * phase;
    }
  }
  return {std::move(r), Architecture::kPhp};
}

// OFDM variant: the single-carrier rule applied to the summed channel
// hbar_{k,m} = sum_ns h_{k,m}[ns]. Per antenna, the subcarrier terms are
// accumulated in a canonical (sorted) order so the result is exactly
// invariant under subcarrier permutations. If a user's summed channel
// cancels exactly, the subcarrier-0 phases are used and the user is
// reported.
inline AnalogPrecoder egt_ofdm(const std::vector<std::vector<CVec>>& sc_channels,
                               Architecture arch, int n_antennas, int n_rf,
                               EgtOfdmDiag* diag = nullptr) {
  require(arch != Architecture::kFdp, "egt_ofdm: FDP has no analog precoder");
  require(!sc_channels.empty(), "egt_ofdm: no channels");
  std::vector<CVec> summed(sc_channels.size());
  for (size_t k = 0; k < sc_channels.size(); ++k) {
    const auto& sc = sc_channels[k];
    require(!sc.empty(), "egt_ofdm: user without subcarriers");
    const int n = static_cast<int>(sc[0].size());
    CVec acc(n);
    std::vector<cplx> terms(sc.size());
    for (int i = 0; i < n; ++i) {
      for (size_t ns = 0; ns < sc.size(); ++ns) terms[ns] = sc[ns](i);
      std::sort(terms.begin(), terms.end(), [](const cplx& a, const cplx& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
      });
      cplx s(0.0, 0.0);
      for (const cplx& t : terms) s += t;
      acc(i) = sc.size() == 1 ? terms[0] : s;
    }
    if (acc.norm() == 0.0) {
      if (diag) diag->degenerate_users.push_back(static_cast<int>(k));
      acc = sc[0];
    }
    summed[k] = std::move(acc);
  }
  return arch == Architecture::kFhp ? egt_fhp(summed, n_rf)
                                    : egt_php(summed, n_antennas, n_rf);
}

// Array gain |a(theta)^H w|^2 over a grid, in dB, normalized so the grid
// maximum sits at 0 dB.
inline Vec beam_pattern(const CVec& w, const Vec& theta_grid) {
  require(w.size() >= 1 && w.norm() > 0.0, "beam_pattern: zero weight vector");
  const int n = static_cast<int>(w.size());
  Vec gain(theta_grid.size());
  for (int g = 0; g < theta_grid.size(); ++g) {
    const double shift = kPi * std::sin(theta_grid(g));
    cplx acc(0.0, 0.0);
    for (int i = 0; i < n; ++i)
      acc += std::conj(std::polar(1.0 / std::sqrt(static_cast<double>(n)), shift * i)) * w(i);
    gain(g) = std::norm(acc);
  }
  const double peak = gain.maxCoeff();
  for (int g = 0; g < gain.size(); ++g)
    gain(g) = 10.0 * std::log10(std::max(gain(g), 1e-300) / peak);
  return gain;
}

// Two-column (degrees, dB) text record of one beam for plotting.
inline void write_beam_pattern_csv(const CVec& w, const Vec& theta_grid_rad,
                                   std::ostream& os) {
  const Vec gain = beam_pattern(w, theta_grid_rad);
  os << "angle_deg,gain_db\n";
  char buf[64];
  for (int g = 0; g < theta_grid_rad.size(); ++g) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g\n", rad2deg(theta_grid_rad(g)), gain(g));
    os << buf;
  }
}

// Validates the architecture-specific constant-modulus structure; used as a
// precondition check before the digital stage.
inline void check_analog_invariants(const AnalogPrecoder& ap, double tol = 1e-9) {
  const int n = ap.n_antennas();
  const int l = ap.n_rf();
  switch (ap.arch) {
    case Architecture::kFdp: {
      require(n == l, "FDP requires N == L");
      require((ap.matrix - CMat::Identity(n, n)).norm() <= tol, "FDP analog precoder must be identity");
      return;
    }
    case Architecture::kFhp: {
      const double amp = 1.0 / std::sqrt(static_cast<double>(l) * n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < l; ++j)
          require(std::abs(std::abs(ap.matrix(i, j)) - amp) <= tol,
                  "FHP entries must have modulus 1/sqrt(LN)");
      return;
    }
    case Architecture::kPhp: {
      require(n % l == 0, "PHP requires integer N/L");
      const int sub = n / l;
      const double amp = 1.0 / std::sqrt(static_cast<double>(n));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < l; ++j) {
          const bool in_block = (i / sub) == j;
          if (in_block)
            require(std::abs(std::abs(ap.matrix(i, j)) - amp) <= tol,
                    "PHP block entries must have modulus 1/sqrt(N)");
          else
            require(ap.matrix(i, j) == cplx(0.0, 0.0), "PHP off-block entries must be exactly 0");
        }
      return;
    }
  }
}

} // namespace hybeam
