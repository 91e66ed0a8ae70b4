// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the CLI front end: scenario configs (JSON),
// single runs, sweeps, beam-pattern exports, OFDM runs and the validation
// suite. Exit codes: 0 success, 1 config error, 2 runtime/solver-setup error,
// 3 validation failure.

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybeam/montecarlo.hpp"
#include "hybeam/validation.hpp"

namespace hybeam {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int workers = 1;
  std::string preset = "table1";
};

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
};

struct BeamPatternSpec {
  std::vector<double> aod_deg{-60.0, -30.0, 30.0, 60.0};
  double grid_step_deg = 0.5;
  double distance_m = 100.0;
  std::vector<Architecture> architectures{Architecture::kFdp, Architecture::kFhp,
                                          Architecture::kPhp};
};

struct RunConfig {
  Scenario scenario;
  std::optional<SweepSpec> sweep;
  std::optional<BeamPatternSpec> beam;
  std::string out_dir = "out";
  bool write_realizations = false;
  json echo; // parsed config with defaults applied
};

namespace cli_detail {

inline const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key))
    throw ConfigError("missing required field '" + where + "." + key + "'");
  return j.at(key);
}

template <typename T>
T need_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return need(j, key, where).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
T opt_as(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + "." + key + "' has the wrong type");
  }
}

inline Architecture parse_arch(const std::string& s) {
  if (s == "fdp") return Architecture::kFdp;
  if (s == "fhp") return Architecture::kFhp;
  if (s == "php") return Architecture::kPhp;
  throw ConfigError("field 'scenario.architecture' must be one of fdp|fhp|php, got '" + s + "'");
}

inline RunMode parse_mode(const std::string& s) {
  if (s == "algorithm1") return RunMode::kAlgorithm1;
  if (s == "algorithm2") return RunMode::kAlgorithm2;
  if (s == "all-active" || s == "all_active") return RunMode::kAllActive;
  throw ConfigError("field 'scenario.mode' must be algorithm1|algorithm2|all-active, got '" +
                    s + "'");
}

} // namespace cli_detail

inline RunConfig parse_config(const json& root, const CliOverrides& ov = {}) {
  using namespace cli_detail;
  if (ov.preset != "table1")
    throw ConfigError("unknown preset '" + ov.preset + "' (available: table1)");
  RunConfig cfg;
  const json& sc = need(root, "scenario", "");
  Scenario& s = cfg.scenario;
  s.n_bs = need_as<int>(sc, "n_bs", "scenario");
  s.n_users = need_as<int>(sc, "n_users", "scenario");
  s.n_antennas = need_as<int>(sc, "n_antennas", "scenario");
  s.arch = parse_arch(need_as<std::string>(sc, "architecture", "scenario"));
  if (s.arch == Architecture::kFdp)
    s.n_rf_chains = opt_as<int>(sc, "n_rf_chains", s.n_antennas, "scenario");
  else
    s.n_rf_chains = need_as<int>(sc, "n_rf_chains", "scenario");
  s.target_se = need_as<double>(sc, "target_se_bps_hz", "scenario");
  s.realizations = need_as<int>(sc, "realizations", "scenario");
  s.seed = opt_as<std::uint64_t>(sc, "seed", 1, "scenario");
  s.noise_dbm = opt_as<double>(sc, "noise_dbm", -84.0, "scenario");
  s.area_m = opt_as<double>(sc, "area_m", 200.0, "scenario");
  s.mode = parse_mode(opt_as<std::string>(sc, "mode", "algorithm1", "scenario"));
  if (sc.contains("bs_positions")) {
    for (const auto& p : sc.at("bs_positions")) {
      if (!p.is_array() || p.size() != 2)
        throw ConfigError("field 'scenario.bs_positions' entries must be [x, y] pairs");
      s.bs_positions.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  }

  // Hardware defaults follow the shipped table1 preset.
  if (root.contains("hardware")) {
    const json& hw = root.at("hardware");
    auto& p = s.profile;
    p.p_ps_w = opt_as<double>(hw, "p_ps_w", p.p_ps_w, "hardware");
    p.p_dac_w = opt_as<double>(hw, "p_dac_w", p.p_dac_w, "hardware");
    p.p_rf_w = opt_as<double>(hw, "p_rf_w", p.p_rf_w, "hardware");
    p.loss_factor = opt_as<double>(hw, "loss_factor", p.loss_factor, "hardware");
    p.pa_efficiency = opt_as<double>(hw, "pa_efficiency", p.pa_efficiency, "hardware");
    p.silent_scalar = opt_as<double>(hw, "silent_scalar", p.silent_scalar, "hardware");
    if (hw.contains("p_max_dbm"))
      p.p_max_w = dbm_to_watt(hw.at("p_max_dbm").get<double>());
    p.p_max_w = opt_as<double>(hw, "p_max_w", p.p_max_w, "hardware");
    p.weight = opt_as<double>(hw, "weight", p.weight, "hardware");
  }
  if (root.contains("channel")) {
    const json& ch = root.at("channel");
    auto& c = s.cluster;
    auto& pl = s.pathloss;
    if (ch.contains("carrier_ghz"))
      pl.carrier_wavelength_m = kSpeedOfLight / (ch.at("carrier_ghz").get<double>() * 1e9);
    c.n_clusters = opt_as<int>(ch, "n_clusters", c.n_clusters, "channel");
    c.n_rays = opt_as<int>(ch, "n_rays", c.n_rays, "channel");
    c.sector_min_deg = opt_as<double>(ch, "sector_min_deg", c.sector_min_deg, "channel");
    c.sector_max_deg = opt_as<double>(ch, "sector_max_deg", c.sector_max_deg, "channel");
    c.angular_spread_deg =
        opt_as<double>(ch, "angular_spread_deg", c.angular_spread_deg, "channel");
    pl.exponent_los = opt_as<double>(ch, "exponent_los", pl.exponent_los, "channel");
    pl.exponent_nlos = opt_as<double>(ch, "exponent_nlos", pl.exponent_nlos, "channel");
    pl.shadow_sigma_los_db =
        opt_as<double>(ch, "shadow_sigma_los_db", pl.shadow_sigma_los_db, "channel");
    pl.shadow_sigma_nlos_db =
        opt_as<double>(ch, "shadow_sigma_nlos_db", pl.shadow_sigma_nlos_db, "channel");
    pl.blockage_beta = opt_as<double>(ch, "blockage_beta_per_m", pl.blockage_beta, "channel");
  }
  if (root.contains("solver")) {
    const json& so = root.at("solver");
    auto& a = s.algo;
    a.eps_w = opt_as<double>(so, "eps_w", a.eps_w, "solver");
    a.eps_stop_w = opt_as<double>(so, "eps_stop_w", a.eps_stop_w, "solver");
    a.eps_stop_rel = opt_as<double>(so, "eps_stop_rel", a.eps_stop_rel, "solver");
    a.max_iter = opt_as<int>(so, "max_iter", a.max_iter, "solver");
    a.silent_threshold_w =
        opt_as<double>(so, "silent_threshold_w", a.silent_threshold_w, "solver");
    a.assoc_threshold_w = opt_as<double>(so, "assoc_threshold_w", a.assoc_threshold_w, "solver");
    a.sdp.gap_tol = opt_as<double>(so, "sdp_gap_tol", a.sdp.gap_tol, "solver");
    a.sdp.feas_tol = opt_as<double>(so, "sdp_feas_tol", a.sdp.feas_tol, "solver");
    a.sdp.max_iter = opt_as<int>(so, "sdp_max_iter", a.sdp.max_iter, "solver");
  }
  if (root.contains("ofdm")) {
    const json& of = root.at("ofdm");
    OfdmSettings o;
    o.n_subcarriers = opt_as<int>(of, "n_subcarriers", o.n_subcarriers, "ofdm");
    o.per_subcarrier_hw = opt_as<bool>(of, "per_subcarrier_hw", o.per_subcarrier_hw, "ofdm");
    if (of.contains("p_max_fraction")) {
      const double f = of.at("p_max_fraction").get<double>();
      if (!(f > 0.0 && f <= 1.0))
        throw ConfigError("field 'ofdm.p_max_fraction' must lie in (0, 1]");
      o.p_max_fraction = f;
    }
    o.subcarrier_bandwidth_mhz =
        opt_as<double>(of, "subcarrier_bandwidth_mhz", o.subcarrier_bandwidth_mhz, "ofdm");
    s.ofdm = o;
  }
  if (root.contains("sweep")) {
    const json& sw = root.at("sweep");
    SweepSpec spec;
    spec.parameter = need_as<std::string>(sw, "parameter", "sweep");
    spec.values = need_as<std::vector<double>>(sw, "values", "sweep");
    if (spec.values.empty()) throw ConfigError("field 'sweep.values' must be nonempty");
    cfg.sweep = spec;
  }
  if (root.contains("beam_pattern")) {
    const json& bp = root.at("beam_pattern");
    BeamPatternSpec spec;
    spec.aod_deg = opt_as<std::vector<double>>(bp, "aod_deg", spec.aod_deg, "beam_pattern");
    spec.grid_step_deg = opt_as<double>(bp, "grid_step_deg", spec.grid_step_deg, "beam_pattern");
    spec.distance_m = opt_as<double>(bp, "distance_m", spec.distance_m, "beam_pattern");
    if (bp.contains("architectures")) {
      spec.architectures.clear();
      for (const auto& a : bp.at("architectures"))
        spec.architectures.push_back(cli_detail::parse_arch(a.get<std::string>()));
    }
    cfg.beam = spec;
  }
  if (root.contains("output")) {
    const json& out = root.at("output");
    cfg.out_dir = opt_as<std::string>(out, "dir", cfg.out_dir, "output");
    cfg.write_realizations =
        opt_as<bool>(out, "write_realizations", cfg.write_realizations, "output");
  }

  if (ov.seed) s.seed = *ov.seed;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;

  cfg.echo = root;
  cfg.echo["scenario"]["seed"] = s.seed;
  cfg.echo["output"]["dir"] = cfg.out_dir;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path, const CliOverrides& ov = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  json root;
  try {
    root = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(root, ov);
}

namespace cli_detail {

inline void apply_sweep_value(Scenario& s, const std::string& param, double v) {
  if (param == "target_se_bps_hz") s.target_se = v;
  else if (param == "n_bs") s.n_bs = static_cast<int>(v);
  else if (param == "n_antennas") s.n_antennas = static_cast<int>(v);
  else if (param == "n_users") s.n_users = static_cast<int>(v);
  else if (param == "n_rf_chains") s.n_rf_chains = static_cast<int>(v);
  else if (param == "blockage_beta_per_m") s.pathloss.blockage_beta = v;
  else
    throw ConfigError("unsupported sweep parameter '" + param +
                      "' (use target_se_bps_hz|n_bs|n_antennas|n_users|n_rf_chains|"
                      "blockage_beta_per_m)");
  s.validate();
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  os << content;
}

} // namespace cli_detail

// Shared run/sweep implementation; a plain run is a one-point sweep.
inline int run_points(const RunConfig& cfg, const std::vector<std::pair<std::string, double>>& points,
                      int workers, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  try {
    fs::create_directories(cfg.out_dir);
    cli_detail::write_text(fs::path(cfg.out_dir) / "config.json", cfg.echo.dump(2) + "\n");

    std::string csv = metrics_csv_header() + "\n";
    json jpoints = json::array();
    for (size_t i = 0; i < points.size(); ++i) {
      Scenario s = cfg.scenario;
      if (!points[i].first.empty())
        cli_detail::apply_sweep_value(s, points[i].first, points[i].second);
      std::vector<RealizationRecord> records;
      const Metrics m = run(s, workers, cfg.write_realizations ? &records : nullptr);
      csv += metrics_csv_row(points[i].first.empty() ? "none" : points[i].first,
                             points[i].second, m) +
             "\n";
      json jp;
      jp["sweep_param"] = points[i].first.empty() ? "none" : points[i].first;
      jp["sweep_value"] = points[i].second;
      jp["metrics"] = m;
      jpoints.push_back(jp);

      const std::string suffix = points.size() > 1 ? "_p" + std::to_string(i) : "";
      std::ofstream cdf_all(fs::path(cfg.out_dir) / ("cdf_rf_all" + suffix + ".csv"));
      write_cdf_csv(m.rf_cdf_all, cdf_all);
      std::ofstream cdf_act(fs::path(cfg.out_dir) / ("cdf_rf_active" + suffix + ".csv"));
      write_cdf_csv(m.rf_cdf_active, cdf_act);
      if (cfg.write_realizations) {
        std::ofstream jl(fs::path(cfg.out_dir) / ("realizations" + suffix + ".jsonl"));
        for (const auto& r : records) jl << realization_to_json(r).dump() << "\n";
      }
      log << "point " << i << " (" << (points[i].first.empty() ? "single" : points[i].first)
          << "=" << points[i].second << "): feasible " << m.n_feasible << "/" << m.realizations
          << ", mean RF " << m.mean_sum_rf_w << " W\n";
    }
    cli_detail::write_text(fs::path(cfg.out_dir) / "metrics.csv", csv);
    json full;
    full["config"] = cfg.echo;
    full["points"] = jpoints;
    cli_detail::write_text(fs::path(cfg.out_dir) / "metrics.json", full.dump(2) + "\n");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int cmd_run(const RunConfig& cfg, int workers, std::ostream& log = std::cout) {
  Scenario s = cfg.scenario;
  s.ofdm.reset(); // `run` is the single-carrier pipeline
  RunConfig c = cfg;
  c.scenario = s;
  return run_points(c, {{"", 0.0}}, workers, log);
}

inline int cmd_sweep(const RunConfig& cfg, int workers, std::ostream& log = std::cout) {
  if (!cfg.sweep) throw ConfigError("missing required field 'sweep' for the sweep command");
  RunConfig c = cfg;
  c.scenario.ofdm.reset();
  std::vector<std::pair<std::string, double>> pts;
  for (double v : cfg.sweep->values) pts.emplace_back(cfg.sweep->parameter, v);
  return run_points(c, pts, workers, log);
}

inline int cmd_ofdm_run(const RunConfig& cfg, int workers, std::ostream& log = std::cout) {
  if (!cfg.scenario.ofdm)
    throw ConfigError("missing required field 'ofdm' for the ofdm-run command");
  return run_points(cfg, {{"", 0.0}}, workers, log);
}

// Beam patterns on a deterministic single-ray layout (one ray per user at a
// configured departure angle, LOS path loss at a fixed distance, no
// shadowing), solved all-active per architecture.
struct BeamPatternData {
  Architecture arch;
  int bs = 0;
  Vec angle_deg;
  Mat user_gain_db;  // grid x K, normalized to the file peak
  Vec composite_db;  // grid max over users, normalized to 0 dB peak
};

inline std::vector<BeamPatternData> compute_beam_patterns(const Scenario& base,
                                                          const BeamPatternSpec& spec) {
  const int k_users = static_cast<int>(spec.aod_deg.size());
  require(k_users >= 1, "beam_pattern: need at least one departure angle");
  Scenario s = base;
  s.n_users = k_users;

  PathLossParams pl = s.pathloss;
  pl.shadow_sigma_los_db = 0.0;
  Rng dummy(1);
  const double rho = db_to_linear(-path_loss_db(spec.distance_m, true, pl, dummy));

  std::vector<BeamPatternData> out;
  const int grid_n = static_cast<int>(std::floor(180.0 / spec.grid_step_deg)) + 1;
  Vec grid_deg(grid_n), grid_rad(grid_n);
  for (int i = 0; i < grid_n; ++i) {
    grid_deg(i) = -90.0 + i * spec.grid_step_deg;
    grid_rad(i) = deg2rad(grid_deg(i));
  }

  for (Architecture arch : spec.architectures) {
    Scenario sa = s;
    sa.arch = arch;
    if (arch == Architecture::kPhp)
      require(sa.n_antennas % sa.n_rf_chains == 0, "beam_pattern: PHP needs integer N/L");
    const int l_eff = sa.effective_rf_chains();
    require(arch == Architecture::kFdp || k_users <= l_eff,
            "beam_pattern: more departure angles than RF chains");
    const auto bs_pos = sa.bs_positions.empty() ? place_bs(sa.n_bs) : sa.bs_positions;
    const int m_bs = static_cast<int>(bs_pos.size());

    std::vector<std::vector<CVec>> h(k_users, std::vector<CVec>(m_bs));
    for (int k = 0; k < k_users; ++k)
      for (int m = 0; m < m_bs; ++m)
        h[k][m] = std::sqrt(rho * sa.n_antennas) *
                  array_response(deg2rad(spec.aod_deg[k]), sa.n_antennas);

    std::vector<AnalogPrecoder> analog;
    for (int m = 0; m < m_bs; ++m) {
      if (arch == Architecture::kFdp) analog.push_back(analog_identity(sa.n_antennas));
      else {
        std::vector<CVec> hk(k_users);
        for (int k = 0; k < k_users; ++k) hk[k] = h[k][m];
        analog.push_back(arch == Architecture::kFhp ? egt_fhp(hk, l_eff)
                                                    : egt_php(hk, sa.n_antennas, l_eff));
      }
    }
    const Vec targets = Vec::Constant(k_users, sa.target_se);
    const Vec noise = Vec::Constant(k_users, dbm_to_watt(sa.noise_dbm));
    const std::vector<HardwareProfile> profiles(m_bs, sa.profile);
    AlgoResult r = solve_all_active(analog, h, targets, noise, profiles, sa.algo);
    if (r.status != SolveStatus::kOptimal)
      throw std::runtime_error(std::string("beam_pattern: all-active solve not optimal (") +
                               to_string(r.status) + ")");
    const auto w = apply_analog(analog, r.precoders);

    for (int m = 0; m < m_bs; ++m) {
      BeamPatternData bp;
      bp.arch = arch;
      bp.bs = m;
      bp.angle_deg = grid_deg;
      bp.user_gain_db.resize(grid_n, k_users);
      Mat lin(grid_n, k_users);
      for (int k = 0; k < k_users; ++k)
        for (int g = 0; g < grid_n; ++g) {
          const CVec a = array_response(grid_rad(g), sa.n_antennas);
          lin(g, k) = std::norm(cplx(a.adjoint() * w[k][m]));
        }
      const double peak = lin.maxCoeff();
      require(peak > 0, "beam_pattern: all precoders are zero at this BS");
      for (int k = 0; k < k_users; ++k)
        for (int g = 0; g < grid_n; ++g)
          bp.user_gain_db(g, k) = 10.0 * std::log10(std::max(lin(g, k), 1e-300) / peak);
      bp.composite_db.resize(grid_n);
      for (int g = 0; g < grid_n; ++g)
        bp.composite_db(g) = 10.0 * std::log10(std::max(lin.row(g).maxCoeff(), 1e-300) / peak);
      out.push_back(std::move(bp));
    }
  }
  return out;
}

inline int cmd_beam_pattern(const RunConfig& cfg, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  const BeamPatternSpec spec = cfg.beam.value_or(BeamPatternSpec{});
  try {
    fs::create_directories(cfg.out_dir);
    cli_detail::write_text(fs::path(cfg.out_dir) / "config.json", cfg.echo.dump(2) + "\n");
    const auto patterns = compute_beam_patterns(cfg.scenario, spec);
    for (const auto& bp : patterns) {
      const std::string name =
          std::string("beam_") + to_string(bp.arch) + "_bs" + std::to_string(bp.bs) + ".csv";
      std::ofstream os(fs::path(cfg.out_dir) / name);
      os << "angle_deg";
      for (int k = 0; k < bp.user_gain_db.cols(); ++k) os << ",user" << k << "_db";
      os << ",composite_db\n";
      char buf[64];
      for (int g = 0; g < bp.angle_deg.size(); ++g) {
        std::snprintf(buf, sizeof buf, "%.6g", bp.angle_deg(g));
        os << buf;
        for (int k = 0; k < bp.user_gain_db.cols(); ++k) {
          std::snprintf(buf, sizeof buf, ",%.6g", bp.user_gain_db(g, k));
          os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.6g\n", bp.composite_db(g));
        os << buf;
      }
      log << "wrote " << name << "\n";
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int cmd_validate(std::ostream& log = std::cout) {
  const auto results = run_validation_suite();
  bool all = true;
  for (const auto& r : results) {
    log << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")\n";
    all = all && r.pass;
  }
  log << (all ? "validation: all checks passed\n" : "validation: FAILURES present\n");
  return all ? 0 : 3;
}

} // namespace hybeam
