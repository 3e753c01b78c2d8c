// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cfjcas/errors.hpp"

namespace cfjcas {

namespace {

using nlohmann::json;

double as_double(const json& v, const std::string& key) {
  if (!v.is_number())
    throw InvalidConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw InvalidConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

std::uint64_t as_seed(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw InvalidConfigError("config key '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string())
    throw InvalidConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_double_list(const json& v, const std::string& key) {
  if (!v.is_array())
    throw InvalidConfigError("config key '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_double(e, key));
  return out;
}

void parse_heights(const json& v, Heights& h) {
  if (!v.is_object()) throw InvalidConfigError("config key 'heights' must be an object");
  for (const auto& [key, value] : v.items()) {
    if (key == "ap_m") h.ap_m = as_double(value, "heights.ap_m");
    else if (key == "ue_m") h.ue_m = as_double(value, "heights.ue_m");
    else if (key == "target_m") h.target_m = as_double(value, "heights.target_m");
    else throw InvalidConfigError("unknown config key: heights." + key);
  }
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object())
    throw InvalidConfigError(source + ": top-level config must be an object");
  RunConfig cfg;
  bool seed_seen = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "area_side_m") cfg.scenario.area_side_m = as_double(value, key);
    else if (key == "n_tx") cfg.scenario.n_tx = as_int(value, key);
    else if (key == "n_rx") cfg.scenario.n_rx = as_int(value, key);
    else if (key == "n_ue") cfg.scenario.n_ue = as_int(value, key);
    else if (key == "m_antennas") cfg.scenario.m_antennas = as_int(value, key);
    else if (key == "p_tx_max_w") cfg.scenario.p_tx_max_w = as_double(value, key);
    else if (key == "noise_dbm") cfg.scenario.noise_dbm = as_double(value, key);
    else if (key == "carrier_hz") cfg.scenario.carrier_hz = as_double(value, key);
    else if (key == "bandwidth_hz") cfg.scenario.bandwidth_hz = as_double(value, key);
    else if (key == "heights") parse_heights(value, cfg.scenario.heights);
    else if (key == "ap_layout") {
      const std::string s = as_string(value, key);
      if (s == "seeded") cfg.scenario.ap_layout = ApLayout::seeded;
      else if (s == "explicit") cfg.scenario.ap_layout = ApLayout::explicit_list;
      else throw InvalidConfigError("config key 'ap_layout' must be seeded|explicit");
    } else if (key == "ap_positions") {
      if (!value.is_array())
        throw InvalidConfigError("config key 'ap_positions' must be an array of [x, y]");
      for (const auto& p : value) {
        if (!p.is_array() || p.size() != 2)
          throw InvalidConfigError("config key 'ap_positions' entries must be [x, y]");
        cfg.scenario.ap_xy.emplace_back(as_double(p[0], key), as_double(p[1], key));
      }
    } else if (key == "ap_rotation_rad") {
      cfg.scenario.ap_rotation_rad = as_double_list(value, key);
    } else if (key == "seed") {
      cfg.seed = as_seed(value, key);
      seed_seen = true;
    } else if (key == "out_dir") cfg.out_dir = as_string(value, key);
    else if (key == "methods") {
      if (!value.is_array())
        throw InvalidConfigError("config key 'methods' must be an array");
      cfg.plan.methods.clear();
      for (const auto& m : value) {
        const auto parsed = method_from_name(as_string(m, key));
        if (!parsed)
          throw InvalidConfigError("unknown method '" + as_string(m, key) +
                                   "' in config key 'methods'");
        cfg.plan.methods.push_back(*parsed);
      }
    } else if (key == "n_setups") cfg.plan.n_setups = as_int(value, key);
    else if (key == "n_rcs_draws") cfg.plan.n_rcs_draws = as_int(value, key);
    else if (key == "n_noise_draws") cfg.plan.n_noise_draws = as_int(value, key);
    else if (key == "tau") cfg.plan.tau = as_int(value, key);
    else if (key == "gamma_c_db") cfg.plan.gamma_c_db = as_double(value, key);
    else if (key == "p_fa") cfg.plan.p_fa = as_double(value, key);
    else if (key == "calibration_multiple")
      cfg.plan.calibration_multiple = as_int(value, key);
    else if (key == "rcs_db") cfg.plan.rcs_db = as_double(value, key);
    else if (key == "rcs_mode") {
      const std::string s = as_string(value, key);
      if (s == "combined") cfg.plan.rcs_mode = RcsMode::combined;
      else if (s == "raw") cfg.plan.rcs_mode = RcsMode::raw;
      else throw InvalidConfigError("config key 'rcs_mode' must be combined|raw");
    } else if (key == "symbol_alphabet") {
      const std::string s = as_string(value, key);
      if (s == "gaussian") cfg.plan.alphabet = SymbolAlphabet::gaussian;
      else if (s == "qpsk") cfg.plan.alphabet = SymbolAlphabet::qpsk;
      else throw InvalidConfigError("config key 'symbol_alphabet' must be gaussian|qpsk");
    } else if (key == "shadowing_std_db")
      cfg.plan.shadowing_std_db = as_double(value, key);
    else if (key == "rzf_lambda") {
      if (value.is_null()) cfg.plan.rzf_lambda.reset();
      else cfg.plan.rzf_lambda = as_double(value, key);
    } else if (key == "rcs_db_grid") cfg.plan.rcs_db_grid = as_double_list(value, key);
    else if (key == "p_total_dbm_grid")
      cfg.plan.p_total_dbm_grid = as_double_list(value, key);
    else if (key == "n_ue_grid") {
      cfg.plan.n_ue_grid.clear();
      for (double v : as_double_list(value, key)) {
        if (v != std::floor(v))
          throw InvalidConfigError("config key 'n_ue_grid' must hold integers");
        cfg.plan.n_ue_grid.push_back(static_cast<int>(v));
      }
    } else {
      throw InvalidConfigError(source + ": unknown config key: " + key);
    }
  }
  if (seed_seen) cfg.scenario.layout_seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidConfigError(path + ": " + e.what());
  }
  return parse_config(j, path);
}

void validate_config(const RunConfig& config) {
  const ScenarioConfig& s = config.scenario;
  const ExperimentPlan& p = config.plan;
  if (s.area_side_m <= 0) throw InvalidConfigError("area_side_m must be positive");
  if (s.n_tx < 1) throw InvalidConfigError("n_tx must be >= 1");
  if (s.n_rx < 1) throw InvalidConfigError("n_rx must be >= 1");
  if (s.n_rx > s.n_tx + s.n_rx)
    throw InvalidConfigError("n_rx exceeds the number of APs");
  if (s.n_ue < 0) throw InvalidConfigError("n_ue must be >= 0");
  if (s.m_antennas < 1) throw InvalidConfigError("m_antennas must be >= 1");
  if (s.p_tx_max_w <= 0) throw InvalidConfigError("p_tx_max_w must be positive");
  if (s.carrier_hz <= 0) throw InvalidConfigError("carrier_hz must be positive");
  if (s.heights.ap_m <= 0 || s.heights.ue_m <= 0 || s.heights.target_m <= 0)
    throw InvalidConfigError("heights must be strictly positive");
  if (s.ap_layout == ApLayout::explicit_list &&
      static_cast<int>(s.ap_xy.size()) != s.n_tx + s.n_rx)
    throw InvalidConfigError("ap_positions must list exactly n_tx + n_rx entries");
  if (p.tau < 1) throw InvalidConfigError("tau must be >= 1");
  if (!(p.p_fa > 0.0 && p.p_fa < 1.0))
    throw InvalidConfigError("p_fa must be in (0, 1)");
  if (p.calibration_multiple < 20)
    throw InvalidConfigError("calibration_multiple must be >= 20");
  if (p.n_setups < 1) throw InvalidConfigError("n_setups must be >= 1");
  if (p.n_rcs_draws < 1) throw InvalidConfigError("n_rcs_draws must be >= 1");
  if (p.n_noise_draws < 1) throw InvalidConfigError("n_noise_draws must be >= 1");
  if (p.methods.empty()) throw InvalidConfigError("methods must not be empty");
  int max_ue = s.n_ue;
  for (int n : p.n_ue_grid) {
    if (n < 0) throw InvalidConfigError("n_ue_grid entries must be >= 0");
    max_ue = std::max(max_ue, n);
  }
  if (s.n_tx * s.m_antennas <= max_ue)
    throw InvalidConfigError(
        "n_ue too large: the sensing beam needs n_tx * m_antennas > n_ue");
  if (p.rzf_lambda && *p.rzf_lambda <= 0)
    throw InvalidConfigError("rzf_lambda must be positive");
}

nlohmann::json config_to_json(const RunConfig& config) {
  const ScenarioConfig& s = config.scenario;
  const ExperimentPlan& p = config.plan;
  json j;
  j["area_side_m"] = s.area_side_m;
  j["n_tx"] = s.n_tx;
  j["n_rx"] = s.n_rx;
  j["n_ue"] = s.n_ue;
  j["m_antennas"] = s.m_antennas;
  j["p_tx_max_w"] = s.p_tx_max_w;
  j["noise_dbm"] = s.noise_dbm;
  j["carrier_hz"] = s.carrier_hz;
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["heights"] = {{"ap_m", s.heights.ap_m},
                  {"ue_m", s.heights.ue_m},
                  {"target_m", s.heights.target_m}};
  j["ap_layout"] = s.ap_layout == ApLayout::seeded ? "seeded" : "explicit";
  if (!s.ap_xy.empty()) {
    json arr = json::array();
    for (const auto& xy : s.ap_xy) arr.push_back({xy.x(), xy.y()});
    j["ap_positions"] = arr;
  }
  if (!s.ap_rotation_rad.empty()) j["ap_rotation_rad"] = s.ap_rotation_rad;
  j["seed"] = config.seed;
  j["out_dir"] = config.out_dir;
  json methods = json::array();
  for (Method m : p.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["n_setups"] = p.n_setups;
  j["n_rcs_draws"] = p.n_rcs_draws;
  j["n_noise_draws"] = p.n_noise_draws;
  j["tau"] = p.tau;
  j["gamma_c_db"] = p.gamma_c_db;
  j["p_fa"] = p.p_fa;
  j["calibration_multiple"] = p.calibration_multiple;
  j["rcs_db"] = p.rcs_db;
  j["rcs_mode"] = p.rcs_mode == RcsMode::combined ? "combined" : "raw";
  j["symbol_alphabet"] =
      p.alphabet == SymbolAlphabet::gaussian ? "gaussian" : "qpsk";
  j["shadowing_std_db"] = p.shadowing_std_db;
  if (p.rzf_lambda) j["rzf_lambda"] = *p.rzf_lambda;
  else j["rzf_lambda"] = nullptr;
  j["rcs_db_grid"] = p.rcs_db_grid;
  j["p_total_dbm_grid"] = p.p_total_dbm_grid;
  j["n_ue_grid"] = p.n_ue_grid;
  return j;
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream ss(text);
  // Negative numbers are common here, so split on ':' only.
  while (std::getline(ss, token, ':')) parts.push_back(token);
  const auto to_double = [&](const std::string& t) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      throw InvalidConfigError("invalid range component '" + t + "' in '" + text + "'");
    }
    if (pos != t.size())
      throw InvalidConfigError("invalid range component '" + t + "' in '" + text + "'");
    return v;
  };
  if (parts.size() == 1) return {to_double(parts[0])};
  if (parts.size() != 3)
    throw InvalidConfigError("range must be a value or start:stop:count: " + text);
  const double start = to_double(parts[0]);
  const double stop = to_double(parts[1]);
  const double count_d = to_double(parts[2]);
  if (count_d < 1 || count_d != std::floor(count_d))
    throw InvalidConfigError("range count must be a positive integer: " + text);
  const int count = static_cast<int>(count_d);
  std::vector<double> values;
  values.reserve(count);
  for (int i = 0; i < count; ++i)
    values.push_back(count == 1 ? start
                                : start + (stop - start) * i / (count - 1));
  return values;
}

}  // namespace cfjcas
