// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfjcas/errors.hpp"
#include "cfjcas/rng.hpp"

namespace cfjcas {

double wrap_azimuth(double a) {
  double y = std::remainder(a, 2.0 * M_PI);
  if (y <= -M_PI) y += 2.0 * M_PI;
  return y;
}

namespace {

void validate(const ScenarioConfig& c) {
  if (c.area_side_m <= 0.0) throw InvalidConfigError("area_side_m must be positive");
  if (c.n_tx < 1) throw InvalidConfigError("n_tx must be >= 1");
  if (c.n_rx < 1) throw InvalidConfigError("n_rx must be >= 1");
  if (c.n_ue < 0) throw InvalidConfigError("n_ue must be >= 0");
  if (c.m_antennas < 1) throw InvalidConfigError("m_antennas must be >= 1");
  if (c.p_tx_max_w <= 0.0) throw InvalidConfigError("p_tx_max_w must be positive");
  if (c.heights.ap_m <= 0.0 || c.heights.ue_m <= 0.0 || c.heights.target_m <= 0.0)
    throw InvalidConfigError("heights must be strictly positive");
  const int n_aps = c.n_tx + c.n_rx;
  if (c.ap_layout == ApLayout::explicit_list) {
    if (static_cast<int>(c.ap_xy.size()) != n_aps)
      throw InvalidConfigError("ap layout must list exactly n_tx + n_rx positions");
    for (const auto& p : c.ap_xy)
      if (p.x() < 0.0 || p.x() > c.area_side_m || p.y() < 0.0 || p.y() > c.area_side_m)
        throw InvalidConfigError("explicit AP position outside the area");
  }
  if (!c.ap_rotation_rad.empty() &&
      static_cast<int>(c.ap_rotation_rad.size()) != n_aps)
    throw InvalidConfigError("ap_rotation_rad must be empty or have n_tx + n_rx entries");
}

}  // namespace

Scenario generate_scenario(std::uint64_t seed, const ScenarioConfig& config) {
  validate(config);

  Scenario s;
  s.area_side_m = config.area_side_m;
  s.n_tx = config.n_tx;
  s.n_rx = config.n_rx;
  s.n_ue = config.n_ue;
  s.m_antennas = config.m_antennas;
  s.p_tx_max_w = config.p_tx_max_w;
  s.noise_variance_w = dbm_to_watt(config.noise_dbm);
  s.carrier_hz = config.carrier_hz;
  s.bandwidth_hz = config.bandwidth_hz;

  const int n_aps = config.n_tx + config.n_rx;
  s.ap_positions.reserve(n_aps);
  if (config.ap_layout == ApLayout::explicit_list) {
    for (const auto& p : config.ap_xy)
      s.ap_positions.emplace_back(p.x(), p.y(), config.heights.ap_m);
  } else {
    Rng layout_rng(config.layout_seed);
    for (int k = 0; k < n_aps; ++k) {
      Rng r = layout_rng.fork(k);
      s.ap_positions.emplace_back(r.uniform(0.0, config.area_side_m),
                                  r.uniform(0.0, config.area_side_m),
                                  config.heights.ap_m);
    }
  }

  s.target_position = Vec3(0.5 * config.area_side_m, 0.5 * config.area_side_m,
                           config.heights.target_m);

  // Per-UE substream: UE i's position is independent of how many UEs exist,
  // so nested UE counts share locations across sweep cells.
  Rng ue_rng(seed);
  s.ue_positions.reserve(config.n_ue);
  for (int i = 0; i < config.n_ue; ++i) {
    Rng r = ue_rng.fork(i);
    s.ue_positions.emplace_back(r.uniform(0.0, config.area_side_m),
                                r.uniform(0.0, config.area_side_m),
                                config.heights.ue_m);
  }

  s.ap_rotation_rad = config.ap_rotation_rad;
  if (s.ap_rotation_rad.empty()) s.ap_rotation_rad.assign(n_aps, 0.0);

  ApPartition part = select_receivers(s);
  s.tx_aps = std::move(part.transmitters);
  s.rx_aps = std::move(part.receivers);
  return s;
}

ApPartition select_receivers(const Scenario& scenario) {
  const int n_aps = static_cast<int>(scenario.ap_positions.size());
  if (scenario.n_rx > n_aps)
    throw InvalidConfigError("n_rx exceeds the number of APs");

  std::vector<int> order(n_aps);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(n_aps);
  for (int k = 0; k < n_aps; ++k)
    dist[k] = (scenario.ap_positions[k] - scenario.target_position).norm();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });

  ApPartition part;
  part.receivers.assign(order.begin(), order.begin() + scenario.n_rx);
  part.transmitters.assign(order.begin() + scenario.n_rx, order.end());
  std::sort(part.receivers.begin(), part.receivers.end());
  std::sort(part.transmitters.begin(), part.transmitters.end());
  return part;
}

namespace {

// Azimuth/elevation of `to` as seen from `from`, minus the array rotation.
std::pair<double, double> bearing(const Vec3& from, const Vec3& to,
                                  double rotation) {
  const double dx = to.x() - from.x();
  const double dy = to.y() - from.y();
  const double dz = to.z() - from.z();
  const double dh = std::hypot(dx, dy);
  if (dh == 0.0 && dz == 0.0)
    throw SingularGeometryError("AP colocated with the target");
  const double az = (dh == 0.0) ? 0.0 : wrap_azimuth(std::atan2(dy, dx) - rotation);
  const double el = std::atan2(dz, dh);
  return {az, el};
}

}  // namespace

AngleSet compute_angles(const Scenario& scenario) {
  AngleSet angles;
  angles.tx_azimuth.reserve(scenario.tx_aps.size());
  angles.tx_elevation.reserve(scenario.tx_aps.size());
  for (int k : scenario.tx_aps) {
    auto [az, el] = bearing(scenario.ap_positions[k], scenario.target_position,
                            scenario.ap_rotation_rad[k]);
    angles.tx_azimuth.push_back(az);
    angles.tx_elevation.push_back(el);
  }
  for (int r : scenario.rx_aps) {
    auto [az, el] = bearing(scenario.target_position, scenario.ap_positions[r],
                            scenario.ap_rotation_rad[r]);
    angles.rx_azimuth.push_back(az);
    angles.rx_elevation.push_back(el);
  }
  return angles;
}

}  // namespace cfjcas
