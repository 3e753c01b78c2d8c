// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "cfjcas/types.hpp"

namespace cfjcas {

enum class ApLayout { seeded, explicit_list };

struct Heights {
  double ap_m = 10.0;
  double ue_m = 1.5;
  double target_m = 1.5;
};

/// Template for generate_scenario(). The AP layout is controlled separately
/// from the per-setup seed so that one fixed layout can be reused across all
/// Monte Carlo setups while UE positions are redrawn.
struct ScenarioConfig {
  double area_side_m = 500.0;
  int n_tx = 16;
  int n_rx = 2;
  int n_ue = 8;
  int m_antennas = 4;
  double p_tx_max_w = 1.0;
  double noise_dbm = -94.0;
  double carrier_hz = 1.9e9;
  double bandwidth_hz = 20e6;
  Heights heights;
  ApLayout ap_layout = ApLayout::seeded;
  std::uint64_t layout_seed = 1;                 // used when ap_layout == seeded
  std::vector<Eigen::Vector2d> ap_xy;            // used when ap_layout == explicit_list
  std::vector<double> ap_rotation_rad;           // ULA broadside per AP; empty = all 0
};

struct Scenario {
  double area_side_m = 0.0;
  int n_tx = 0;
  int n_rx = 0;
  int n_ue = 0;
  int m_antennas = 0;
  std::vector<Vec3> ap_positions;   // n_tx + n_rx entries
  std::vector<Vec3> ue_positions;   // n_ue entries
  Vec3 target_position = Vec3::Zero();
  double p_tx_max_w = 0.0;
  double noise_variance_w = 0.0;
  double carrier_hz = 0.0;
  double bandwidth_hz = 0.0;
  std::vector<double> ap_rotation_rad;
  // Receiver selection (filled by generate_scenario via select_receivers).
  std::vector<int> tx_aps;          // indices into ap_positions, ascending
  std::vector<int> rx_aps;
};

struct ApPartition {
  std::vector<int> transmitters;
  std::vector<int> receivers;
};

/// Azimuth/elevation pairs, in the frame of each AP's array (broadside
/// rotation already subtracted). tx_* lists follow scenario.tx_aps order and
/// point AP -> target; rx_* follow scenario.rx_aps and point target -> AP.
struct AngleSet {
  std::vector<double> tx_azimuth;
  std::vector<double> tx_elevation;
  std::vector<double> rx_azimuth;
  std::vector<double> rx_elevation;
};

/// Wraps an angle to (-pi, pi].
double wrap_azimuth(double a);

/// Draws UE positions uniformly over the area (per-UE substream, so UE i's
/// position does not depend on n_ue), places the target at the area center,
/// and lays out APs either from config.layout_seed or the explicit list.
Scenario generate_scenario(std::uint64_t seed, const ScenarioConfig& config);

/// The n_rx APs nearest the target (3D distance) become receivers; ties break
/// toward the lower AP index.
ApPartition select_receivers(const Scenario& scenario);

AngleSet compute_angles(const Scenario& scenario);

}  // namespace cfjcas
