#pragma once

// File formats: trajectory and tracking CSVs, the zone table file with its
// staleness header, and JSON configuration loading.

#include <iosfwd>
#include <string>
#include <vector>

#include "safemotion/control.hpp"
#include "safemotion/env.hpp"
#include "safemotion/jbtg.hpp"
#include "safemotion/safety.hpp"

namespace safemotion::io {

/// Trajectory CSV: header `t,p,v,a,j`, SI units, 9 significant digits.
void write_trajectory_csv(std::ostream& out,
                          const std::vector<jbtg::ControlPoint>& samples);
std::vector<jbtg::ControlPoint> read_trajectory_csv(std::istream& in);

/// Limit compliance of a sampled series (for externally produced files).
jbtg::ValidationReport validate_samples(
    const std::vector<jbtg::ControlPoint>& samples,
    const jbtg::JointLimits& limits);

/// Zone table file: one JSON header line (limits hash, resolution, version)
/// then `direction,distance_m,v_cap_mps` rows.
void write_zone_table(std::ostream& out, const safety::SafeZoneTable& table);

/// Throws std::runtime_error when the stored hash disagrees with `limits`
/// (stale table).
safety::SafeZoneTable read_zone_table(std::istream& in,
                                      const jbtg::JointLimits& limits);

/// Tracking log CSV: `t,x_r,xr_dot,chi1,chi2,e1,e2,u,phi1,phi2`.
void write_tracking_csv(std::ostream& out, const control::TrackingResult& result);

/// Episode log CSV; one row per agent step carrying the action, the per-joint
/// safe ranges and commanded velocities, tracking deviations, reward, flags,
/// and the flattened state vector.
void write_episode_header(std::ostream& out, const env::EpisodeConfig& cfg);
void write_episode_row(std::ostream& out, const env::EpisodeConfig& cfg,
                       int episode, int step,
                       const std::vector<double>& action,
                       const env::StepResult& result);

/// JSON configs. Fields not present keep their defaults.
jbtg::JointLimits limits_from_json(const std::string& text);
std::string limits_to_json(const jbtg::JointLimits& limits);
env::EpisodeConfig episode_config_from_json(const std::string& text);
std::string episode_config_to_json(const env::EpisodeConfig& cfg);
control::ControllerGains gains_from_json(const std::string& text);

/// Reads a whole file; throws std::runtime_error on failure.
std::string read_file(const std::string& path);

}  // namespace safemotion::io
