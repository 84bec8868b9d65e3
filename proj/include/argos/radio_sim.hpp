#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "argos/core_types.hpp"

namespace argos {

struct Position {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Position&) const = default;
};

double distance(Position a, Position b);

struct CellSite {
  CellIdentity id;
  Position position;
  double tx_power_dbm = 15.0;
};

// Waypoints form a closed loop: after the last one the UE heads back to the first.
struct UeSpec {
  std::string ue_id;
  std::vector<Position> waypoints;
  double speed_mps = 0.0;
};

Position position_at(const UeSpec& ue, double t_s);

struct PropagationParams {
  double pl0 = 40.0;  // dB at 1 m
  double exponent = 3.5;
  double shadowing_sigma = 4.0;  // dB, drawn per (ue, cell, second)
  double noise_floor_dbm = -125.0;
  double sample_jitter_sigma = 1.0;  // dB, drawn per (ue, cell, sample)

  void validate() const;
};

enum class AdversaryMode { A1, A2 };

std::string_view to_string(AdversaryMode mode);

struct AdversaryConfig {
  AdversaryMode mode = AdversaryMode::A1;
  Position position;
  double tx_power_dbm = 15.0;    // A1 transmit power
  double power_offset_db = 6.0;  // A2: relative to the impersonated cell
  CellIdentity identity;         // A1: fresh identity; A2: impersonated cell
  double start_s = 0.0;
  double end_s = 0.0;

  bool active_at(std::int64_t timestamp_ms) const {
    return static_cast<double>(timestamp_ms) >= start_s * 1000.0 &&
           static_cast<double>(timestamp_ms) < end_s * 1000.0;
  }
};

struct ScenarioConfig {
  std::vector<CellSite> cells;
  std::vector<UeSpec> ues;
  std::int64_t duration_s = 1;
  int ml1_rate_hz = 5;
  double event_hysteresis_db = 3.0;
  std::uint64_t seed = 1;
  PropagationParams propagation;
  std::vector<AdversaryConfig> adversaries;
  std::optional<CellIdentity> holdout_cell;

  // Throws ConfigError.
  void validate() const;
  const CellSite* find_cell(const CellIdentity& id) const;
  const AdversaryConfig* find_adversary(AdversaryMode mode) const;
};

// Throws ConfigError if the adversary is inconsistent with the legitimate cells.
void validate_adversary(const AdversaryConfig& adversary, const ScenarioConfig& scenario);

// Log-distance model; distances below 1 m are clamped to the reference distance.
double path_loss(double distance_m, const PropagationParams& params, double shadow_draw);

inline constexpr double kDetectionThresholdDbm = -140.0;
inline constexpr int kResourceBlocks = 52;

struct RadioSource {
  CellIdentity id;
  Position position;
  double tx_power_dbm = 0.0;
  bool is_rogue = false;
};

// Measures every source at or above the detection threshold. shadow_db holds
// one draw per source. Interference counts all co-channel sources (same RAT
// and ARFCN), detectable or not.
std::vector<CellMeasurement> measure_cells(Position ue, std::span<const RadioSource> sources,
                                           const PropagationParams& params,
                                           std::span<const double> shadow_db, std::int64_t timestamp_ms);

// Reports ordered by (timestamp, UE order, ML1 before EVENT). Within a report
// the serving cell's measurement comes first.
std::vector<MeasurementReport> generate_stream(const ScenarioConfig& scenario,
                                               const PropagationParams& propagation,
                                               const AdversaryConfig* adversary = nullptr);

struct StreamSplit {
  std::vector<MeasurementReport> train;
  std::vector<MeasurementReport> infer;
  std::int64_t boundary_second = 0;
};

// Chronological split at floor(total_seconds * fraction). Reports straddling
// the boundary are divided by measurement timestamp.
StreamSplit time_split(std::span<const MeasurementReport> stream, double fraction = 0.8);

// Time split, then every measurement of holdout_cell is removed from the
// training part. Throws DataError if the cell never appears.
StreamSplit holdout_split(std::span<const MeasurementReport> stream, const CellIdentity& holdout_cell,
                          double fraction = 0.8);

// Drops measurements flagged is_rogue and any report left empty.
std::vector<MeasurementReport> strip_rogue(std::span<const MeasurementReport> stream);

}  // namespace argos
