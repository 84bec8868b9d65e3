#include "argos/radio_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "argos/errors.hpp"
#include "argos/random.hpp"

namespace argos {

namespace {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

bool co_channel(const CellIdentity& a, const CellIdentity& b) { return a.rat == b.rat && a.arfcn == b.arfcn; }

}  // namespace

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

Position position_at(const UeSpec& ue, double t_s) {
  const auto& wp = ue.waypoints;
  if (wp.empty()) return {};
  if (wp.size() == 1 || ue.speed_mps <= 0.0) return wp.front();

  double loop_length = 0.0;
  for (std::size_t i = 0; i < wp.size(); ++i) loop_length += distance(wp[i], wp[(i + 1) % wp.size()]);
  if (loop_length <= 0.0) return wp.front();

  double travelled = std::fmod(ue.speed_mps * t_s, loop_length);
  for (std::size_t i = 0; i < wp.size(); ++i) {
    const Position from = wp[i];
    const Position to = wp[(i + 1) % wp.size()];
    const double segment = distance(from, to);
    if (travelled <= segment && segment > 0.0) {
      const double f = travelled / segment;
      return {from.x + f * (to.x - from.x), from.y + f * (to.y - from.y)};
    }
    travelled -= segment;
  }
  return wp.front();
}

void PropagationParams::validate() const {
  if (!(exponent >= 1.5 && exponent <= 6.0)) throw ConfigError("propagation: exponent must lie in [1.5, 6]");
  if (!(shadowing_sigma >= 0.0)) throw ConfigError("propagation: shadowing_sigma must be >= 0");
  if (!(sample_jitter_sigma >= 0.0)) throw ConfigError("propagation: sample_jitter_sigma must be >= 0");
  if (!std::isfinite(pl0) || !std::isfinite(noise_floor_dbm)) throw ConfigError("propagation: non-finite value");
}

std::string_view to_string(AdversaryMode mode) { return mode == AdversaryMode::A1 ? "A1" : "A2"; }

void ScenarioConfig::validate() const {
  if (duration_s < 1) throw ConfigError("scenario: duration_s must be >= 1");
  if (ml1_rate_hz < 1 || ml1_rate_hz > 1000) throw ConfigError("scenario: ml1_rate_hz must lie in [1, 1000]");
  if (!(event_hysteresis_db >= 0.0)) throw ConfigError("scenario: event_hysteresis_db must be >= 0");
  if (cells.empty()) throw ConfigError("scenario: no cells configured");
  if (ues.empty()) throw ConfigError("scenario: no UEs configured");
  propagation.validate();

  std::set<CellIdentity> seen;
  for (const auto& cell : cells) {
    if (!cell.id.valid()) throw ConfigError("scenario: invalid cell " + cell.id.to_string());
    if (!seen.insert(cell.id).second) throw ConfigError("scenario: duplicate cell " + cell.id.to_string());
  }
  std::set<std::string> ue_ids;
  for (const auto& ue : ues) {
    if (ue.ue_id.empty() || ue.ue_id.size() > 255) throw ConfigError("scenario: UE id must be 1..255 chars");
    if (!ue_ids.insert(ue.ue_id).second) throw ConfigError("scenario: duplicate UE " + ue.ue_id);
    if (ue.waypoints.empty()) throw ConfigError("scenario: UE " + ue.ue_id + " has no waypoints");
    if (!(ue.speed_mps >= 0.0)) throw ConfigError("scenario: UE " + ue.ue_id + " has negative speed");
  }
  for (const auto& adversary : adversaries) validate_adversary(adversary, *this);
  if (holdout_cell && !find_cell(*holdout_cell)) {
    throw ConfigError("scenario: holdout cell " + holdout_cell->to_string() + " is not configured");
  }
}

const CellSite* ScenarioConfig::find_cell(const CellIdentity& id) const {
  const auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSite& c) { return c.id == id; });
  return it == cells.end() ? nullptr : &*it;
}

const AdversaryConfig* ScenarioConfig::find_adversary(AdversaryMode mode) const {
  const auto it =
      std::find_if(adversaries.begin(), adversaries.end(), [&](const AdversaryConfig& a) { return a.mode == mode; });
  return it == adversaries.end() ? nullptr : &*it;
}

void validate_adversary(const AdversaryConfig& adversary, const ScenarioConfig& scenario) {
  if (!adversary.identity.valid()) throw ConfigError("adversary: invalid identity " + adversary.identity.to_string());
  if (!(adversary.end_s >= adversary.start_s)) throw ConfigError("adversary: active window ends before it starts");
  const bool collides = scenario.find_cell(adversary.identity) != nullptr;
  if (adversary.mode == AdversaryMode::A2 && !collides) {
    throw ConfigError("adversary: A2 target " + adversary.identity.to_string() + " not found among legitimate cells");
  }
  if (adversary.mode == AdversaryMode::A1 && collides) {
    throw ConfigError("adversary: A1 identity " + adversary.identity.to_string() + " collides with a legitimate cell");
  }
}

double path_loss(double distance_m, const PropagationParams& params, double shadow_draw) {
  const double d = std::max(distance_m, 1.0);
  return params.pl0 + 10.0 * params.exponent * std::log10(d / 1.0) + shadow_draw;
}

std::vector<CellMeasurement> measure_cells(Position ue, std::span<const RadioSource> sources,
                                           const PropagationParams& params,
                                           std::span<const double> shadow_db, std::int64_t timestamp_ms) {
  const std::size_t n = sources.size();
  std::vector<double> rsrp(n);
  std::vector<double> linear(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double shadow = i < shadow_db.size() ? shadow_db[i] : 0.0;
    rsrp[i] = sources[i].tx_power_dbm - path_loss(distance(ue, sources[i].position), params, shadow);
    linear[i] = dbm_to_mw(rsrp[i]);
  }
  const double noise = dbm_to_mw(params.noise_floor_dbm);

  std::vector<CellMeasurement> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (rsrp[i] < kDetectionThresholdDbm) continue;
    double interference = 0.0;
    double rssi = noise;
    for (std::size_t j = 0; j < n; ++j) {
      if (!co_channel(sources[i].id, sources[j].id)) continue;
      rssi += linear[j];
      if (j != i) interference += linear[j];
    }
    CellMeasurement m;
    m.cell = sources[i].id;
    m.rsrp = rsrp[i];
    m.sinr = rsrp[i] - mw_to_dbm(interference + noise);
    m.rsrq = 10.0 * std::log10(kResourceBlocks * linear[i] / rssi);
    m.timestamp_ms = timestamp_ms;
    m.is_rogue = sources[i].is_rogue;
    clamp_to_reportable(m);
    out.push_back(m);
  }
  return out;
}

std::vector<MeasurementReport> generate_stream(const ScenarioConfig& scenario,
                                               const PropagationParams& propagation,
                                               const AdversaryConfig* adversary) {
  scenario.validate();
  propagation.validate();

  std::vector<RadioSource> sources;
  for (const auto& cell : scenario.cells) sources.push_back({cell.id, cell.position, cell.tx_power_dbm, false});
  if (adversary) {
    validate_adversary(*adversary, scenario);
    RadioSource rogue{adversary->identity, adversary->position, adversary->tx_power_dbm, true};
    if (adversary->mode == AdversaryMode::A2) {
      rogue.tx_power_dbm = scenario.find_cell(adversary->identity)->tx_power_dbm + adversary->power_offset_db;
    }
    sources.push_back(rogue);
  }
  const std::size_t legit_count = scenario.cells.size();

  const std::int64_t ticks = scenario.duration_s * scenario.ml1_rate_hz;
  std::vector<std::optional<CellIdentity>> serving(scenario.ues.size());
  std::vector<MeasurementReport> stream;
  stream.reserve(static_cast<std::size_t>(ticks) * scenario.ues.size());

  std::vector<RadioSource> active;
  std::vector<double> shadow;
  for (std::int64_t tick = 0; tick < ticks; ++tick) {
    const std::int64_t t_ms = tick * 1000 / scenario.ml1_rate_hz;
    const std::int64_t second = t_ms / 1000;

    active.assign(sources.begin(), sources.begin() + static_cast<std::ptrdiff_t>(legit_count));
    if (adversary && adversary->active_at(t_ms)) active.push_back(sources.back());

    for (std::size_t u = 0; u < scenario.ues.size(); ++u) {
      const UeSpec& ue = scenario.ues[u];
      shadow.resize(active.size());
      for (std::size_t c = 0; c < active.size(); ++c) {
        const std::uint64_t source_key = c < legit_count ? c : (1ULL << 40);
        const double slow = keyed_normal(mix_keys(scenario.seed, u, source_key, static_cast<std::uint64_t>(second), 1));
        const double fast = keyed_normal(mix_keys(scenario.seed, u, source_key, static_cast<std::uint64_t>(tick), 2));
        shadow[c] = propagation.shadowing_sigma * slow + propagation.sample_jitter_sigma * fast;
      }

      auto measured = measure_cells(position_at(ue, static_cast<double>(t_ms) / 1000.0), active, propagation,
                                    shadow, t_ms);
      if (measured.empty()) {
        serving[u].reset();
        continue;
      }

      auto strongest = std::max_element(measured.begin(), measured.end(),
                                        [](const auto& a, const auto& b) { return a.rsrp < b.rsrp; });
      auto current = serving[u] ? std::find_if(measured.begin(), measured.end(),
                                               [&](const CellMeasurement& m) { return m.cell == *serving[u]; })
                                : measured.end();
      if (current == measured.end()) current = strongest;

      // Serving measurement first, the rest in source order.
      std::rotate(measured.begin(), current, current + 1);
      const CellIdentity serving_id = measured.front().cell;
      const double serving_rsrp = measured.front().rsrp;

      MeasurementReport report;
      report.ue_id = ue.ue_id;
      report.concealed = !is_supi(ue.ue_id);
      report.serving = serving_id;
      report.neighbors = measured;
      report.source = ReportSource::Ml1;
      stream.push_back(report);

      const CellMeasurement* trigger = nullptr;
      for (const auto& m : measured) {
        if (m.cell == serving_id) continue;
        if (m.rsrp > serving_rsrp + scenario.event_hysteresis_db && (!trigger || m.rsrp > trigger->rsrp)) {
          trigger = &m;
        }
      }
      if (trigger) {
        const CellIdentity next = trigger->cell;
        report.source = ReportSource::Event;
        stream.push_back(std::move(report));
        serving[u] = next;
      } else {
        serving[u] = serving_id;
      }
    }
  }
  return stream;
}

namespace {

std::int64_t total_seconds(std::span<const MeasurementReport> stream) {
  std::int64_t last = -1;
  for (const auto& report : stream) {
    for (const auto& m : report.neighbors) last = std::max(last, m.second());
  }
  return last + 1;
}

template <typename Keep>
void append_filtered(std::vector<MeasurementReport>& out, const MeasurementReport& report, Keep keep) {
  MeasurementReport part = report;
  part.neighbors.clear();
  for (const auto& m : report.neighbors) {
    if (keep(m)) part.neighbors.push_back(m);
  }
  if (!part.neighbors.empty()) out.push_back(std::move(part));
}

}  // namespace

StreamSplit time_split(std::span<const MeasurementReport> stream, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  StreamSplit split;
  split.boundary_second = static_cast<std::int64_t>(std::floor(static_cast<double>(total_seconds(stream)) * fraction));
  const std::int64_t boundary_ms = split.boundary_second * 1000;
  for (const auto& report : stream) {
    append_filtered(split.train, report, [&](const CellMeasurement& m) { return m.timestamp_ms < boundary_ms; });
    append_filtered(split.infer, report, [&](const CellMeasurement& m) { return m.timestamp_ms >= boundary_ms; });
  }
  return split;
}

StreamSplit holdout_split(std::span<const MeasurementReport> stream, const CellIdentity& holdout_cell,
                          double fraction) {
  const bool present = std::any_of(stream.begin(), stream.end(), [&](const MeasurementReport& r) {
    return std::any_of(r.neighbors.begin(), r.neighbors.end(),
                       [&](const CellMeasurement& m) { return m.cell == holdout_cell; });
  });
  if (!present) throw DataError("holdout cell " + holdout_cell.to_string() + " does not appear in the stream");

  StreamSplit split = time_split(stream, fraction);
  std::vector<MeasurementReport> train;
  train.reserve(split.train.size());
  for (const auto& report : split.train) {
    append_filtered(train, report, [&](const CellMeasurement& m) { return !(m.cell == holdout_cell); });
  }
  split.train = std::move(train);
  return split;
}

std::vector<MeasurementReport> strip_rogue(std::span<const MeasurementReport> stream) {
  std::vector<MeasurementReport> out;
  out.reserve(stream.size());
  for (const auto& report : stream) append_filtered(out, report, [](const CellMeasurement& m) { return !m.is_rogue; });
  return out;
}

}  // namespace argos
