#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "argos/core_types.hpp"
#include "argos/radio_sim.hpp"

namespace argos::fixture {

inline std::filesystem::path data_dir() { return ARGOS_DATA_DIR; }

inline CellIdentity nr(std::uint32_t arfcn, std::uint16_t pci) { return {arfcn, pci, Rat::Nr}; }
inline CellIdentity lte(std::uint32_t arfcn, std::uint16_t pci) { return {arfcn, pci, Rat::Eutra}; }

inline CellMeasurement meas(CellIdentity cell, double rsrp, std::int64_t ts, bool rogue = false) {
  CellMeasurement m;
  m.cell = cell;
  m.rsrp = rsrp;
  m.rsrq = -12.0;
  m.sinr = 10.0;
  m.timestamp_ms = ts;
  m.is_rogue = rogue;
  return m;
}

inline MeasurementReport report(std::string ue, std::vector<CellMeasurement> ms) {
  MeasurementReport r;
  r.ue_id = std::move(ue);
  r.serving = ms.front().cell;
  r.neighbors = std::move(ms);
  return r;
}

inline const std::string kUeA = "001010000000001";
inline const std::string kUeB = "001010000000002";
inline const std::string kUeC = "001010000000003";

// Three co-sited-ish cells on a 1 km square with UEs circling inside it.
inline ScenarioConfig small_scenario(std::int64_t duration_s, int ue_count = 1, std::uint64_t seed = 11) {
  ScenarioConfig s;
  s.duration_s = duration_s;
  s.seed = seed;
  s.cells = {{nr(632628, 11), {100, 100}, 18.0},
             {nr(632628, 12), {900, 150}, 18.0},
             {lte(1300, 21), {500, 900}, 20.0}};
  const std::vector<std::string> ids = {kUeA, kUeB, kUeC};
  for (int u = 0; u < ue_count; ++u) {
    UeSpec ue;
    ue.ue_id = ids.at(static_cast<std::size_t>(u));
    const double o = 50.0 * u;
    ue.waypoints = {{250 + o, 250}, {750, 250 + o}, {750 - o, 700}, {250, 700 - o}};
    ue.speed_mps = 10.0 + u;
    s.ues.push_back(ue);
  }
  return s;
}

inline AdversaryConfig a1_near_center(double start_s, double end_s) {
  AdversaryConfig a;
  a.mode = AdversaryMode::A1;
  a.identity = nr(632628, 777);
  a.position = {500, 450};
  a.tx_power_dbm = 15.0;
  a.start_s = start_s;
  a.end_s = end_s;
  return a;
}

}  // namespace argos::fixture
