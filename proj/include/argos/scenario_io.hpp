#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "argos/radio_sim.hpp"

namespace argos {

// Key/value text with optional "[section]" blocks; sections may repeat.
// '#' starts a comment. Keys outside any block belong to the root section "".
struct KeyValueSection {
  std::string name;
  std::map<std::string, std::string> values;
  int line = 0;

  const std::string* find(const std::string& key) const;
  const std::string& require(const std::string& key) const;
  double require_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
};

// Throws ConfigError with a line number on malformed input.
std::vector<KeyValueSection> parse_key_value(std::string_view text);

// Scenario grammar:
//   duration_s, ml1_rate_hz, event_hysteresis_db, seed, holdout   (root keys)
//   [propagation] pl0 exponent shadowing_sigma noise_floor_dbm sample_jitter_sigma
//   [cell]        id=RAT:ARFCN:PCI  position=x,y  tx_power
//   [ue]          id  speed  waypoints="x,y x,y ..."
//   [adversary]   mode=A1|A2  id (A1) | target (A2)  position  tx_power
//                 power_offset_db  active=start_s,end_s
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace argos
