#include "argos/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "argos/errors.hpp"
#include "argos/text_util.hpp"

namespace argos {

const std::string* KeyValueSection::find(const std::string& key) const {
  const auto it = values.find(key);
  return it == values.end() ? nullptr : &it->second;
}

const std::string& KeyValueSection::require(const std::string& key) const {
  const auto* value = find(key);
  if (!value) {
    throw ConfigError("line " + std::to_string(line) + ": [" + name + "] block is missing '" + key + "'");
  }
  return *value;
}

double KeyValueSection::require_double(const std::string& key) const {
  const auto value = parse_double(require(key));
  if (!value) throw ConfigError("line " + std::to_string(line) + ": '" + key + "' is not a number");
  return *value;
}

double KeyValueSection::get_double(const std::string& key, double fallback) const {
  return find(key) ? require_double(key) : fallback;
}

std::int64_t KeyValueSection::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* text = find(key);
  if (!text) return fallback;
  const auto value = parse_integer<std::int64_t>(*text);
  if (!value) throw ConfigError("line " + std::to_string(line) + ": '" + key + "' is not an integer");
  return *value;
}

std::vector<KeyValueSection> parse_key_value(std::string_view text) {
  std::vector<KeyValueSection> sections(1);
  sections[0].line = 1;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      KeyValueSection section;
      section.name = to_lower(trim(line.substr(1, line.size() - 2)));
      section.line = line_no;
      sections.push_back(std::move(section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = to_lower(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!sections.back().values.emplace(key, std::string(trim(line.substr(eq + 1)))).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return sections;
}

namespace {

Position parse_position(const KeyValueSection& section, const std::string& key) {
  const auto parts = split(section.require(key), ',');
  const auto x = parts.size() == 2 ? parse_double(parts[0]) : std::nullopt;
  const auto y = parts.size() == 2 ? parse_double(parts[1]) : std::nullopt;
  if (!x || !y) throw ConfigError("line " + std::to_string(section.line) + ": '" + key + "' must be x,y");
  return {*x, *y};
}

CellIdentity parse_identity(const KeyValueSection& section, const std::string& key) {
  const auto id = parse_cell_identity(section.require(key));
  if (!id) throw ConfigError("line " + std::to_string(section.line) + ": '" + key + "' must be RAT:ARFCN:PCI");
  return *id;
}

std::vector<Position> parse_waypoints(const KeyValueSection& section) {
  std::vector<Position> points;
  std::istringstream in(section.require("waypoints"));
  std::string token;
  while (in >> token) {
    const auto parts = split(token, ',');
    const auto x = parts.size() == 2 ? parse_double(parts[0]) : std::nullopt;
    const auto y = parts.size() == 2 ? parse_double(parts[1]) : std::nullopt;
    if (!x || !y) throw ConfigError("line " + std::to_string(section.line) + ": bad waypoint '" + token + "'");
    points.push_back({*x, *y});
  }
  return points;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) {
  const auto sections = parse_key_value(text);
  ScenarioConfig scenario;

  const KeyValueSection& root = sections.front();
  scenario.duration_s = root.get_int("duration_s", scenario.duration_s);
  scenario.ml1_rate_hz = static_cast<int>(root.get_int("ml1_rate_hz", scenario.ml1_rate_hz));
  scenario.event_hysteresis_db = root.get_double("event_hysteresis_db", scenario.event_hysteresis_db);
  scenario.seed = static_cast<std::uint64_t>(root.get_int("seed", static_cast<std::int64_t>(scenario.seed)));
  if (root.find("holdout")) scenario.holdout_cell = parse_identity(root, "holdout");

  for (std::size_t i = 1; i < sections.size(); ++i) {
    const KeyValueSection& s = sections[i];
    if (s.name == "propagation") {
      auto& p = scenario.propagation;
      p.pl0 = s.get_double("pl0", p.pl0);
      p.exponent = s.get_double("exponent", p.exponent);
      p.shadowing_sigma = s.get_double("shadowing_sigma", p.shadowing_sigma);
      p.noise_floor_dbm = s.get_double("noise_floor_dbm", p.noise_floor_dbm);
      p.sample_jitter_sigma = s.get_double("sample_jitter_sigma", p.sample_jitter_sigma);
    } else if (s.name == "cell") {
      scenario.cells.push_back({parse_identity(s, "id"), parse_position(s, "position"), s.require_double("tx_power")});
    } else if (s.name == "ue") {
      scenario.ues.push_back({s.require("id"), parse_waypoints(s), s.get_double("speed", 0.0)});
    } else if (s.name == "adversary") {
      AdversaryConfig a;
      const std::string mode = to_upper(s.require("mode"));
      if (mode == "A1") {
        a.mode = AdversaryMode::A1;
        a.identity = parse_identity(s, "id");
        a.position = parse_position(s, "position");
        a.tx_power_dbm = s.require_double("tx_power");
      } else if (mode == "A2") {
        a.mode = AdversaryMode::A2;
        a.identity = parse_identity(s, "target");
        a.power_offset_db = s.get_double("power_offset_db", a.power_offset_db);
        if (s.find("position")) {
          a.position = parse_position(s, "position");
        } else if (const CellSite* target = scenario.find_cell(a.identity)) {
          // Default: displaced 200 m east of the impersonated site.
          a.position = {target->position.x + 200.0, target->position.y};
        } else {
          throw ConfigError("line " + std::to_string(s.line) + ": A2 target must be declared before the adversary");
        }
      } else {
        throw ConfigError("line " + std::to_string(s.line) + ": adversary mode must be A1 or A2");
      }
      const auto window = split(s.require("active"), ',');
      const auto start = window.size() == 2 ? parse_double(window[0]) : std::nullopt;
      const auto end = window.size() == 2 ? parse_double(window[1]) : std::nullopt;
      if (!start || !end) throw ConfigError("line " + std::to_string(s.line) + ": 'active' must be start_s,end_s");
      a.start_s = *start;
      a.end_s = *end;
      scenario.adversaries.push_back(a);
    } else {
      throw ConfigError("line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }
  scenario.validate();
  return scenario;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text_file(path)); }

}  // namespace argos
