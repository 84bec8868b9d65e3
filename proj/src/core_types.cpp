#include "argos/core_types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "argos/errors.hpp"
#include "argos/text_util.hpp"

namespace argos {

std::string_view to_string(Rat rat) {
  switch (rat) {
    case Rat::Nr:
      return "NR";
    case Rat::Eutra:
      return "EUTRA";
  }
  return "?";
}

std::optional<Rat> parse_rat(std::string_view text) {
  const std::string upper = to_upper(trim(text));
  if (upper == "NR") return Rat::Nr;
  if (upper == "EUTRA" || upper == "LTE") return Rat::Eutra;
  return std::nullopt;
}

bool CellIdentity::valid() const {
  if (arfcn == 0) return false;
  switch (rat) {
    case Rat::Nr:
      return pci <= 1007;
    case Rat::Eutra:
      return pci <= 503;
  }
  return false;
}

void CellIdentity::validate() const {
  if (rat != Rat::Nr && rat != Rat::Eutra) throw DataError("cell: unknown RAT tag");
  if (arfcn == 0) throw DataError("cell " + to_string() + ": arfcn must be positive");
  if (!valid()) throw DataError("cell " + to_string() + ": pci out of range for RAT");
}

std::string CellIdentity::to_string() const {
  std::ostringstream out;
  out << argos::to_string(rat) << ':' << arfcn << ':' << pci;
  return out.str();
}

std::optional<CellIdentity> parse_cell_identity(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) return std::nullopt;
  const auto rat = parse_rat(parts[0]);
  const auto arfcn = parse_integer<std::uint32_t>(parts[1]);
  const auto pci = parse_integer<std::uint16_t>(parts[2]);
  if (!rat || !arfcn || !pci) return std::nullopt;
  CellIdentity cell{*arfcn, *pci, *rat};
  if (!cell.valid()) return std::nullopt;
  return cell;
}

namespace {

bool clamp_field(double& value, ValueRange range) {
  const double clamped = std::clamp(value, range.lo, range.hi);
  if (clamped == value) return false;
  value = clamped;
  return true;
}

}  // namespace

int clamp_to_reportable(CellMeasurement& m) {
  int changed = 0;
  changed += clamp_field(m.rsrp, kRsrpRange);
  changed += clamp_field(m.rsrq, kRsrqRange);
  changed += clamp_field(m.sinr, kSinrRange);
  return changed;
}

std::string_view to_string(ReportSource source) {
  switch (source) {
    case ReportSource::Periodic:
      return "PERIODIC";
    case ReportSource::Event:
      return "EVENT";
    case ReportSource::Ml1:
      return "ML1";
  }
  return "?";
}

std::optional<ReportSource> parse_report_source(std::string_view text) {
  const std::string upper = to_upper(trim(text));
  if (upper == "PERIODIC") return ReportSource::Periodic;
  if (upper == "EVENT") return ReportSource::Event;
  if (upper == "ML1") return ReportSource::Ml1;
  return std::nullopt;
}

bool is_supi(std::string_view ue_id) {
  return ue_id.size() == 15 &&
         std::all_of(ue_id.begin(), ue_id.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void MeasurementReport::validate() const {
  if (concealed) {
    if (ue_id.empty() || ue_id.size() > 255) throw DataError("report: concealed id must be 1..255 chars");
  } else if (!is_supi(ue_id)) {
    throw DataError("report: ue_id '" + ue_id + "' is not a 15-digit identifier");
  }
  if (neighbors.empty()) throw DataError("report for " + ue_id + ": no measurements");
  const auto [lo, hi] = std::minmax_element(
      neighbors.begin(), neighbors.end(),
      [](const CellMeasurement& a, const CellMeasurement& b) { return a.timestamp_ms < b.timestamp_ms; });
  if (hi->timestamp_ms - lo->timestamp_ms > 1000) {
    throw DataError("report for " + ue_id + ": timestamps span more than 1000 ms");
  }
}

std::int64_t MeasurementReport::first_timestamp_ms() const {
  std::int64_t first = neighbors.empty() ? 0 : neighbors.front().timestamp_ms;
  for (const auto& m : neighbors) first = std::min(first, m.timestamp_ms);
  return first;
}

CellRegistry::CellRegistry(std::vector<CellIdentity> cells) : cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

std::size_t CellRegistry::slot_of(const CellIdentity& cell) const {
  const auto it = std::lower_bound(cells_.begin(), cells_.end(), cell);
  if (it != cells_.end() && *it == cell) return static_cast<std::size_t>(it - cells_.begin());
  return unknown_slot();
}

std::string CellRegistry::serialize() const {
  std::ostringstream out;
  out << "version=1,slots=" << cells_.size() << '\n';
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    out << argos::to_string(cells_[i].rat) << ',' << cells_[i].arfcn << ',' << cells_[i].pci << ',' << i
        << '\n';
  }
  return out.str();
}

CellRegistry CellRegistry::parse(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("registry: missing header");
  const auto header = split(lines[0], ',');
  if (header.size() != 2 || trim(header[0]) != "version=1" || !starts_with(trim(header[1]), "slots=")) {
    throw DataError("registry: bad header '" + std::string(lines[0]) + "'");
  }
  const auto slots = parse_integer<std::size_t>(trim(header[1]).substr(6));
  if (!slots || *slots != lines.size() - 1) throw DataError("registry: slot count does not match rows");

  std::vector<CellIdentity> cells;
  cells.reserve(*slots);
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto fields = split(lines[row], ',');
    if (fields.size() != 4) throw DataError("registry line " + std::to_string(row + 1) + ": expected 4 fields");
    const auto rat = parse_rat(fields[0]);
    const auto arfcn = parse_integer<std::uint32_t>(fields[1]);
    const auto pci = parse_integer<std::uint16_t>(fields[2]);
    const auto slot = parse_integer<std::size_t>(fields[3]);
    if (!rat || !arfcn || !pci || !slot || *slot != row - 1) {
      throw DataError("registry line " + std::to_string(row + 1) + ": malformed row");
    }
    CellIdentity cell{*arfcn, *pci, *rat};
    cell.validate();
    cells.push_back(cell);
  }
  CellRegistry registry(cells);
  if (registry.cells() != cells) throw DataError("registry: rows are not in canonical slot order");
  return registry;
}

double normalize_measurement(double raw, double lo, double hi) {
  if (std::isnan(raw)) return 0.0;
  return std::clamp((raw - lo) / (hi - lo), 0.0, 1.0);
}

CellRegistry build_registry(std::span<const MeasurementReport> reports) {
  if (reports.empty()) throw DataError("empty training corpus");
  std::set<CellIdentity> seen;
  for (const auto& report : reports) {
    for (const auto& m : report.neighbors) seen.insert(m.cell);
  }
  return CellRegistry(std::vector<CellIdentity>(seen.begin(), seen.end()));
}

TelemetryVector encode_second(std::string_view ue_id, std::int64_t second_index,
                              std::span<const CellMeasurement> measurements,
                              const CellRegistry& registry) {
  const std::int64_t window_start = second_index * 1000;
  for (const auto& m : measurements) {
    if (m.timestamp_ms < window_start || m.timestamp_ms >= window_start + 1000) {
      throw DataError("window violation: timestamp " + std::to_string(m.timestamp_ms) + " outside second " +
                      std::to_string(second_index));
    }
  }

  // Canonical order makes the floating-point sums independent of arrival order.
  std::vector<CellMeasurement> ordered(measurements.begin(), measurements.end());
  std::sort(ordered.begin(), ordered.end(), [](const CellMeasurement& a, const CellMeasurement& b) {
    return std::tie(a.cell, a.timestamp_ms, a.rsrp, a.rsrq, a.sinr, a.is_rogue) <
           std::tie(b.cell, b.timestamp_ms, b.rsrp, b.rsrq, b.sinr, b.is_rogue);
  });

  const std::size_t slots = registry.size() + 1;
  std::vector<int> counts(slots, 0);
  std::vector<double> sums(slots * 3, 0.0);

  TelemetryVector out;
  out.ue_id = std::string(ue_id);
  out.second_index = second_index;
  for (const auto& m : ordered) {
    const std::size_t slot = registry.slot_of(m.cell);
    ++counts[slot];
    sums[3 * slot + 0] += std::clamp(m.rsrp, kRsrpRange.lo, kRsrpRange.hi);
    sums[3 * slot + 1] += std::clamp(m.rsrq, kRsrqRange.lo, kRsrqRange.hi);
    sums[3 * slot + 2] += std::clamp(m.sinr, kSinrRange.lo, kSinrRange.hi);
    if (m.is_rogue) ++out.rogue_count;
  }

  out.features.assign(slots * kFeaturesPerSlot, 0.0);
  for (std::size_t slot = 0; slot < slots; ++slot) {
    const int n = counts[slot];
    if (n == 0) continue;
    double* f = &out.features[slot * kFeaturesPerSlot];
    f[0] = static_cast<double>(std::min(n, kAppearanceCap)) / kAppearanceCap;
    f[1] = normalize_measurement(sums[3 * slot + 0] / n, kRsrpRange.lo, kRsrpRange.hi);
    f[2] = normalize_measurement(sums[3 * slot + 1] / n, kRsrqRange.lo, kRsrqRange.hi);
    f[3] = normalize_measurement(sums[3 * slot + 2] / n, kSinrRange.lo, kSinrRange.hi);
  }
  return out;
}

TelemetryVector encode_second(std::span<const MeasurementReport> reports, std::int64_t second_index,
                              const CellRegistry& registry) {
  std::vector<CellMeasurement> all;
  std::string ue_id = reports.empty() ? std::string() : reports.front().ue_id;
  for (const auto& report : reports) {
    if (report.ue_id != ue_id) throw DataError("encode_second: reports from more than one UE");
    all.insert(all.end(), report.neighbors.begin(), report.neighbors.end());
  }
  return encode_second(ue_id, second_index, all, registry);
}

}  // namespace argos
