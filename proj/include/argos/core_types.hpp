#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace argos {

enum class Rat : std::uint8_t { Nr = 1, Eutra = 2 };

std::string_view to_string(Rat rat);
std::optional<Rat> parse_rat(std::string_view text);

struct CellIdentity {
  std::uint32_t arfcn = 0;
  std::uint16_t pci = 0;
  Rat rat = Rat::Nr;

  bool operator==(const CellIdentity&) const = default;
  // Registry order: (rat, arfcn, pci).
  std::strong_ordering operator<=>(const CellIdentity& other) const {
    return std::tuple(rat, arfcn, pci) <=> std::tuple(other.rat, other.arfcn, other.pci);
  }

  bool valid() const;
  // Throws DataError describing the violated invariant.
  void validate() const;
  std::string to_string() const;  // "NR:632628:101"
};

std::optional<CellIdentity> parse_cell_identity(std::string_view text);

struct ValueRange {
  double lo;
  double hi;
};

// Reportable ranges, also used as clamping and normalization bounds.
inline constexpr ValueRange kRsrpRange{-156.0, -31.0};
inline constexpr ValueRange kRsrqRange{-43.0, 20.0};
inline constexpr ValueRange kSinrRange{-23.0, 40.0};

struct CellMeasurement {
  CellIdentity cell;
  double rsrp = kRsrpRange.lo;
  double rsrq = kRsrqRange.lo;
  double sinr = kSinrRange.lo;
  std::int64_t timestamp_ms = 0;
  // Ground truth for evaluation only; never encoded or put on the wire.
  bool is_rogue = false;

  bool operator==(const CellMeasurement&) const = default;

  std::int64_t second() const { return floor_second(timestamp_ms); }
  static std::int64_t floor_second(std::int64_t timestamp_ms) {
    return timestamp_ms >= 0 ? timestamp_ms / 1000 : -((-timestamp_ms + 999) / 1000);
  }
};

// Clamps rsrp/rsrq/sinr into the reportable ranges. Returns how many fields changed.
int clamp_to_reportable(CellMeasurement& m);

enum class ReportSource : std::uint8_t { Periodic, Event, Ml1 };

std::string_view to_string(ReportSource source);
std::optional<ReportSource> parse_report_source(std::string_view text);

struct MeasurementReport {
  std::string ue_id;
  bool concealed = false;
  CellIdentity serving;
  std::vector<CellMeasurement> neighbors;
  ReportSource source = ReportSource::Ml1;

  bool operator==(const MeasurementReport&) const = default;

  void validate() const;
  std::int64_t first_timestamp_ms() const;
};

// A SUPI-style identifier is exactly 15 decimal digits.
bool is_supi(std::string_view ue_id);

// Maps each legitimate cell seen in training to a fixed slot; anything else
// routes to the trailing unknown slot.
class CellRegistry {
 public:
  CellRegistry() = default;
  explicit CellRegistry(std::vector<CellIdentity> cells);

  std::size_t size() const { return cells_.size(); }
  std::size_t unknown_slot() const { return cells_.size(); }
  std::size_t feature_width() const { return 4 * (cells_.size() + 1); }
  std::size_t slot_of(const CellIdentity& cell) const;
  bool contains(const CellIdentity& cell) const { return slot_of(cell) != unknown_slot(); }
  const std::vector<CellIdentity>& cells() const { return cells_; }

  // "version=1,slots=S" header followed by "rat,arfcn,pci,slot" rows.
  std::string serialize() const;
  static CellRegistry parse(std::string_view text);

  bool operator==(const CellRegistry&) const = default;

 private:
  std::vector<CellIdentity> cells_;  // sorted, unique
};

struct TelemetryVector {
  std::string ue_id;
  std::int64_t second_index = 0;
  std::vector<double> features;
  std::uint32_t rogue_count = 0;  // evaluation label source only

  bool operator==(const TelemetryVector&) const = default;
};

inline constexpr int kAppearanceCap = 8;
inline constexpr std::size_t kFeaturesPerSlot = 4;

double normalize_measurement(double raw, double lo, double hi);

CellRegistry build_registry(std::span<const MeasurementReport> reports);

// Encodes one UE-second of measurements. Throws DataError("window violation")
// if any timestamp lies outside [second_index*1000, (second_index+1)*1000).
TelemetryVector encode_second(std::string_view ue_id, std::int64_t second_index,
                              std::span<const CellMeasurement> measurements,
                              const CellRegistry& registry);

// Report-based form: all reports must belong to one UE.
TelemetryVector encode_second(std::span<const MeasurementReport> reports, std::int64_t second_index,
                              const CellRegistry& registry);

}  // namespace argos
