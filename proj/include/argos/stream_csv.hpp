#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "argos/core_types.hpp"

namespace argos {

inline constexpr std::string_view kStreamCsvHeader = "ue_id,timestamp_ms,source,rat,arfcn,pci,rsrp,rsrq,sinr,is_rogue";

// One row per measurement. Consecutive rows sharing (ue_id, timestamp_ms,
// source) form one report whose first row is the serving cell.
void write_stream_csv(std::ostream& out, std::span<const MeasurementReport> stream);

struct IngestResult {
  std::vector<MeasurementReport> reports;  // stable-sorted by first timestamp
  std::size_t clamped_values = 0;          // out-of-range fields pulled into range
};

// Throws DataError("line N: ...") on malformed rows. The is_rogue column may be absent.
IngestResult parse_stream_csv(std::istream& in);
IngestResult ingest_csv(const std::filesystem::path& path);

// Shortest text form that parses back to the same double.
std::string format_double(double value);

}  // namespace argos
