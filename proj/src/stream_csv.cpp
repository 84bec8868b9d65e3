#include "argos/stream_csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "argos/errors.hpp"
#include "argos/text_util.hpp"

namespace argos {

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), ptr);
}

void write_stream_csv(std::ostream& out, std::span<const MeasurementReport> stream) {
  out << kStreamCsvHeader << '\n';
  for (const auto& report : stream) {
    for (const auto& m : report.neighbors) {
      out << report.ue_id << ',' << m.timestamp_ms << ',' << to_string(report.source) << ',' << to_string(m.cell.rat)
          << ',' << m.cell.arfcn << ',' << m.cell.pci << ',' << format_double(m.rsrp) << ','
          << format_double(m.rsrq) << ',' << format_double(m.sinr) << ',' << (m.is_rogue ? 1 : 0) << '\n';
    }
  }
}

IngestResult parse_stream_csv(std::istream& in) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  bool have_rogue_column = false;

  auto fail = [&](const std::string& why) -> DataError {
    return DataError("line " + std::to_string(line_no) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      const auto header = trim(line);
      if (header == kStreamCsvHeader) {
        have_rogue_column = true;
      } else if (header != kStreamCsvHeader.substr(0, kStreamCsvHeader.rfind(','))) {
        throw fail("unexpected header '" + line + "'");
      }
      continue;
    }
    if (trim(line).empty()) continue;

    const auto fields = split(line, ',');
    if (fields.size() != (have_rogue_column ? 10u : 9u)) throw fail("expected " + std::to_string(have_rogue_column ? 10 : 9) + " fields");

    const std::string ue_id(trim(fields[0]));
    const auto timestamp = parse_integer<std::int64_t>(fields[1]);
    const auto source = parse_report_source(fields[2]);
    const auto rat = parse_rat(fields[3]);
    const auto arfcn = parse_integer<std::uint32_t>(fields[4]);
    const auto pci = parse_integer<std::uint16_t>(fields[5]);
    const auto rsrp = parse_double(fields[6]);
    const auto rsrq = parse_double(fields[7]);
    const auto sinr = parse_double(fields[8]);
    if (ue_id.empty()) throw fail("empty ue_id");
    if (!timestamp || *timestamp < 0) throw fail("bad timestamp_ms");
    if (!source) throw fail("bad source");
    if (!rat) throw fail("bad rat");
    if (!arfcn || !pci) throw fail("bad arfcn/pci");
    if (!rsrp || !rsrq || !sinr || !std::isfinite(*rsrp) || !std::isfinite(*rsrq) || !std::isfinite(*sinr)) {
      throw fail("bad measurement value");
    }

    CellMeasurement m;
    m.cell = {*arfcn, *pci, *rat};
    if (!m.cell.valid()) throw fail("invalid cell " + m.cell.to_string());
    m.rsrp = *rsrp;
    m.rsrq = *rsrq;
    m.sinr = *sinr;
    m.timestamp_ms = *timestamp;
    if (have_rogue_column) {
      const auto rogue = trim(fields[9]);
      if (rogue != "0" && rogue != "1") throw fail("is_rogue must be 0 or 1");
      m.is_rogue = rogue == "1";
    }
    result.clamped_values += static_cast<std::size_t>(clamp_to_reportable(m));

    const bool continues = !result.reports.empty() && result.reports.back().ue_id == ue_id &&
                           result.reports.back().source == *source &&
                           result.reports.back().neighbors.front().timestamp_ms == *timestamp;
    if (continues) {
      result.reports.back().neighbors.push_back(m);
    } else {
      MeasurementReport report;
      report.ue_id = ue_id;
      report.concealed = !is_supi(ue_id);
      report.serving = m.cell;
      report.source = *source;
      report.neighbors.push_back(m);
      result.reports.push_back(std::move(report));
    }
  }
  if (line_no == 0) throw DataError("line 1: missing header");

  std::stable_sort(result.reports.begin(), result.reports.end(),
                   [](const MeasurementReport& a, const MeasurementReport& b) {
                     return a.first_timestamp_ms() < b.first_timestamp_ms();
                   });
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_stream_csv(in);
}

}  // namespace argos
