#include "argos/kpm_codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace argos::kpm {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v & 0xFF));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) u8(static_cast<std::uint8_t>((v >> shift) & 0xFF));
  }
  void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
  void count(std::size_t n, const char* what) {
    if (n > kMaxSequence) throw EncodeError(std::string(what) + ": more than 65535 elements");
    u16(static_cast<std::uint16_t>(n));
  }
  void ascii(const std::string& s) {
    if (s.empty() || s.size() > 255) throw EncodeError("ue_id must be 1..255 bytes");
    for (char c : s) {
      if (c < 0x20 || c > 0x7E) throw EncodeError("ue_id must be printable ASCII");
    }
    u8(static_cast<std::uint8_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> payload, std::size_t base) : data_(payload), base_(base) {}

  bool u8(std::uint8_t& v) {
    if (!need(1)) return false;
    v = data_[pos_++];
    return true;
  }
  bool u16(std::uint16_t& v) {
    if (!need(2)) return false;
    v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return true;
  }
  bool u32(std::uint32_t& v) {
    if (!need(4)) return false;
    v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return true;
  }
  bool i16(std::int16_t& v) {
    std::uint16_t raw = 0;
    if (!u16(raw)) return false;
    v = static_cast<std::int16_t>(raw);
    return true;
  }
  bool flag(bool& v) {
    std::uint8_t raw = 0;
    if (!u8(raw) || raw > 1) {
      fail_at(pos_ - (raw > 1 ? 1 : 0), "boolean field must be 0 or 1");
      return false;
    }
    v = raw == 1;
    return true;
  }
  bool ascii(std::string& s) {
    std::uint8_t len = 0;
    if (!u8(len)) return false;
    if (len == 0) return fail_at(pos_ - 1, "empty ue_id");
    if (!need(len)) return false;
    s.assign(reinterpret_cast<const char*>(data_.data() + pos_), len);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < 0x20 || s[i] > 0x7E) return fail_at(pos_ + i, "ue_id is not printable ASCII");
    }
    pos_ += len;
    return true;
  }
  // Validates that `count` elements of `element_size` bytes fit before reserving.
  bool fits(std::size_t count, std::size_t element_size) {
    if (count * element_size > data_.size() - pos_) return fail_at(pos_, "count field overruns payload");
    return true;
  }
  bool fail_at(std::size_t local_offset, std::string detail) {
    if (!failed_) {
      failed_ = true;
      offset_ = base_ + local_offset;
      detail_ = std::move(detail);
    }
    return false;
  }
  bool finish() {
    if (pos_ != data_.size()) return fail_at(pos_, "trailing bytes inside payload");
    return true;
  }

  std::size_t pos() const { return pos_; }
  bool failed() const { return failed_; }
  DecodeError error() const { return {DecodeErrorKind::MalformedPayload, offset_, detail_}; }

 private:
  bool need(std::size_t n) {
    if (data_.size() - pos_ < n) return fail_at(pos_, "field overruns payload");
    return true;
  }

  std::span<const std::uint8_t> data_;
  std::size_t base_;
  std::size_t pos_ = 0;
  bool failed_ = false;
  std::size_t offset_ = 0;
  std::string detail_;
};

void check_finite(double v) {
  if (!std::isfinite(v)) throw EncodeError("measurement value is not finite");
}

void write_payload(Writer& w, const SetupRequest& m) {
  w.u32(m.node_id);
  w.count(m.capabilities.size(), "capabilities");
  for (auto tag : m.capabilities) {
    const auto raw = static_cast<std::uint8_t>(tag);
    if (raw < 1 || raw > 6) throw EncodeError("unknown metric tag");
    w.u8(raw);
  }
}

void write_payload(Writer& w, const SetupResponse& m) { w.u8(m.accepted ? 1 : 0); }

void write_payload(Writer& w, const SubscriptionRequest& m) {
  w.u32(m.subscription_id);
  w.u32(m.report_period_ms);
}

void write_payload(Writer& w, const SubscriptionResponse& m) {
  w.u32(m.subscription_id);
  w.u8(m.accepted ? 1 : 0);
}

void write_payload(Writer& w, const RicIndication& m) {
  w.u32(m.subscription_id);
  w.ascii(m.ue_id);
  w.u32(m.second_index);
  w.count(m.measurements.size(), "measurements");
  for (const auto& meas : m.measurements) {
    if (meas.rat != Rat::Nr && meas.rat != Rat::Eutra) throw EncodeError("unknown RAT tag");
    check_finite(meas.rsrp);
    check_finite(meas.rsrq);
    check_finite(meas.sinr);
    w.u8(static_cast<std::uint8_t>(meas.rat));
    w.u32(meas.arfcn);
    w.u16(meas.pci);
    w.i16(to_centi_db(meas.rsrp));
    w.i16(to_centi_db(meas.rsrq));
    w.i16(to_centi_db(meas.sinr));
    w.u32(meas.timestamp_ms);
  }
}

bool read_payload(Reader& r, SetupRequest& m) {
  std::uint16_t count = 0;
  if (!r.u32(m.node_id) || !r.u16(count) || !r.fits(count, 1)) return false;
  m.capabilities.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    std::uint8_t raw = 0;
    if (!r.u8(raw)) return false;
    if (raw < 1 || raw > 6) return r.fail_at(r.pos() - 1, "unknown metric tag");
    m.capabilities.push_back(static_cast<MetricTag>(raw));
  }
  return true;
}

bool read_payload(Reader& r, SetupResponse& m) { return r.flag(m.accepted); }

bool read_payload(Reader& r, SubscriptionRequest& m) { return r.u32(m.subscription_id) && r.u32(m.report_period_ms); }

bool read_payload(Reader& r, SubscriptionResponse& m) { return r.u32(m.subscription_id) && r.flag(m.accepted); }

bool read_payload(Reader& r, RicIndication& m) {
  std::uint16_t count = 0;
  if (!r.u32(m.subscription_id) || !r.ascii(m.ue_id) || !r.u32(m.second_index) || !r.u16(count) ||
      !r.fits(count, kMeasurementSize)) {
    return false;
  }
  m.measurements.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    WireMeasurement meas;
    std::uint8_t rat = 0;
    std::int16_t rsrp = 0, rsrq = 0, sinr = 0;
    if (!r.u8(rat)) return false;
    if (rat != 1 && rat != 2) return r.fail_at(r.pos() - 1, "unknown RAT tag");
    if (!r.u32(meas.arfcn) || !r.u16(meas.pci) || !r.i16(rsrp) || !r.i16(rsrq) || !r.i16(sinr) ||
        !r.u32(meas.timestamp_ms)) {
      return false;
    }
    meas.rat = static_cast<Rat>(rat);
    meas.rsrp = from_centi_db(rsrp);
    meas.rsrq = from_centi_db(rsrq);
    meas.sinr = from_centi_db(sinr);
    m.measurements.push_back(meas);
  }
  return true;
}

template <typename T>
DecodeResult decode_as(std::span<const std::uint8_t> payload, std::size_t frame_size,
                       std::span<const std::uint8_t> whole) {
  Reader reader(payload, kHeaderSize);
  T message;
  if (!read_payload(reader, message) || !reader.finish()) return reader.error();
  return Decoded{WireMessage(std::move(message)), frame_size, whole.subspan(frame_size)};
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

}  // namespace

MessageType type_of(const WireMessage& message) {
  return static_cast<MessageType>(message.index() + 1);
}

std::int16_t to_centi_db(double value) {
  const double scaled = std::round(value * 100.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32767.0, 32767.0));
}

double from_centi_db(std::int16_t value) { return static_cast<double>(value) / 100.0; }

WireMeasurement to_wire(const CellMeasurement& m) {
  WireMeasurement w;
  w.rat = m.cell.rat;
  w.arfcn = m.cell.arfcn;
  w.pci = m.cell.pci;
  w.rsrp = m.rsrp;
  w.rsrq = m.rsrq;
  w.sinr = m.sinr;
  if (m.timestamp_ms < 0 || m.timestamp_ms > std::numeric_limits<std::uint32_t>::max()) {
    throw EncodeError("timestamp_ms does not fit the wire format");
  }
  w.timestamp_ms = static_cast<std::uint32_t>(m.timestamp_ms);
  return w;
}

CellMeasurement from_wire(const WireMeasurement& w) {
  CellMeasurement m;
  m.cell = {w.arfcn, w.pci, w.rat};
  m.rsrp = w.rsrp;
  m.rsrq = w.rsrq;
  m.sinr = w.sinr;
  m.timestamp_ms = w.timestamp_ms;
  return m;
}

void encode_into(const WireMessage& message, std::vector<std::uint8_t>& out) {
  Writer payload;
  std::visit([&](const auto& m) { write_payload(payload, m); }, message);
  const auto& body = payload.bytes();
  if (body.size() > std::numeric_limits<std::uint32_t>::max()) throw EncodeError("payload too large");

  Writer frame;
  for (auto b : kMagic) frame.u8(b);
  frame.u8(kVersion);
  frame.u8(static_cast<std::uint8_t>(type_of(message)));
  frame.u32(static_cast<std::uint32_t>(body.size()));
  out.reserve(out.size() + kHeaderSize + body.size());
  out.insert(out.end(), frame.bytes().begin(), frame.bytes().end());
  out.insert(out.end(), body.begin(), body.end());
}

std::vector<std::uint8_t> encode(const WireMessage& message) {
  std::vector<std::uint8_t> out;
  encode_into(message, out);
  return out;
}

std::string DecodeError::message() const {
  std::string what;
  switch (kind) {
    case DecodeErrorKind::NotArgosFrame:
      what = "not an ARGOS frame";
      break;
    case DecodeErrorKind::UnsupportedVersion:
      what = "unsupported version";
      break;
    case DecodeErrorKind::UnsupportedType:
      what = "unsupported message type";
      break;
    case DecodeErrorKind::Truncated:
      what = "truncated";
      break;
    case DecodeErrorKind::MalformedPayload:
      what = "malformed payload";
      break;
  }
  what += " at byte " + std::to_string(offset);
  if (!detail.empty()) what += ": " + detail;
  return what;
}

std::size_t peek_frame_size(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) return 0;
  return kHeaderSize + static_cast<std::size_t>(read_u32(bytes, 6));
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    return DecodeError{DecodeErrorKind::Truncated, bytes.size(), "header needs 10 bytes"};
  }
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (bytes[i] != kMagic[i]) return DecodeError{DecodeErrorKind::NotArgosFrame, i, "bad magic"};
  }
  if (bytes[4] != kVersion) return DecodeError{DecodeErrorKind::UnsupportedVersion, 4, {}};
  const std::uint8_t type = bytes[5];
  if (type < 1 || type > 5) return DecodeError{DecodeErrorKind::UnsupportedType, 5, "type " + std::to_string(type)};

  const std::uint64_t declared = read_u32(bytes, 6);
  if (declared > bytes.size() - kHeaderSize) {
    return DecodeError{DecodeErrorKind::Truncated, bytes.size(),
                       "payload declares " + std::to_string(declared) + " bytes"};
  }
  const std::size_t frame_size = kHeaderSize + static_cast<std::size_t>(declared);
  const auto payload = bytes.subspan(kHeaderSize, static_cast<std::size_t>(declared));

  switch (static_cast<MessageType>(type)) {
    case MessageType::SetupRequest:
      return decode_as<SetupRequest>(payload, frame_size, bytes);
    case MessageType::SetupResponse:
      return decode_as<SetupResponse>(payload, frame_size, bytes);
    case MessageType::SubscriptionRequest:
      return decode_as<SubscriptionRequest>(payload, frame_size, bytes);
    case MessageType::SubscriptionResponse:
      return decode_as<SubscriptionResponse>(payload, frame_size, bytes);
    case MessageType::RicIndication:
      return decode_as<RicIndication>(payload, frame_size, bytes);
    default:
      break;
  }
  return DecodeError{DecodeErrorKind::UnsupportedType, 5, {}};
}

}  // namespace argos::kpm
