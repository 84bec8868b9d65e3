#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "argos/core_types.hpp"

namespace argos::kpm {

// Frame layout (all integers little-endian):
//   magic "ARGO" | version u8 | type u8 | payload_length u32 | payload
// Payloads:
//   SetupRequest         node_id u32, count u16, tag u8 * count
//   SetupResponse        accepted u8
//   SubscriptionRequest  subscription_id u32, report_period_ms u32
//   SubscriptionResponse subscription_id u32, accepted u8
//   RicIndication        subscription_id u32, ue_id (len u8 + ASCII), second_index u32,
//                        count u16, then per measurement:
//                        rat u8, arfcn u32, pci u16, rsrp i16, rsrq i16, sinr i16 (centi-dB),
//                        timestamp_ms u32
inline constexpr std::array<std::uint8_t, 4> kMagic{0x41, 0x52, 0x47, 0x4F};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::size_t kMeasurementSize = 17;
inline constexpr std::size_t kMaxSequence = 65535;

enum class MessageType : std::uint8_t {
  SetupRequest = 1,
  SetupResponse = 2,
  SubscriptionRequest = 3,
  SubscriptionResponse = 4,
  RicIndication = 5,
  // Reserved for Insert / Control / Policy; not implemented.
  ReservedInsert = 6,
  ReservedControl = 7,
  ReservedPolicy = 8,
};

enum class MetricTag : std::uint8_t { Rsrp = 1, Rsrq = 2, Sinr = 3, IntraFrequency = 4, InterFrequency = 5, InterRat = 6 };

struct SetupRequest {
  std::uint32_t node_id = 0;
  std::vector<MetricTag> capabilities;
  bool operator==(const SetupRequest&) const = default;
};

struct SetupResponse {
  bool accepted = false;
  bool operator==(const SetupResponse&) const = default;
};

struct SubscriptionRequest {
  std::uint32_t subscription_id = 0;
  std::uint32_t report_period_ms = 1000;
  bool operator==(const SubscriptionRequest&) const = default;
};

struct SubscriptionResponse {
  std::uint32_t subscription_id = 0;
  bool accepted = false;
  bool operator==(const SubscriptionResponse&) const = default;
};

struct WireMeasurement {
  Rat rat = Rat::Nr;
  std::uint32_t arfcn = 0;
  std::uint16_t pci = 0;
  double rsrp = 0.0;  // dB values, quantized to 0.01 on the wire
  double rsrq = 0.0;
  double sinr = 0.0;
  std::uint32_t timestamp_ms = 0;
  bool operator==(const WireMeasurement&) const = default;
};

struct RicIndication {
  std::uint32_t subscription_id = 0;
  std::string ue_id;
  std::uint32_t second_index = 0;
  std::vector<WireMeasurement> measurements;
  bool operator==(const RicIndication&) const = default;
};

using WireMessage =
    std::variant<SetupRequest, SetupResponse, SubscriptionRequest, SubscriptionResponse, RicIndication>;

MessageType type_of(const WireMessage& message);

WireMeasurement to_wire(const CellMeasurement& m);
CellMeasurement from_wire(const WireMeasurement& m);

// Saturating round-to-nearest conversion to centi-dB.
std::int16_t to_centi_db(double value);
double from_centi_db(std::int16_t value);

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws EncodeError on invariant violations; nothing is produced in that case.
std::vector<std::uint8_t> encode(const WireMessage& message);
// Appends one frame; on EncodeError `out` is left unchanged.
void encode_into(const WireMessage& message, std::vector<std::uint8_t>& out);

enum class DecodeErrorKind { NotArgosFrame, UnsupportedVersion, UnsupportedType, Truncated, MalformedPayload };

struct DecodeError {
  DecodeErrorKind kind;
  std::size_t offset;  // byte offset of the offending field
  std::string detail;

  std::string message() const;
};

struct Decoded {
  WireMessage message;
  std::size_t consumed = 0;
  std::span<const std::uint8_t> remainder;
};

class DecodeResult {
 public:
  DecodeResult(Decoded value) : state_(std::move(value)) {}
  DecodeResult(DecodeError error) : state_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<Decoded>(state_); }
  explicit operator bool() const { return ok(); }
  const Decoded& value() const { return std::get<Decoded>(state_); }
  const DecodeError& error() const { return std::get<DecodeError>(state_); }

 private:
  std::variant<Decoded, DecodeError> state_;
};

// Parses exactly one frame from the front of `bytes`. Never allocates more
// than the bytes actually present justify.
DecodeResult decode(std::span<const std::uint8_t> bytes);

// Total frame size once at least a header is available, or 0 if fewer than
// kHeaderSize bytes are present. Does not validate the header.
std::size_t peek_frame_size(std::span<const std::uint8_t> bytes);

}  // namespace argos::kpm
