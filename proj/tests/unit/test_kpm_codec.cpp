#include <gtest/gtest.h>

#include <random>

#include "argos/kpm_codec.hpp"
#include "generators.hpp"

namespace argos::kpm {
namespace {

using Bytes = std::vector<std::uint8_t>;

TEST(Encode, SetupResponseGoldenVector) {
  const Bytes expected{0x41, 0x52, 0x47, 0x4F, 0x01, 0x02, 0x01, 0x00, 0x00, 0x00, 0x01};
  EXPECT_EQ(encode(SetupResponse{true}), expected);
}

TEST(Encode, SubscriptionRequestLayout) {
  const Bytes expected{0x41, 0x52, 0x47, 0x4F, 0x01, 0x03, 0x08, 0x00, 0x00, 0x00,
                       0x07, 0x00, 0x00, 0x00, 0xE8, 0x03, 0x00, 0x00};
  EXPECT_EQ(encode(SubscriptionRequest{7, 1000}), expected);
}

TEST(Encode, IndicationMeasurementLayout) {
  RicIndication ind;
  ind.subscription_id = 1;
  ind.ue_id = "ab";
  ind.second_index = 2;
  ind.measurements.push_back({Rat::Nr, 632628, 101, -93.57, -10.5, 12.25, 2345});
  const Bytes bytes = encode(ind);
  ASSERT_EQ(bytes.size(), kHeaderSize + 4 + 3 + 4 + 2 + kMeasurementSize);
  const std::size_t m = kHeaderSize + 4 + 3 + 4 + 2;
  EXPECT_EQ(bytes[kHeaderSize + 4], 2);
  EXPECT_EQ(bytes[m], 0x01);
  // 632628 = 0x0009A734
  EXPECT_EQ(bytes[m + 1], 0x34);
  EXPECT_EQ(bytes[m + 2], 0xA7);
  EXPECT_EQ(bytes[m + 3], 0x09);
  EXPECT_EQ(bytes[m + 4], 0x00);
  EXPECT_EQ(bytes[m + 5], 101);
  EXPECT_EQ(bytes[m + 7], 0x73);
  EXPECT_EQ(bytes[m + 8], 0xDB);
}

TEST(CentiDb, QuantizationAndSaturation) {
  EXPECT_EQ(to_centi_db(-93.57), -9357);
  EXPECT_EQ(to_centi_db(1000.0), 32767);
  EXPECT_EQ(to_centi_db(-1000.0), -32767);
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> v(-327.67, 327.67);
  for (int i = 0; i < 10000; ++i) {
    const double x = v(g);
    EXPECT_LE(std::abs(from_centi_db(to_centi_db(x)) - x), 0.005 + 1e-12);
  }
}

TEST(Encode, InvariantViolationsProduceNothing) {
  Bytes out{0xAA};
  RicIndication bad;
  bad.ue_id = "";
  EXPECT_THROW(encode_into(bad, out), EncodeError);
  bad.ue_id = std::string(256, 'x');
  EXPECT_THROW(encode_into(bad, out), EncodeError);
  bad.ue_id = "ok";
  bad.measurements.resize(kMaxSequence + 1);
  EXPECT_THROW(encode_into(bad, out), EncodeError);
  bad.measurements.assign(1, WireMeasurement{});
  bad.measurements[0].rsrp = std::nan("");
  EXPECT_THROW(encode_into(bad, out), EncodeError);
  EXPECT_EQ(out, Bytes{0xAA});
}

TEST(Decode, ThreeBytesTruncated) {
  const Bytes three{0x41, 0x52, 0x47};
  const auto r = decode(three);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::Truncated);
}

TEST(Decode, TrailingBytesAreRemainder) {
  Bytes bytes = encode(SubscriptionResponse{9, true});
  const std::size_t frame = bytes.size();
  bytes.insert(bytes.end(), {0xDE, 0xAD, 0xBE, 0xEF});
  const auto r = decode(bytes);
  ASSERT_TRUE(r);
  EXPECT_EQ(r.value().consumed, frame);
  EXPECT_EQ(r.value().remainder.size(), 4u);
  EXPECT_EQ(r.value().remainder[0], 0xDE);
  EXPECT_EQ(std::get<SubscriptionResponse>(r.value().message), (SubscriptionResponse{9, true}));
}

TEST(Decode, HugeDeclaredLengthTruncated) {
  Bytes bytes{0x41, 0x52, 0x47, 0x4F, 0x01, 0x05, 0xFF, 0xFF, 0xFF, 0xFF};
  bytes.resize(20, 0);
  const auto r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::Truncated);
  EXPECT_NE(r.error().message().find("truncated"), std::string::npos);
}

TEST(Decode, HeaderErrorsIdentifyOffsets) {
  Bytes bytes = encode(SetupResponse{false});
  bytes[2] = 'X';
  auto r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::NotArgosFrame);
  EXPECT_EQ(r.error().offset, 2u);
  EXPECT_NE(r.error().message().find("not an ARGOS frame"), std::string::npos);

  bytes = encode(SetupResponse{false});
  bytes[4] = 2;
  r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::UnsupportedVersion);
  EXPECT_EQ(r.error().offset, 4u);

  bytes = encode(SetupResponse{false});
  bytes[5] = 7;
  r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::UnsupportedType);
}

TEST(Decode, CountOverrunIsMalformed) {
  RicIndication ind;
  ind.ue_id = "u";
  ind.measurements.push_back({});
  Bytes bytes = encode(ind);
  const std::size_t count_at = kHeaderSize + 4 + 2 + 4;
  bytes[count_at] = 2;
  const auto r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::MalformedPayload);
  EXPECT_GE(r.error().offset, kHeaderSize);
}

TEST(Decode, BadFlagAndRatAreMalformed) {
  Bytes bytes = encode(SetupResponse{true});
  bytes.back() = 2;
  auto r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::MalformedPayload);

  RicIndication ind;
  ind.ue_id = "u";
  ind.measurements.push_back({});
  bytes = encode(ind);
  bytes[kHeaderSize + 4 + 2 + 4 + 2] = 9;
  r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::MalformedPayload);
}

TEST(Decode, PayloadLongerThanFieldsIsMalformed) {
  Bytes bytes = encode(SetupResponse{true});
  bytes[6] = 2;
  bytes.push_back(0);
  const auto r = decode(bytes);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().kind, DecodeErrorKind::MalformedPayload);
}

TEST(RoundTrip, RandomizedMessages) {
  std::mt19937_64 g(17);
  for (int i = 0; i < 3000; ++i) {
    const WireMessage m = gen::random_message(g);
    const Bytes bytes = encode(m);
    const auto r = decode(bytes);
    ASSERT_TRUE(r) << r.error().message();
    EXPECT_EQ(r.value().message, m);
    EXPECT_EQ(r.value().consumed, bytes.size());
    EXPECT_TRUE(r.value().remainder.empty());
    EXPECT_EQ(encode(r.value().message), bytes);
    EXPECT_EQ(peek_frame_size(bytes), bytes.size());
  }
}

TEST(RoundTrip, BackToBackFrames) {
  std::mt19937_64 g(18);
  std::vector<WireMessage> sent;
  Bytes stream;
  for (int i = 0; i < 50; ++i) {
    sent.push_back(gen::random_message(g));
    encode_into(sent.back(), stream);
  }
  std::span<const std::uint8_t> rest(stream);
  for (const auto& m : sent) {
    const auto r = decode(rest);
    ASSERT_TRUE(r);
    EXPECT_EQ(r.value().message, m);
    rest = r.value().remainder;
  }
  EXPECT_TRUE(rest.empty());
}

TEST(Fuzz, MutatedFramesNeverCrash) {
  std::mt19937_64 g(19);
  std::size_t ok = 0;
  for (int i = 0; i < 20000; ++i) {
    Bytes bytes = encode(gen::random_message(g));
    const int flips = std::uniform_int_distribution<int>(1, 4)(g);
    for (int f = 0; f < flips; ++f) {
      bytes[std::uniform_int_distribution<std::size_t>(0, bytes.size() - 1)(g)] =
          static_cast<std::uint8_t>(g());
    }
    if (g() % 3 == 0) bytes.resize(std::uniform_int_distribution<std::size_t>(0, bytes.size())(g));
    const auto r = decode(bytes);
    if (r) {
      ++ok;
      EXPECT_LE(r.value().consumed, bytes.size());
    } else {
      EXPECT_LE(r.error().offset, bytes.size());
    }
  }
  EXPECT_GT(ok, 0u);
}

}  // namespace
}  // namespace argos::kpm
