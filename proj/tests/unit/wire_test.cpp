#include <gtest/gtest.h>

#include <cstring>

#include "gen.hpp"
#include "smsrecon/wire.hpp"

using namespace smsrecon;

namespace {

ErrorKind parse_kind(const std::string& line) {
  try {
    (void)wire::parse_header(line);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidData;  // sentinel: no error
}

}  // namespace

TEST(Wire, HeaderIsSingleLineInFieldOrder) {
  const wire::FrameHeader h{0.5, Stage::U, 2, 3, 4, 2 * 3 * 4 * 8};
  EXPECT_EQ(wire::encode_header(h), "{\"t\":0.5,\"stage\":\"U\",\"coils\":2,\"rows\":3,\"cols\":4,\"bytes\":192}\n");
}

TEST(Wire, HeaderRoundTrip) {
  testgen::Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    wire::FrameHeader h{rng.uniform(), rng.coin() ? Stage::M : Stage::U, rng.index(1, 8), rng.index(1, 300),
                        rng.index(1, 300), 0};
    h.bytes = h.expected_bytes();
    const auto parsed = wire::parse_header(wire::encode_header(h));
    EXPECT_FALSE(parsed.is_error);
    EXPECT_EQ(parsed.header, h);
  }
}

TEST(Wire, ErrorRecord) {
  const auto parsed = wire::parse_header(wire::encode_error("model \"x\" failed"));
  EXPECT_TRUE(parsed.is_error);
  EXPECT_EQ(parsed.error, "model \"x\" failed");
}

TEST(Wire, StrictHeaderParsing) {
  EXPECT_EQ(parse_kind("not json"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind("[1,2]"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":0.1,"stage":"M","coils":1,"rows":1,"cols":1})"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":0.1,"stage":"M","coils":1,"rows":1,"cols":1,"bytes":8,"extra":1})"),
            ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":0.1,"stage":"X","coils":1,"rows":1,"cols":1,"bytes":8})"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":"0.1","stage":"M","coils":1,"rows":1,"cols":1,"bytes":8})"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":0.1,"stage":"M","coils":1.5,"rows":1,"cols":1,"bytes":8})"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":0.1,"stage":"M","coils":-1,"rows":1,"cols":1,"bytes":8})"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":0.1,"stage":"M","coils":1,"rows":1,"cols":1,"bytes":16})"), ErrorKind::Protocol);
  EXPECT_EQ(parse_kind(R"({"t":0.1,"stage":"M","coils":1,"rows":1,"cols":1,"bytes":8})"), ErrorKind::InvalidData);
}

TEST(Wire, PayloadIsLittleEndianInterleaved) {
  MultiCoilKSpace k(2, 1, 1);
  k.coil(0)(0, 0) = cplx(1.0, -2.0);
  k.coil(1)(0, 0) = cplx(0.5, 3.0);
  const std::string bytes = wire::encode_payload(k);
  ASSERT_EQ(bytes.size(), 16u);
  const float expect[4] = {1.0f, -2.0f, 0.5f, 3.0f};
  for (int i = 0; i < 4; ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &expect[i], 4);
    for (int b = 0; b < 4; ++b) {
      EXPECT_EQ(static_cast<unsigned char>(bytes[4 * i + b]), (bits >> (8 * b)) & 0xFFu);
    }
  }
}

TEST(Wire, PayloadRoundTripIsBitExactForF32Values) {
  testgen::Rng rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = testgen::kspace_f32(rng, rng.index(1, 4), rng.index(1, 9), rng.index(1, 9));
    EXPECT_EQ(wire::decode_payload(wire::encode_payload(k), k.coils(), k.rows(), k.cols()), k);
  }
}

TEST(Wire, PayloadLengthAndFiniteness) {
  EXPECT_THROW((void)wire::decode_payload(std::string(15, '\0'), 1, 1, 2), Error);
  MultiCoilKSpace k(1, 1, 1);
  k.coil(0)(0, 0) = cplx(std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_THROW((void)wire::decode_payload(wire::encode_payload(k), 1, 1, 1), Error);
}
