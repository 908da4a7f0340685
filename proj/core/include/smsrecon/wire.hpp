#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "smsrecon/operators.hpp"

namespace smsrecon::wire {

/// Greeting sent by a predictor server as soon as a client connects.
inline constexpr std::string_view kHandshake = "OCDI-PRED v1\n";

/// One frame header. Requests and responses share the layout:
/// {"t":<float>,"stage":"M"|"U","coils":<int>,"rows":<int>,"cols":<int>,"bytes":<int>}\n
/// followed by `bytes` of little-endian fp32 (re, im) pairs, coil-major, row-major.
struct FrameHeader {
  double t = 0.0;
  Stage stage = Stage::M;
  std::size_t coils = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t bytes = 0;

  std::size_t expected_bytes() const noexcept { return coils * rows * cols * 8; }
  friend bool operator==(const FrameHeader&, const FrameHeader&) = default;
};

/// Result of parsing a header line: either a frame header or a server error.
struct ParsedHeader {
  bool is_error = false;
  std::string error;
  FrameHeader header;
};

std::string encode_header(const FrameHeader& header);
std::string encode_error(std::string_view message);

/// Parses one header line (trailing newline optional). Malformed input raises
/// ErrorKind::Protocol.
ParsedHeader parse_header(std::string_view line);

std::string encode_payload(const MultiCoilKSpace& k);
MultiCoilKSpace decode_payload(std::string_view bytes, std::size_t coils, std::size_t rows,
                               std::size_t cols);

/// Header describing `k` as a frame at normalized step t.
FrameHeader header_for(const MultiCoilKSpace& k, double t, Stage stage);

}  // namespace smsrecon::wire
