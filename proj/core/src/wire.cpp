#include "smsrecon/wire.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <set>

namespace smsrecon::wire {

namespace {

void put_f32(std::string& out, float value) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

std::size_t get_count(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    fail(ErrorKind::Protocol, std::string("frame header: '") + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

std::string encode_header(const FrameHeader& header) {
  nlohmann::ordered_json j;
  j["t"] = header.t;
  j["stage"] = std::string(1, stage_code(header.stage));
  j["coils"] = header.coils;
  j["rows"] = header.rows;
  j["cols"] = header.cols;
  j["bytes"] = header.bytes;
  return j.dump() + "\n";
}

std::string encode_error(std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = std::string(message);
  return j.dump() + "\n";
}

ParsedHeader parse_header(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Protocol, std::string("frame header is not a valid record: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Protocol, "frame header must be a key-value record");

  ParsedHeader parsed;
  if (j.contains("error")) {
    parsed.is_error = true;
    parsed.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
    return parsed;
  }
  static const std::set<std::string> keys = {"t", "stage", "coils", "rows", "cols", "bytes"};
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) fail(ErrorKind::Protocol, "frame header: unknown key '" + key + "'");
  }
  for (const auto& key : keys) {
    if (!j.contains(key)) fail(ErrorKind::Protocol, "frame header: missing key '" + key + "'");
  }
  if (!j["t"].is_number()) fail(ErrorKind::Protocol, "frame header: 't' must be a number");
  const auto& stage = j["stage"];
  if (!stage.is_string() || (stage != "M" && stage != "U")) {
    fail(ErrorKind::Protocol, "frame header: 'stage' must be \"M\" or \"U\"");
  }
  FrameHeader& h = parsed.header;
  h.t = j["t"].get<double>();
  h.stage = stage == "M" ? Stage::M : Stage::U;
  h.coils = get_count(j, "coils");
  h.rows = get_count(j, "rows");
  h.cols = get_count(j, "cols");
  h.bytes = get_count(j, "bytes");
  if (h.bytes != h.expected_bytes()) {
    fail(ErrorKind::Protocol, "frame header: 'bytes' = " + std::to_string(h.bytes) +
                                  " does not match coils*rows*cols*8 = " +
                                  std::to_string(h.expected_bytes()));
  }
  return parsed;
}

std::string encode_payload(const MultiCoilKSpace& k) {
  std::string out;
  out.reserve(k.coils() * k.rows() * k.cols() * 8);
  for (const auto& g : k.grids()) {
    for (const auto& v : g.data()) {
      put_f32(out, static_cast<float>(v.real()));
      put_f32(out, static_cast<float>(v.imag()));
    }
  }
  return out;
}

MultiCoilKSpace decode_payload(std::string_view bytes, std::size_t coils, std::size_t rows,
                               std::size_t cols) {
  if (bytes.size() != coils * rows * cols * 8) {
    fail(ErrorKind::Protocol, "payload length " + std::to_string(bytes.size()) +
                                  " does not match the declared shape");
  }
  MultiCoilKSpace k(coils, rows, cols);
  const char* p = bytes.data();
  for (auto& g : k.grids()) {
    for (auto& v : g.data()) {
      const float re = get_f32(p);
      const float im = get_f32(p + 4);
      v = cplx(re, im);
      p += 8;
    }
  }
  if (!all_finite(k)) fail(ErrorKind::Protocol, "payload contains non-finite values");
  return k;
}

FrameHeader header_for(const MultiCoilKSpace& k, double t, Stage stage) {
  FrameHeader h{t, stage, k.coils(), k.rows(), k.cols(), 0};
  h.bytes = h.expected_bytes();
  return h;
}

}  // namespace smsrecon::wire
