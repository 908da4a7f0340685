#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smsrecon/operators.hpp"

namespace smsrecon {

// On-disk layout: "KST1", u8 version, u8 dtype, u8 rank, rank x u64 dims,
// then the payload. All multi-byte values little-endian, payload row-major fp32.
enum class TensorDtype : std::uint8_t { ComplexF32 = 0, RealF32 = 1 };

inline constexpr std::uint8_t kTensorFileVersion = 1;

struct TensorFile {
  TensorDtype dtype = TensorDtype::RealF32;
  std::vector<std::uint64_t> dims;
  /// Complex payloads are interleaved (re, im).
  std::vector<float> values;

  std::uint64_t element_count() const noexcept;
  friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

std::vector<std::uint8_t> encode_tensor(const TensorFile& t);
TensorFile decode_tensor(const std::vector<std::uint8_t>& bytes);

/// Whole-file atomic: writes a sibling temporary and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

void write_tensor(const std::filesystem::path& path, const TensorFile& t);
TensorFile read_tensor(const std::filesystem::path& path);

/// coils x rows x cols, complex.
TensorFile to_tensor(const MultiCoilKSpace& k);
MultiCoilKSpace to_multicoil(const TensorFile& t);
/// rows x cols, real.
TensorFile to_tensor(const MagnitudeImage& image);
MagnitudeImage to_magnitude(const TensorFile& t);
/// rows x cols, real 0/1.
TensorFile mask_to_tensor(const SamplingMask& mask);
SamplingMask tensor_to_mask(const TensorFile& t, AcsBand acs);

}  // namespace smsrecon
