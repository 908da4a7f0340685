#include "smsrecon/tensor_file.hpp"

#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace smsrecon {

namespace {

constexpr char kMagic[4] = {'K', 'S', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::size_t scalars_per_element(TensorDtype d) { return d == TensorDtype::ComplexF32 ? 2 : 1; }

float narrow(double v) {
  const auto f = static_cast<float>(v);
  require(std::isfinite(f), ErrorKind::InvalidData, "tensor: value is not representable in fp32");
  return f;
}

}  // namespace

std::uint64_t TensorFile::element_count() const noexcept {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const TensorFile& t) {
  require(t.dims.size() <= 255, ErrorKind::Argument, "tensor: rank exceeds 255");
  require(t.values.size() == t.element_count() * scalars_per_element(t.dtype), ErrorKind::Shape,
          "tensor: payload length does not match dims");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kTensorFileVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_u64(out, d);
  out.reserve(out.size() + 4 * t.values.size());
  for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

TensorFile decode_tensor(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 7 && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorKind::InvalidData,
          "tensor: missing KST1 magic");
  require(bytes[4] == kTensorFileVersion, ErrorKind::InvalidData,
          "tensor: unsupported version " + std::to_string(bytes[4]));
  require(bytes[5] <= 1, ErrorKind::InvalidData, "tensor: unknown dtype code " + std::to_string(bytes[5]));
  TensorFile t;
  t.dtype = static_cast<TensorDtype>(bytes[5]);
  const std::size_t rank = bytes[6];
  std::size_t pos = 7;
  require(bytes.size() >= pos + 8 * rank, ErrorKind::InvalidData, "tensor: truncated header");
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i, pos += 8) {
    const std::uint64_t d = get_u64(bytes.data() + pos);
    require(d == 0 || count <= std::numeric_limits<std::uint64_t>::max() / d, ErrorKind::InvalidData,
            "tensor: dims overflow");
    count *= d;
    t.dims.push_back(d);
  }
  const std::uint64_t scalars = count * scalars_per_element(t.dtype);
  require((bytes.size() - pos) / 4 == scalars && (bytes.size() - pos) % 4 == 0, ErrorKind::InvalidData,
          "tensor: payload is " + std::to_string(bytes.size() - pos) + " bytes, expected " +
              std::to_string(scalars * 4));
  t.values.resize(scalars);
  for (std::size_t i = 0; i < scalars; ++i, pos += 4) {
    t.values[i] = std::bit_cast<float>(get_u32(bytes.data() + pos));
  }
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorKind::Io, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::Io, "cannot move " + tmp.string() + " into place");
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_tensor(const std::filesystem::path& path, const TensorFile& t) {
  write_file_atomic(path, encode_tensor(t));
}

TensorFile read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

TensorFile to_tensor(const MultiCoilKSpace& k) {
  TensorFile t;
  t.dtype = TensorDtype::ComplexF32;
  t.dims = {k.coils(), k.rows(), k.cols()};
  t.values.reserve(2 * k.coils() * k.rows() * k.cols());
  for (const auto& g : k.grids()) {
    for (const auto& v : g.data()) {
      t.values.push_back(narrow(v.real()));
      t.values.push_back(narrow(v.imag()));
    }
  }
  return t;
}

MultiCoilKSpace to_multicoil(const TensorFile& t) {
  require(t.dtype == TensorDtype::ComplexF32 && t.dims.size() == 3, ErrorKind::InvalidData,
          "tensor: expected a complex rank-3 tensor (coils x rows x cols)");
  require(t.values.size() == 2 * t.element_count(), ErrorKind::Shape, "tensor: payload length does not match dims");
  MultiCoilKSpace k(t.dims[0], t.dims[1], t.dims[2]);
  std::size_t i = 0;
  for (auto& g : k.grids()) {
    for (auto& v : g.data()) {
      v = cplx(t.values[i], t.values[i + 1]);
      i += 2;
    }
  }
  return k;
}

TensorFile to_tensor(const MagnitudeImage& image) {
  TensorFile t;
  t.dtype = TensorDtype::RealF32;
  t.dims = {image.rows(), image.cols()};
  for (double v : image.values()) t.values.push_back(narrow(v));
  return t;
}

MagnitudeImage to_magnitude(const TensorFile& t) {
  require(t.dtype == TensorDtype::RealF32 && t.dims.size() == 2, ErrorKind::InvalidData,
          "tensor: expected a real rank-2 tensor");
  require(t.values.size() == t.element_count(), ErrorKind::Shape, "tensor: payload length does not match dims");
  return MagnitudeImage(t.dims[0], t.dims[1], std::vector<double>(t.values.begin(), t.values.end()));
}

TensorFile mask_to_tensor(const SamplingMask& mask) {
  TensorFile t;
  t.dtype = TensorDtype::RealF32;
  t.dims = {mask.rows(), mask.cols()};
  for (auto v : mask.values()) t.values.push_back(v ? 1.0f : 0.0f);
  return t;
}

SamplingMask tensor_to_mask(const TensorFile& t, AcsBand acs) {
  require(t.dtype == TensorDtype::RealF32 && t.dims.size() == 2, ErrorKind::InvalidData,
          "mask: expected a real rank-2 tensor");
  require(t.values.size() == t.element_count(), ErrorKind::Shape, "mask: payload length does not match dims");
  std::vector<std::uint8_t> kept(t.values.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    require(t.values[i] == 0.0f || t.values[i] == 1.0f, ErrorKind::InvalidData,
            "mask: entries must be 0 or 1");
    kept[i] = t.values[i] == 1.0f ? 1 : 0;
  }
  return SamplingMask(t.dims[0], t.dims[1], std::move(kept), acs);
}

}  // namespace smsrecon
