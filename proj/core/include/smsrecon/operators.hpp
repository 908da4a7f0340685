#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "smsrecon/kspace.hpp"

namespace smsrecon {

/// Per-slice CAIPI FOV-shift fractions along phase encoding (columns).
/// Slice s is modulated by exp(-2*pi*i * shift[s] * (j - cols/2)) on column j.
class CaipiScheme {
 public:
  CaipiScheme(std::vector<double> shifts, std::size_t rows, std::size_t cols);

  std::size_t b() const noexcept { return shifts_.size(); }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double shift(std::size_t s) const;
  const std::vector<double>& shifts() const noexcept { return shifts_; }

  friend bool operator==(const CaipiScheme&, const CaipiScheme&) = default;

 private:
  std::vector<double> shifts_;
  std::size_t rows_;
  std::size_t cols_;
};

/// Half-open band [begin, end) of phase-encode (column) indices.
struct AcsBand {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const noexcept { return end <= begin; }
  std::size_t size() const noexcept { return empty() ? 0 : end - begin; }
  bool contains(std::size_t col) const noexcept { return col >= begin && col < end; }
  friend bool operator==(const AcsBand&, const AcsBand&) = default;
};

/// Binary Cartesian sampling mask with a fully sampled ACS column band.
class SamplingMask {
 public:
  SamplingMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> kept, AcsBand acs);

  /// Column-uniform mask: `kept_columns[j]` applies to every row.
  static SamplingMask from_columns(std::size_t rows, const std::vector<bool>& kept_columns,
                                   AcsBand acs);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool kept(std::size_t r, std::size_t c) const { return kept_[r * cols_ + c] != 0; }
  const std::vector<std::uint8_t>& values() const noexcept { return kept_; }
  const AcsBand& acs() const noexcept { return acs_; }

  bool all_kept() const noexcept;
  bool none_kept() const noexcept;
  std::size_t kept_count() const noexcept;

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> kept_;
  AcsBand acs_;
};

/// Uniform phase-encode undersampling: column j (outside the ACS band) is kept
/// iff j % period == offset.
struct PhaseEncodePattern {
  std::size_t period = 1;
  std::size_t offset = 0;

  bool sampled(std::size_t col) const noexcept { return col % period == offset; }
};

/// Recovers the uniform pattern of a column-uniform mask, ignoring the ACS
/// band. Throws ErrorKind::UnsupportedMask when the mask is not of that form.
PhaseEncodePattern detect_pattern(const SamplingMask& mask);

enum class Stage { M, U };

char stage_code(Stage stage) noexcept;

/// Stage-specific structured degradation d = terminal state - clean target.
struct Degradation {
  MultiCoilKSpace value;
  Stage stage = Stage::M;
};

MultiCoilKSpace caipi_apply(const MultiCoilKSpace& k, const CaipiScheme& scheme, std::size_t s);
MultiCoilKSpace caipi_inverse(const MultiCoilKSpace& k, const CaipiScheme& scheme, std::size_t s);

/// Sum over slices of the CAIPI-modulated slice k-space.
MultiCoilKSpace sms_collapse(const SliceStack& stack, const CaipiScheme& scheme);

MultiCoilKSpace apply_mask(const MultiCoilKSpace& k, const SamplingMask& mask);
SliceStack apply_mask(const SliceStack& stack, const SamplingMask& mask);

/// Keeps only the ACS columns; zero elsewhere.
MultiCoilKSpace restrict_to_band(const MultiCoilKSpace& k, AcsBand band);

/// Masked collapse plus circular complex Gaussian noise on kept entries.
/// Per-component standard deviation is noise_sigma / sqrt(2), so E|n|^2 = noise_sigma^2.
MultiCoilKSpace measure(const SliceStack& stack, const CaipiScheme& scheme,
                        const SamplingMask& mask, double noise_sigma, std::uint64_t seed);

MultiCoilKSpace target_aligned_collapse(const SliceStack& stack, const CaipiScheme& scheme,
                                        std::size_t s_star);

Degradation degradation_m(const SliceStack& stack, const CaipiScheme& scheme, std::size_t s_star);
Degradation degradation_u(const MultiCoilKSpace& k, const SamplingMask& mask);

}  // namespace smsrecon
