#include "smsrecon/operators.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace smsrecon {

CaipiScheme::CaipiScheme(std::vector<double> shifts, std::size_t rows, std::size_t cols)
    : shifts_(std::move(shifts)), rows_(rows), cols_(cols) {
  require(!shifts_.empty(), ErrorKind::Argument, "CaipiScheme: need at least one slice");
  require(rows_ >= 1 && cols_ >= 1, ErrorKind::Argument, "CaipiScheme: empty grid");
  for (double f : shifts_) {
    require(std::isfinite(f) && f > -1.0 && f <= 1.0, ErrorKind::Argument,
            "CaipiScheme: shift fractions must lie in (-1, 1]");
  }
}

double CaipiScheme::shift(std::size_t s) const {
  require(s < shifts_.size(), ErrorKind::Index,
          "CaipiScheme: slice index " + std::to_string(s) + " out of range");
  return shifts_[s];
}

SamplingMask::SamplingMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> kept,
                           AcsBand acs)
    : rows_(rows), cols_(cols), kept_(std::move(kept)), acs_(acs) {
  require(kept_.size() == rows_ * cols_, ErrorKind::Shape, "SamplingMask: data length mismatch");
  for (auto v : kept_) {
    require(v == 0 || v == 1, ErrorKind::InvalidData, "SamplingMask: values must be 0 or 1");
  }
  require(acs_.empty() || acs_.end <= cols_, ErrorKind::Argument,
          "SamplingMask: ACS band exceeds the phase-encode extent");
  for (std::size_t j = acs_.begin; j < acs_.end; ++j) {
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!this->kept(r, j)) {
        fail(ErrorKind::InvalidData, "SamplingMask: ACS line " + std::to_string(j) + " is not fully kept");
      }
    }
  }
}

SamplingMask SamplingMask::from_columns(std::size_t rows, const std::vector<bool>& kept_columns,
                                        AcsBand acs) {
  const std::size_t cols = kept_columns.size();
  std::vector<std::uint8_t> kept(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) kept[r * cols + j] = kept_columns[j] ? 1 : 0;
  }
  return SamplingMask(rows, cols, std::move(kept), acs);
}

bool SamplingMask::all_kept() const noexcept {
  for (auto v : kept_) {
    if (v == 0) return false;
  }
  return true;
}

bool SamplingMask::none_kept() const noexcept {
  for (auto v : kept_) {
    if (v != 0) return false;
  }
  return true;
}

std::size_t SamplingMask::kept_count() const noexcept {
  std::size_t n = 0;
  for (auto v : kept_) n += v;
  return n;
}

PhaseEncodePattern detect_pattern(const SamplingMask& mask) {
  const std::size_t rows = mask.rows();
  const std::size_t cols = mask.cols();
  std::vector<bool> column(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    column[j] = mask.kept(0, j);
    for (std::size_t r = 1; r < rows; ++r) {
      if (mask.kept(r, j) != column[j]) {
        fail(ErrorKind::UnsupportedMask, "mask is not uniform along frequency encoding");
      }
    }
  }
  const AcsBand& acs = mask.acs();
  std::size_t first = cols;
  for (std::size_t j = 0; j < cols; ++j) {
    if (!acs.contains(j) && column[j]) {
      first = j;
      break;
    }
  }
  if (first == cols) {
    // Nothing outside the band: only a fully covering band is a valid pattern.
    bool outside_exists = false;
    for (std::size_t j = 0; j < cols; ++j) outside_exists = outside_exists || !acs.contains(j);
    if (!outside_exists) return {1, 0};
    fail(ErrorKind::UnsupportedMask, "mask keeps no phase-encode lines outside the ACS band");
  }
  for (std::size_t period = 1; period <= cols; ++period) {
    const PhaseEncodePattern p{period, first % period};
    bool match = true;
    for (std::size_t j = 0; j < cols && match; ++j) {
      if (!acs.contains(j) && column[j] != p.sampled(j)) match = false;
    }
    if (match) return p;
  }
  fail(ErrorKind::UnsupportedMask, "mask is not a uniform phase-encode pattern");
}

char stage_code(Stage stage) noexcept { return stage == Stage::M ? 'M' : 'U'; }

namespace {

void require_scheme_shape(const MultiCoilKSpace& k, const CaipiScheme& scheme, const char* where) {
  if (k.rows() != scheme.rows() || k.cols() != scheme.cols()) {
    fail(ErrorKind::Shape, std::string(where) + ": grid " + std::to_string(k.rows()) + "x" +
                               std::to_string(k.cols()) + " does not match scheme " +
                               std::to_string(scheme.rows()) + "x" + std::to_string(scheme.cols()));
  }
}

void require_mask_shape(const MultiCoilKSpace& k, const SamplingMask& mask, const char* where) {
  if (k.rows() != mask.rows() || k.cols() != mask.cols()) {
    fail(ErrorKind::Shape, std::string(where) + ": grid does not match mask shape");
  }
}

MultiCoilKSpace phase_ramp(const MultiCoilKSpace& k, double fraction) {
  MultiCoilKSpace out = k;
  if (fraction == 0.0) return out;
  const std::size_t cols = k.cols();
  const auto center = static_cast<double>(cols / 2);
  std::vector<cplx> ramp(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    ramp[j] = std::polar(1.0, -2.0 * std::numbers::pi * fraction * (static_cast<double>(j) - center));
  }
  for (auto& g : out.grids()) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t j = 0; j < cols; ++j) g(r, j) *= ramp[j];
    }
  }
  return out;
}

}  // namespace

MultiCoilKSpace caipi_apply(const MultiCoilKSpace& k, const CaipiScheme& scheme, std::size_t s) {
  require_scheme_shape(k, scheme, "caipi_apply");
  return phase_ramp(k, scheme.shift(s));
}

MultiCoilKSpace caipi_inverse(const MultiCoilKSpace& k, const CaipiScheme& scheme, std::size_t s) {
  require_scheme_shape(k, scheme, "caipi_inverse");
  return phase_ramp(k, -scheme.shift(s));
}

MultiCoilKSpace sms_collapse(const SliceStack& stack, const CaipiScheme& scheme) {
  require(stack.b() == scheme.b(), ErrorKind::Shape,
          "sms_collapse: stack has " + std::to_string(stack.b()) + " slices, scheme has " +
              std::to_string(scheme.b()));
  MultiCoilKSpace sum = caipi_apply(stack.slice(0), scheme, 0);
  for (std::size_t s = 1; s < stack.b(); ++s) sum += caipi_apply(stack.slice(s), scheme, s);
  return sum;
}

MultiCoilKSpace apply_mask(const MultiCoilKSpace& k, const SamplingMask& mask) {
  require_mask_shape(k, mask, "apply_mask");
  MultiCoilKSpace out = k;
  for (auto& g : out.grids()) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t j = 0; j < g.cols(); ++j) {
        if (!mask.kept(r, j)) g(r, j) = cplx(0.0, 0.0);
      }
    }
  }
  return out;
}

SliceStack apply_mask(const SliceStack& stack, const SamplingMask& mask) {
  std::vector<MultiCoilKSpace> slices;
  slices.reserve(stack.b());
  for (const auto& s : stack.slices()) slices.push_back(apply_mask(s, mask));
  return SliceStack(std::move(slices));
}

MultiCoilKSpace restrict_to_band(const MultiCoilKSpace& k, AcsBand band) {
  MultiCoilKSpace out = k;
  for (auto& g : out.grids()) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t j = 0; j < g.cols(); ++j) {
        if (!band.contains(j)) g(r, j) = cplx(0.0, 0.0);
      }
    }
  }
  return out;
}

MultiCoilKSpace measure(const SliceStack& stack, const CaipiScheme& scheme,
                        const SamplingMask& mask, double noise_sigma, std::uint64_t seed) {
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorKind::Argument,
          "measure: noise_sigma must be nonnegative");
  MultiCoilKSpace y = apply_mask(sms_collapse(stack, scheme), mask);
  if (noise_sigma == 0.0) return y;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise_sigma / std::sqrt(2.0));
  for (auto& g : y.grids()) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t j = 0; j < g.cols(); ++j) {
        if (!mask.kept(r, j)) continue;
        const double re = gauss(rng);
        const double im = gauss(rng);
        g(r, j) += cplx(re, im);
      }
    }
  }
  return y;
}

MultiCoilKSpace target_aligned_collapse(const SliceStack& stack, const CaipiScheme& scheme,
                                        std::size_t s_star) {
  require(s_star < stack.b(), ErrorKind::Index,
          "target_aligned_collapse: slice index " + std::to_string(s_star) + " out of range");
  return caipi_inverse(sms_collapse(stack, scheme), scheme, s_star);
}

Degradation degradation_m(const SliceStack& stack, const CaipiScheme& scheme, std::size_t s_star) {
  require(s_star < stack.b(), ErrorKind::Index,
          "degradation_m: slice index " + std::to_string(s_star) + " out of range");
  return {target_aligned_collapse(stack, scheme, s_star) - stack.slice(s_star), Stage::M};
}

Degradation degradation_u(const MultiCoilKSpace& k, const SamplingMask& mask) {
  require_mask_shape(k, mask, "degradation_u");
  MultiCoilKSpace d(k.coils(), k.rows(), k.cols());
  for (std::size_t c = 0; c < k.coils(); ++c) {
    for (std::size_t r = 0; r < k.rows(); ++r) {
      for (std::size_t j = 0; j < k.cols(); ++j) {
        if (!mask.kept(r, j)) d.coil(c)(r, j) = -k.coil(c)(r, j);
      }
    }
  }
  return {std::move(d), Stage::U};
}

}  // namespace smsrecon
