#include "smsrecon/kspace.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

namespace smsrecon {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidData: return "invalid-data";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Index: return "index";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Calibration: return "calibration";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::UnsupportedMask: return "unsupported-mask";
    case ErrorKind::StepUnderflow: return "step-underflow";
    case ErrorKind::NearZeroAlpha: return "near-zero-alpha";
    case ErrorKind::Reconstruction: return "reconstruction";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Io: return "io";
    case ErrorKind::Evaluation: return "evaluation";
  }
  return "unknown";
}

ComplexGrid::ComplexGrid(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

ComplexGrid::ComplexGrid(std::size_t rows, std::size_t cols, std::vector<cplx> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, ErrorKind::Shape,
          "ComplexGrid: data length " + std::to_string(data_.size()) + " != " +
              std::to_string(rows_) + "x" + std::to_string(cols_));
}

MultiCoilKSpace::MultiCoilKSpace(std::size_t coils, std::size_t rows, std::size_t cols)
    : grids_(coils, ComplexGrid(rows, cols)) {}

MultiCoilKSpace::MultiCoilKSpace(std::vector<ComplexGrid> grids) : grids_(std::move(grids)) {
  for (const auto& g : grids_) {
    require(g.same_shape(grids_.front()), ErrorKind::Shape,
            "MultiCoilKSpace: coil grids differ in shape");
  }
}

SliceStack::SliceStack(std::vector<MultiCoilKSpace> slices) : slices_(std::move(slices)) {
  require(!slices_.empty(), ErrorKind::Argument, "SliceStack: multiband factor must be >= 1");
  for (const auto& s : slices_) {
    require(s.same_shape(slices_.front()), ErrorKind::Shape,
            "SliceStack: slices differ in coil count or grid shape");
  }
}

MagnitudeImage::MagnitudeImage(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

MagnitudeImage::MagnitudeImage(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(values_.size() == rows_ * cols_, ErrorKind::Shape, "MagnitudeImage: data length mismatch");
  for (double v : values_) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidData,
            "MagnitudeImage: values must be finite and nonnegative");
  }
}

void require_same_shape(const MultiCoilKSpace& a, const MultiCoilKSpace& b, const char* where) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::Shape, std::string(where) + ": shape mismatch (" + std::to_string(a.coils()) +
                               "x" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                               " vs " + std::to_string(b.coils()) + "x" + std::to_string(b.rows()) +
                               "x" + std::to_string(b.cols()) + ")");
  }
}

namespace {

template <typename Op>
MultiCoilKSpace zip(const MultiCoilKSpace& a, const MultiCoilKSpace& b, const char* where, Op op) {
  require_same_shape(a, b, where);
  MultiCoilKSpace out = a;
  for (std::size_t c = 0; c < a.coils(); ++c) {
    auto dst = out.coil(c).data();
    auto src = b.coil(c).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = op(dst[i], src[i]);
  }
  return out;
}

}  // namespace

MultiCoilKSpace operator+(const MultiCoilKSpace& a, const MultiCoilKSpace& b) {
  return zip(a, b, "operator+", [](cplx x, cplx y) { return x + y; });
}

MultiCoilKSpace operator-(const MultiCoilKSpace& a, const MultiCoilKSpace& b) {
  return zip(a, b, "operator-", [](cplx x, cplx y) { return x - y; });
}

MultiCoilKSpace operator*(cplx scale, const MultiCoilKSpace& a) {
  MultiCoilKSpace out = a;
  for (auto& g : out.grids()) {
    for (auto& v : g.data()) v *= scale;
  }
  return out;
}

MultiCoilKSpace& operator+=(MultiCoilKSpace& a, const MultiCoilKSpace& b) {
  require_same_shape(a, b, "operator+=");
  for (std::size_t c = 0; c < a.coils(); ++c) {
    auto dst = a.coil(c).data();
    auto src = b.coil(c).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return a;
}

MultiCoilKSpace& operator-=(MultiCoilKSpace& a, const MultiCoilKSpace& b) {
  require_same_shape(a, b, "operator-=");
  for (std::size_t c = 0; c < a.coils(); ++c) {
    auto dst = a.coil(c).data();
    auto src = b.coil(c).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  }
  return a;
}

MultiCoilKSpace axpy(const MultiCoilKSpace& a, double scale, const MultiCoilKSpace& b) {
  return zip(a, b, "axpy", [scale](cplx x, cplx y) { return x + scale * y; });
}

double squared_norm(const ComplexGrid& g) noexcept {
  double acc = 0.0;
  for (const auto& v : g.data()) acc += std::norm(v);
  return acc;
}

double squared_norm(const MultiCoilKSpace& k) noexcept {
  double acc = 0.0;
  for (const auto& g : k.grids()) acc += squared_norm(g);
  return acc;
}

double norm(const MultiCoilKSpace& k) noexcept { return std::sqrt(squared_norm(k)); }

bool all_finite(const MultiCoilKSpace& k) noexcept {
  for (const auto& g : k.grids()) {
    for (const auto& v : g.data()) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
  }
  return true;
}

// --- Fourier transforms ------------------------------------------------------

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t rows, std::size_t cols, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(rows, cols, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cplx> in(rows * cols), out(rows * cols);
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols),
                                      reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) fail(ErrorKind::Argument, "fft: could not plan transform");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void require_finite(const ComplexGrid& g, const char* where) {
  for (const auto& v : g.data()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      fail(ErrorKind::InvalidData, std::string(where) + ": non-finite input");
    }
  }
}

ComplexGrid centered_transform(const ComplexGrid& in, int sign, const char* where) {
  const std::size_t rows = in.rows();
  const std::size_t cols = in.cols();
  require(rows >= 1 && cols >= 1, ErrorKind::Argument, std::string(where) + ": empty grid");
  require_finite(in, where);
  const std::size_t cr = rows / 2;
  const std::size_t cc = cols / 2;

  // ifftshift: move the centered origin to index 0.
  std::vector<cplx> shifted(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t sr = (r + cr) % rows;
    for (std::size_t c = 0; c < cols; ++c) {
      shifted[r * cols + c] = in(sr, (c + cc) % cols);
    }
  }
  std::vector<cplx> spectrum(rows * cols);
  fftw_execute_dft(plan_cache().get(rows, cols, sign),
                   reinterpret_cast<fftw_complex*>(shifted.data()),
                   reinterpret_cast<fftw_complex*>(spectrum.data()));

  // fftshift back, with orthonormal scaling.
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  ComplexGrid out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t sr = (r + cr) % rows;
    for (std::size_t c = 0; c < cols; ++c) {
      out(sr, (c + cc) % cols) = spectrum[r * cols + c] * scale;
    }
  }
  return out;
}

}  // namespace

ComplexGrid fft2_centered(const ComplexGrid& image) {
  return centered_transform(image, FFTW_FORWARD, "fft2_centered");
}

ComplexGrid ifft2_centered(const ComplexGrid& kspace) {
  return centered_transform(kspace, FFTW_BACKWARD, "ifft2_centered");
}

MultiCoilKSpace fft2_centered(const MultiCoilKSpace& images) {
  std::vector<ComplexGrid> out;
  out.reserve(images.coils());
  for (const auto& g : images.grids()) out.push_back(fft2_centered(g));
  return MultiCoilKSpace(std::move(out));
}

MultiCoilKSpace ifft2_centered(const MultiCoilKSpace& kspace) {
  std::vector<ComplexGrid> out;
  out.reserve(kspace.coils());
  for (const auto& g : kspace.grids()) out.push_back(ifft2_centered(g));
  return MultiCoilKSpace(std::move(out));
}

MagnitudeImage rss_combine(const MultiCoilKSpace& kspace) {
  require(kspace.coils() >= 1, ErrorKind::Argument, "rss_combine: need at least one coil");
  const std::size_t n = kspace.rows() * kspace.cols();
  std::vector<double> acc(n, 0.0);
  for (const auto& g : kspace.grids()) {
    const ComplexGrid img = ifft2_centered(g);
    auto px = img.data();
    for (std::size_t i = 0; i < n; ++i) acc[i] += std::norm(px[i]);
  }
  for (auto& v : acc) v = std::sqrt(v);
  return MagnitudeImage(kspace.rows(), kspace.cols(), std::move(acc));
}

std::pair<MagnitudeImage, double> normalize_magnitude(const MagnitudeImage& image) {
  double peak = 0.0;
  for (double v : image.values()) peak = std::max(peak, v);
  require(peak > 0.0, ErrorKind::DegenerateInput, "normalize_magnitude: image is all zero");
  return {scale_magnitude(image, peak), peak};
}

MagnitudeImage scale_magnitude(const MagnitudeImage& image, double divisor) {
  require(divisor > 0.0 && std::isfinite(divisor), ErrorKind::Argument,
          "scale_magnitude: divisor must be positive and finite");
  std::vector<double> out(image.values().begin(), image.values().end());
  for (auto& v : out) v /= divisor;
  return MagnitudeImage(image.rows(), image.cols(), std::move(out));
}

}  // namespace smsrecon
