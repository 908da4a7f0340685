#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "smsrecon/error.hpp"

namespace smsrecon {

using cplx = std::complex<double>;

/// Dense row-major complex grid. Rows run along frequency encoding, columns
/// along phase encoding.
class ComplexGrid {
 public:
  ComplexGrid() = default;
  ComplexGrid(std::size_t rows, std::size_t cols);
  ComplexGrid(std::size_t rows, std::size_t cols, std::vector<cplx> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  bool same_shape(const ComplexGrid& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const ComplexGrid&, const ComplexGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

/// One complex grid per receiver coil, all of identical shape.
class MultiCoilKSpace {
 public:
  MultiCoilKSpace() = default;
  MultiCoilKSpace(std::size_t coils, std::size_t rows, std::size_t cols);
  explicit MultiCoilKSpace(std::vector<ComplexGrid> grids);

  std::size_t coils() const noexcept { return grids_.size(); }
  std::size_t rows() const noexcept { return grids_.empty() ? 0 : grids_.front().rows(); }
  std::size_t cols() const noexcept { return grids_.empty() ? 0 : grids_.front().cols(); }

  ComplexGrid& coil(std::size_t c) { return grids_[c]; }
  const ComplexGrid& coil(std::size_t c) const { return grids_[c]; }
  std::span<ComplexGrid> grids() noexcept { return grids_; }
  std::span<const ComplexGrid> grids() const noexcept { return grids_; }

  bool same_shape(const MultiCoilKSpace& other) const noexcept {
    return coils() == other.coils() && rows() == other.rows() && cols() == other.cols();
  }

  friend bool operator==(const MultiCoilKSpace&, const MultiCoilKSpace&) = default;

 private:
  std::vector<ComplexGrid> grids_;
};

/// B simultaneously excited slices sharing coil count and grid shape.
class SliceStack {
 public:
  SliceStack() = default;
  explicit SliceStack(std::vector<MultiCoilKSpace> slices);

  std::size_t b() const noexcept { return slices_.size(); }
  std::size_t coils() const noexcept { return slices_.front().coils(); }
  std::size_t rows() const noexcept { return slices_.front().rows(); }
  std::size_t cols() const noexcept { return slices_.front().cols(); }

  MultiCoilKSpace& slice(std::size_t s) { return slices_[s]; }
  const MultiCoilKSpace& slice(std::size_t s) const { return slices_[s]; }
  std::span<const MultiCoilKSpace> slices() const noexcept { return slices_; }

  friend bool operator==(const SliceStack&, const SliceStack&) = default;

 private:
  std::vector<MultiCoilKSpace> slices_;
};

/// Nonnegative real image, row-major.
class MagnitudeImage {
 public:
  MagnitudeImage() = default;
  MagnitudeImage(std::size_t rows, std::size_t cols);
  MagnitudeImage(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const MagnitudeImage& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const MagnitudeImage&, const MagnitudeImage&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Elementwise arithmetic. Shapes must agree; a mismatch raises ErrorKind::Shape.
MultiCoilKSpace operator+(const MultiCoilKSpace& a, const MultiCoilKSpace& b);
MultiCoilKSpace operator-(const MultiCoilKSpace& a, const MultiCoilKSpace& b);
MultiCoilKSpace operator*(cplx scale, const MultiCoilKSpace& a);
MultiCoilKSpace& operator+=(MultiCoilKSpace& a, const MultiCoilKSpace& b);
MultiCoilKSpace& operator-=(MultiCoilKSpace& a, const MultiCoilKSpace& b);

/// a + scale * b
MultiCoilKSpace axpy(const MultiCoilKSpace& a, double scale, const MultiCoilKSpace& b);

double squared_norm(const ComplexGrid& g) noexcept;
double squared_norm(const MultiCoilKSpace& k) noexcept;
double norm(const MultiCoilKSpace& k) noexcept;
bool all_finite(const MultiCoilKSpace& k) noexcept;
void require_same_shape(const MultiCoilKSpace& a, const MultiCoilKSpace& b, const char* where);

/// Centered, orthonormal 2-D DFT. DC sits at (rows/2, cols/2) (integer division).
ComplexGrid fft2_centered(const ComplexGrid& image);
ComplexGrid ifft2_centered(const ComplexGrid& kspace);
MultiCoilKSpace fft2_centered(const MultiCoilKSpace& images);
MultiCoilKSpace ifft2_centered(const MultiCoilKSpace& kspace);

/// Per-coil inverse transform followed by root-sum-of-squares.
MagnitudeImage rss_combine(const MultiCoilKSpace& kspace);

/// Divides by the image maximum; returns the normalized image and the divisor.
std::pair<MagnitudeImage, double> normalize_magnitude(const MagnitudeImage& image);

/// Divides by a caller-supplied positive scale (used to apply a reference scale
/// to a reconstruction).
MagnitudeImage scale_magnitude(const MagnitudeImage& image, double divisor);

}  // namespace smsrecon
