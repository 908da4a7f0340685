#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "gen.hpp"
#include "smsrecon/kspace.hpp"

using namespace smsrecon;

namespace {

// Direct O(N^2) centered orthonormal DFT, independent of the FFTW path.
ComplexGrid naive_dft(const ComplexGrid& img, int sign) {
  const std::size_t rows = img.rows();
  const std::size_t cols = img.cols();
  const double cr = static_cast<double>(rows / 2);
  const double cc = static_cast<double>(cols / 2);
  ComplexGrid out(rows, cols);
  for (std::size_t u = 0; u < rows; ++u) {
    for (std::size_t v = 0; v < cols; ++v) {
      cplx acc = 0.0;
      for (std::size_t x = 0; x < rows; ++x) {
        for (std::size_t y = 0; y < cols; ++y) {
          const double phase = sign * 2.0 * std::numbers::pi *
                               ((u - cr) * (x - cr) / static_cast<double>(rows) +
                                (v - cc) * (y - cc) / static_cast<double>(cols));
          acc += img(x, y) * std::polar(1.0, phase);
        }
      }
      out(u, v) = acc / std::sqrt(static_cast<double>(rows * cols));
    }
  }
  return out;
}

double max_diff(const ComplexGrid& a, const ComplexGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST(Fft, MatchesNaiveDftOnOddAndEvenSizes) {
  testgen::Rng rng(11);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{8, 8}, {7, 10}, {5, 3}, {1, 6}}) {
    const ComplexGrid img = testgen::grid(rng, r, c);
    EXPECT_LT(max_diff(fft2_centered(img), naive_dft(img, -1)), 1e-12) << r << "x" << c;
    EXPECT_LT(max_diff(ifft2_centered(img), naive_dft(img, +1)), 1e-12) << r << "x" << c;
  }
}

TEST(Fft, DeltaAtCenterIsFlat) {
  ComplexGrid img(6, 9);
  img(3, 4) = 1.0;
  const ComplexGrid k = fft2_centered(img);
  for (const auto& v : k.data()) EXPECT_NEAR(std::abs(v - cplx(1.0 / std::sqrt(54.0), 0.0)), 0.0, 1e-14);
}

TEST(Fft, UnitarityAndInverseProperty) {
  testgen::Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = testgen::kspace(rng, rng.index(1, 3), rng.index(1, 24), rng.index(1, 24));
    const auto img = ifft2_centered(k);
    EXPECT_NEAR(squared_norm(img), squared_norm(k), 1e-10 * squared_norm(k)) << "seed trial " << trial;
    EXPECT_LT(testgen::max_abs_diff(fft2_centered(img), k), 1e-12);
  }
}

TEST(Fft, RejectsNonFiniteInput) {
  ComplexGrid img(4, 4);
  img(1, 1) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  try {
    (void)fft2_centered(img);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidData);
  }
}

TEST(KSpaceArithmetic, ShapeMismatchRaises) {
  MultiCoilKSpace a(2, 4, 4);
  MultiCoilKSpace b(2, 4, 5);
  EXPECT_THROW((void)(a + b), Error);
  EXPECT_THROW(a -= b, Error);
  EXPECT_THROW((void)axpy(a, 1.0, b), Error);
}

TEST(KSpaceArithmetic, AxpyAndScale) {
  testgen::Rng rng(13);
  const auto a = testgen::kspace(rng, 2, 3, 4);
  const auto b = testgen::kspace(rng, 2, 3, 4);
  const auto r = axpy(a, 0.5, b);
  const auto expect = a + cplx(0.5, 0.0) * b;
  EXPECT_LT(testgen::max_abs_diff(r, expect), 1e-15);
}

TEST(KSpaceTypes, ConstructorsValidate) {
  EXPECT_THROW(ComplexGrid(2, 2, std::vector<cplx>(3)), Error);
  EXPECT_THROW(MultiCoilKSpace(std::vector<ComplexGrid>{ComplexGrid(2, 2), ComplexGrid(2, 3)}), Error);
  EXPECT_THROW(SliceStack(std::vector<MultiCoilKSpace>{}), Error);
  EXPECT_THROW(MagnitudeImage(1, 2, {1.0, -1.0}), Error);
}

TEST(Rss, SingleCoilIsMagnitudeOfImage) {
  testgen::Rng rng(14);
  const auto k = testgen::kspace(rng, 1, 8, 8);
  const auto img = ifft2_centered(k.coil(0));
  const auto rss = rss_combine(k);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(rss.values()[i], std::abs(img.data()[i]), 1e-14);
}

TEST(Rss, NormalizeAndScale) {
  MagnitudeImage img(1, 3, {0.5, 2.0, 1.0});
  auto [n, scale] = normalize_magnitude(img);
  EXPECT_EQ(scale, 2.0);
  EXPECT_EQ(n.values()[1], 1.0);
  EXPECT_EQ(scale_magnitude(img, 4.0).values()[0], 0.125);
  try {
    (void)normalize_magnitude(MagnitudeImage(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
  }
}
