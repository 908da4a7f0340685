#pragma once

// Planted slice-GRAPPA kernels: data generated by known kernels, so that
// calibration must recover them exactly.

#include <cmath>
#include <utility>
#include <vector>

#include "gen.hpp"
#include "smsrecon/predictors.hpp"

namespace testgen {

using namespace smsrecon;

inline GrappaKernel random_kernel(Rng& rng, std::size_t target, std::size_t coils, KernelWindow w,
                                  PhaseEncodePattern p) {
  GrappaKernel k = make_kernel(target, coils, coils, w, p);
  const std::size_t hc = w.cols / 2;
  for (std::size_t blk = 0; blk < p.period; ++blk) {
    // Columns of this block: j = offset + blk (mod period). Taps reading unsampled
    // source columns stay zero, matching what calibration can identify.
    const std::size_t rep = p.offset + blk + p.period * (w.cols + 1);
    for (std::size_t o = 0; o < coils; ++o) {
      for (std::size_t in = 0; in < coils; ++in) {
        for (std::size_t dr = 0; dr < w.rows; ++dr) {
          for (std::size_t dc = 0; dc < w.cols; ++dc) {
            if (p.sampled(rep + dc - hc)) k.tap(blk, o, in, dr, dc) = 0.3 * rng.complex();
          }
        }
      }
    }
  }
  return k;
}

inline double kernel_relative_error(const GrappaKernel& a, const GrappaKernel& ref) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t blk = 0; blk < ref.taps.size(); ++blk) {
    for (std::size_t i = 0; i < ref.taps[blk].size(); ++i) {
      num += std::norm(a.taps[blk][i] - ref.taps[blk][i]);
      den += std::norm(ref.taps[blk][i]);
    }
  }
  return std::sqrt(num / den);
}

struct Planted {
  MultiCoilKSpace collapsed;
  SliceStack slices;
  CaipiScheme scheme;
  std::vector<GrappaKernel> kernels;
};

inline Planted plant(std::uint64_t seed, PhaseEncodePattern p, std::vector<double> shifts) {
  Rng rng(seed);
  const std::size_t rows = 16;
  const std::size_t cols = 32;
  const std::size_t coils = 2;
  const KernelWindow w{3, 3};
  const CaipiScheme scheme(std::move(shifts), rows, cols);
  const auto collapsed = kspace(rng, coils, rows, cols);
  std::vector<MultiCoilKSpace> slices;
  std::vector<GrappaKernel> kernels;
  for (std::size_t s = 0; s < scheme.b(); ++s) {
    kernels.push_back(random_kernel(rng, s, coils, w, p));
    slices.push_back(slice_grappa_apply(caipi_inverse(collapsed, scheme, s), kernels.back()));
  }
  return {collapsed, SliceStack(std::move(slices)), scheme, std::move(kernels)};
}

}  // namespace testgen
