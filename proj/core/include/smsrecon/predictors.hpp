#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "smsrecon/operators.hpp"
#include "smsrecon/trajectory.hpp"

namespace smsrecon {

struct KernelWindow {
  std::size_t rows = 5;
  std::size_t cols = 5;
  friend bool operator==(const KernelWindow&, const KernelWindow&) = default;
};

/// Linear k-space kernel producing one target slice from the target-aligned
/// collapsed data. Under uniform undersampling with period R the kernel holds
/// R tap blocks; column j uses block (j - offset) mod R and reads only sampled
/// source columns.
struct GrappaKernel {
  std::size_t target_slice = 0;
  std::size_t coils_in = 0;
  std::size_t coils_out = 0;
  KernelWindow window;
  PhaseEncodePattern pattern;
  /// taps[block][((out * coils_in + in) * window.rows + dr) * window.cols + dc]
  std::vector<std::vector<cplx>> taps;
  double ridge = 0.0;
  /// Relative calibration residual ||A w - b|| / ||b|| over interior positions.
  double residual = 0.0;

  std::size_t taps_per_block() const noexcept {
    return coils_out * coils_in * window.rows * window.cols;
  }
  cplx& tap(std::size_t block, std::size_t out, std::size_t in, std::size_t dr, std::size_t dc) {
    return taps[block][((out * coils_in + in) * window.rows + dr) * window.cols + dc];
  }
  cplx tap(std::size_t block, std::size_t out, std::size_t in, std::size_t dr, std::size_t dc) const {
    return taps[block][((out * coils_in + in) * window.rows + dr) * window.cols + dc];
  }
};

/// Zero kernel with the given geometry (one block per pattern phase).
GrappaKernel make_kernel(std::size_t target_slice, std::size_t coils_in, std::size_t coils_out,
                         KernelWindow window, PhaseEncodePattern pattern = {});

/// Identity kernel: unit center tap from each coil to itself.
GrappaKernel identity_kernel(std::size_t coils, KernelWindow window = {});

struct CalibrationOptions {
  KernelWindow window;
  /// Relative ridge: the applied weight is ridge * mean(diag(A^H A)).
  double ridge = 1e-4;
  PhaseEncodePattern pattern;
};

/// Calibrates one kernel per slice from fully sampled ACS columns.
/// `collapsed` is the (unaligned) collapsed k-space and `slices` the per-slice
/// reference; only columns inside `band` are read.
std::vector<GrappaKernel> grappa_calibrate(const MultiCoilKSpace& collapsed,
                                           const SliceStack& slices, const CaipiScheme& scheme,
                                           AcsBand band, const CalibrationOptions& options);

/// Zero-padded windowed application. Source columns outside the kernel's
/// sampling pattern are ignored.
MultiCoilKSpace slice_grappa_apply(const MultiCoilKSpace& aligned, const GrappaKernel& kernel);

/// Scan-specific in-plane completion of a single slice: calibrates on the ACS
/// band of `k` (sampled-pattern source, full target) and fills unacquired
/// entries; acquired entries of `k` are kept.
MultiCoilKSpace inplane_complete(const MultiCoilKSpace& k, const SamplingMask& mask,
                                 KernelWindow window, double ridge);

/// Slice-GRAPPA estimate on the ACS band of the target-aligned measurement.
std::vector<MultiCoilKSpace> low_frequency_anchor(const MultiCoilKSpace& y,
                                                  const SamplingMask& mask,
                                                  const CaipiScheme& scheme,
                                                  const std::vector<GrappaKernel>& kernels);

/// Ground truth handed to the oracle. For stage M with an undersampling mask
/// the degradation is taken against the masked slices.
struct OracleTruth {
  std::shared_ptr<const SliceStack> stack;
  std::optional<CaipiScheme> scheme;
  std::optional<SamplingMask> mask;
  std::size_t target_slice = 0;
};

Degradation oracle_predict(const TrajectoryState& state, const OracleTruth& truth);
Predictor make_oracle_predictor(OracleTruth truth);

/// (x_t - k_est) / alpha_t; rejects alpha_t < eps.
Degradation estimator_to_degradation(const TrajectoryState& state, const MultiCoilKSpace& k_est,
                                     const Schedule& sched, double eps = 1e-6);

/// Predictor wrapping a fixed clean-target estimate.
Predictor make_estimate_predictor(MultiCoilKSpace k_est, double eps = 1e-6);

/// Predictor returning zero degradation (freezes the chain).
Predictor make_zero_predictor();

}  // namespace smsrecon
