#pragma once

#include <cstddef>
#include <vector>

#include "smsrecon/predictors.hpp"

namespace smsrecon {

/// Complex image-domain coil maps, one multi-coil set per slice. Per pixel the
/// root-sum-of-squares over coils is 1, or every coil is 0.
class CoilSensitivitySet {
 public:
  CoilSensitivitySet() = default;
  explicit CoilSensitivitySet(std::vector<MultiCoilKSpace> maps, double tolerance = 1e-9);

  /// Rescales raw maps to unit per-pixel RSS (pixels with zero RSS stay zero).
  static CoilSensitivitySet normalized(std::vector<MultiCoilKSpace> raw);

  std::size_t b() const noexcept { return maps_.size(); }
  const MultiCoilKSpace& slice(std::size_t s) const { return maps_[s]; }
  const std::vector<MultiCoilKSpace>& maps() const noexcept { return maps_; }

 private:
  std::vector<MultiCoilKSpace> maps_;
};

/// Relative threshold (of the per-slice maximum RSS) below which maps are zero.
inline constexpr double kSensitivityThreshold = 0.05;

MultiCoilKSpace zero_fill_reconstruct(const MultiCoilKSpace& y, const CaipiScheme& scheme,
                                      std::size_t s_star);

/// Image-domain SMS-SENSE unaliasing. Minimizes ||y - P F B rho||^2 +
/// tikhonov * ||rho||^2 (absolute weight) one aliased pixel group at a time.
SliceStack sense_reconstruct(const MultiCoilKSpace& y, const CaipiScheme& scheme,
                             const SamplingMask& mask, const CoilSensitivitySet& sens,
                             double tikhonov);

/// Maps from raised-cosine-tapered ACS columns of each slice's reference data.
CoilSensitivitySet estimate_sensitivities(const SliceStack& acs_slices, AcsBand band);

/// Slice-GRAPPA separation followed by scan-specific in-plane GRAPPA; acquired
/// entries keep the separated values.
std::vector<MultiCoilKSpace> slice_grappa_reconstruct(const MultiCoilKSpace& y,
                                                      const CaipiScheme& scheme,
                                                      const SamplingMask& mask,
                                                      const std::vector<GrappaKernel>& kernels,
                                                      KernelWindow inplane_window = {},
                                                      double inplane_ridge = 1e-4);

}  // namespace smsrecon
