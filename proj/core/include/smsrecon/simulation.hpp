#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "smsrecon/baselines.hpp"

namespace smsrecon {

struct PhantomSpec {
  std::size_t rows = 96;
  std::size_t cols = 96;
  std::size_t b = 3;
  std::size_t coils = 4;
  std::uint64_t variant_seed = 1;
  double noise_sigma = 0.0;

  void validate() const;
};

/// Real-valued ellipse phantom of one slice, rotated by `rotation_deg` and
/// scaled by `scale` about the image center.
std::vector<double> ellipse_phantom(std::size_t rows, std::size_t cols, double scale,
                                    double rotation_deg);

/// Per-slice geometric perturbation drawn from the variant seed.
struct SliceVariation {
  double scale = 1.0;
  double rotation_deg = 0.0;
};
SliceVariation slice_variation(std::uint64_t variant_seed, std::size_t slice);

/// Smooth complex coil maps for one slice with unit per-pixel RSS.
MultiCoilKSpace synthetic_coil_maps(std::size_t coils, std::size_t rows, std::size_t cols,
                                    std::size_t slice);

/// Multi-coil k-space of every slice plus the maps that produced it.
std::pair<SliceStack, CoilSensitivitySet> shepp_logan_stack(const PhantomSpec& spec);

/// b = 1, 2, 3 use the standard shifts. Other b need `generic`, which spaces
/// slices by 1/b and wraps shifts into (-1/2, 1/2].
CaipiScheme standard_scheme(std::size_t b, std::size_t rows, std::size_t cols,
                            bool generic = false);

/// Every r-th column from column 0 plus a centered band of `acs_lines`.
SamplingMask uniform_mask(std::size_t rows, std::size_t cols, std::size_t r,
                          std::size_t acs_lines);

AcsBand centered_band(std::size_t cols, std::size_t lines);

struct DatasetCase {
  SliceStack truth;
  CaipiScheme scheme;
  SamplingMask mask;
  MultiCoilKSpace measurement;
  CoilSensitivitySet sensitivities;
  PhantomSpec spec;
  std::size_t r = 1;
  std::size_t acs_lines = 0;
  std::uint64_t noise_seed = 0;

  /// Flat key/value record sufficient to rebuild the case.
  std::map<std::string, std::string> provenance() const;
  /// Kept fraction of the phase-encode lines, inverted (ACS included).
  double net_acceleration() const;
};

DatasetCase build_case(const PhantomSpec& spec, std::size_t r, std::size_t acs_lines,
                       std::uint64_t noise_seed);
DatasetCase build_case(const PhantomSpec& spec, const CaipiScheme& scheme, std::size_t r,
                       std::size_t acs_lines, std::uint64_t noise_seed);

/// Per-slice reference restricted to the ACS band, as a calibration scan sees it.
SliceStack acs_reference(const SliceStack& truth, AcsBand band);

}  // namespace smsrecon
