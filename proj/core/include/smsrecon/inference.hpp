#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smsrecon/predictors.hpp"
#include "smsrecon/transport.hpp"

namespace smsrecon {

/// Ground-truth oracle (test instrument): exact degradations from the stack.
struct OracleKind {
  std::shared_ptr<const SliceStack> truth;
};

/// Linear kernel estimators: slice-GRAPPA for stage M, scan-specific in-plane
/// GRAPPA for stage U. Uses InferenceConfig::kernels.
struct CalibratedKind {};

/// Out-of-process predictor reached over the wire protocol.
struct ExternalKind {
  std::shared_ptr<ExternalPredictor> endpoint;
};

using PredictorKind = std::variant<OracleKind, CalibratedKind, ExternalKind>;

struct InferenceConfig {
  std::size_t t_m = 10;
  std::size_t t_u = 10;
  std::size_t guidance_interval = 2;
  bool use_anchor = true;
  bool dc_enabled = true;
  PredictorKind predictor_m = CalibratedKind{};
  PredictorKind predictor_u = CalibratedKind{};
  /// Slice-GRAPPA kernels, one per slice; enable the calibrated predictor and
  /// the low-frequency anchor.
  std::vector<GrappaKernel> kernels;
  /// Window and relative ridge of the scan-specific in-plane kernels.
  KernelWindow inplane_window;
  double inplane_ridge = 1e-4;

  void validate() const;
};

struct ReconstructionProvenance {
  std::map<std::string, std::string> settings;
  std::vector<double> slice_seconds;
};

struct ReconstructionResult {
  std::vector<MultiCoilKSpace> stage_m;
  std::vector<MultiCoilKSpace> full;
  std::vector<MagnitudeImage> images;
  ReconstructionProvenance provenance;
};

/// x <- P * pseudo + (1 - P) * x
MultiCoilKSpace dc_project(const MultiCoilKSpace& x, const MultiCoilKSpace& pseudo,
                           const SamplingMask& mask);

/// Replaces the ACS columns of x by the anchor.
MultiCoilKSpace anchor_project(const MultiCoilKSpace& x, const MultiCoilKSpace& anchor,
                               AcsBand acs);

MultiCoilKSpace pseudo_measurement(const MultiCoilKSpace& k_hat_m, const SamplingMask& mask);

/// Slice separation from the target-aligned measurement; no projections.
MultiCoilKSpace stage_m(const MultiCoilKSpace& y_aligned, const InferenceConfig& cfg,
                        const Predictor& predictor);

/// In-plane completion warm-started from the stage-M output. Each reverse step
/// is followed by data consistency against the pseudo-measurement and, when an
/// anchor is given and t % G == 0, the ACS anchor.
MultiCoilKSpace stage_u(const MultiCoilKSpace& k_hat_m, const SamplingMask& mask,
                        const InferenceConfig& cfg, const Predictor& predictor,
                        const std::optional<MultiCoilKSpace>& anchor = std::nullopt);

/// Full two-stage reconstruction of every slice of a collapsed measurement.
ReconstructionResult reconstruct_all(const MultiCoilKSpace& y, const CaipiScheme& scheme,
                                     const SamplingMask& mask, const InferenceConfig& cfg);

}  // namespace smsrecon
