#include "smsrecon/inference.hpp"

#include <chrono>
#include <sstream>

namespace smsrecon {

void InferenceConfig::validate() const {
  require(t_m >= 1 && t_u >= 1, ErrorKind::Configuration, "inference: T_M and T_U must be >= 1");
  require(guidance_interval >= 1, ErrorKind::Configuration, "inference: guidance interval must be >= 1");
}

MultiCoilKSpace dc_project(const MultiCoilKSpace& x, const MultiCoilKSpace& pseudo,
                           const SamplingMask& mask) {
  require_same_shape(x, pseudo, "dc_project");
  require(x.rows() == mask.rows() && x.cols() == mask.cols(), ErrorKind::Shape,
          "dc_project: grid does not match mask");
  MultiCoilKSpace out = x;
  for (std::size_t c = 0; c < x.coils(); ++c) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        if (mask.kept(r, j)) out.coil(c)(r, j) = pseudo.coil(c)(r, j);
      }
    }
  }
  return out;
}

MultiCoilKSpace anchor_project(const MultiCoilKSpace& x, const MultiCoilKSpace& anchor,
                               AcsBand acs) {
  require_same_shape(x, anchor, "anchor_project");
  require(acs.empty() || acs.end <= x.cols(), ErrorKind::Shape, "anchor_project: ACS band out of range");
  MultiCoilKSpace out = x;
  for (std::size_t c = 0; c < x.coils(); ++c) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t j = acs.begin; j < acs.end; ++j) out.coil(c)(r, j) = anchor.coil(c)(r, j);
    }
  }
  return out;
}

MultiCoilKSpace pseudo_measurement(const MultiCoilKSpace& k_hat_m, const SamplingMask& mask) {
  return apply_mask(k_hat_m, mask);
}

MultiCoilKSpace stage_m(const MultiCoilKSpace& y_aligned, const InferenceConfig& cfg,
                        const Predictor& predictor) {
  cfg.validate();
  return run_reverse_chain(y_aligned, Stage::M, linear_schedule(cfg.t_m), predictor);
}

MultiCoilKSpace stage_u(const MultiCoilKSpace& k_hat_m, const SamplingMask& mask,
                        const InferenceConfig& cfg, const Predictor& predictor,
                        const std::optional<MultiCoilKSpace>& anchor) {
  cfg.validate();
  const MultiCoilKSpace pseudo = pseudo_measurement(k_hat_m, mask);
  const bool anchored = cfg.use_anchor && anchor.has_value();
  if (anchored) require_same_shape(k_hat_m, *anchor, "stage_u anchor");
  const AcsBand acs = mask.acs();
  const std::size_t interval = cfg.guidance_interval;
  const bool dc = cfg.dc_enabled;
  PostStep project = [&](MultiCoilKSpace x, std::size_t t) {
    if (dc) x = dc_project(x, pseudo, mask);
    if (anchored && t % interval == 0) x = anchor_project(x, *anchor, acs);
    return x;
  };
  return run_reverse_chain(k_hat_m, Stage::U, linear_schedule(cfg.t_u), predictor, project);
}

namespace {

Predictor build_predictor(const PredictorKind& kind, Stage stage, std::size_t slice,
                          const MultiCoilKSpace& x_terminal, const CaipiScheme& scheme,
                          const SamplingMask& mask, const InferenceConfig& cfg) {
  if (const auto* oracle = std::get_if<OracleKind>(&kind)) {
    require(oracle->truth != nullptr, ErrorKind::Configuration, "oracle predictor: no ground truth");
    return make_oracle_predictor({oracle->truth, scheme, mask, slice});
  }
  if (const auto* external = std::get_if<ExternalKind>(&kind)) {
    return make_external_predictor(external->endpoint);
  }
  // Calibrated: the linear estimator is step independent, so the clean-target
  // estimate is computed once from the terminal state.
  if (stage == Stage::M) {
    require(cfg.kernels.size() == scheme.b(), ErrorKind::Configuration,
            "calibrated predictor: expected " + std::to_string(scheme.b()) +
                " slice kernels, have " + std::to_string(cfg.kernels.size()));
    const MultiCoilKSpace estimate = slice_grappa_apply(x_terminal, cfg.kernels[slice]);
    return make_estimate_predictor(apply_mask(estimate, mask));
  }
  return make_estimate_predictor(
      inplane_complete(x_terminal, mask, cfg.inplane_window, cfg.inplane_ridge));
}

std::string kind_name(const PredictorKind& kind) {
  if (std::holds_alternative<OracleKind>(kind)) return "oracle";
  if (const auto* external = std::get_if<ExternalKind>(&kind)) {
    return "external " + (external->endpoint ? external->endpoint->endpoint().describe() : "");
  }
  return "calibrated";
}

}  // namespace

ReconstructionResult reconstruct_all(const MultiCoilKSpace& y, const CaipiScheme& scheme,
                                     const SamplingMask& mask, const InferenceConfig& cfg) {
  cfg.validate();
  require(y.rows() == scheme.rows() && y.cols() == scheme.cols(), ErrorKind::Shape,
          "reconstruct_all: measurement does not match scheme");
  require(y.rows() == mask.rows() && y.cols() == mask.cols(), ErrorKind::Shape,
          "reconstruct_all: measurement does not match mask");
  require(!mask.none_kept(), ErrorKind::DegenerateInput, "reconstruct_all: sampling mask is empty");

  std::optional<std::vector<MultiCoilKSpace>> anchors;
  if (cfg.use_anchor && !cfg.kernels.empty()) anchors = low_frequency_anchor(y, mask, scheme, cfg.kernels);

  ReconstructionResult result;
  auto& prov = result.provenance;
  prov.settings["t_m"] = std::to_string(cfg.t_m);
  prov.settings["t_u"] = std::to_string(cfg.t_u);
  prov.settings["guidance_interval"] = std::to_string(cfg.guidance_interval);
  prov.settings["anchor"] = anchors ? "on" : "off";
  prov.settings["dc"] = cfg.dc_enabled ? "on" : "off";
  prov.settings["predictor_m"] = kind_name(cfg.predictor_m);
  prov.settings["predictor_u"] = kind_name(cfg.predictor_u);
  prov.settings["slices"] = std::to_string(scheme.b());

  for (std::size_t s = 0; s < scheme.b(); ++s) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const MultiCoilKSpace aligned = caipi_inverse(y, scheme, s);
      const Predictor pm = build_predictor(cfg.predictor_m, Stage::M, s, aligned, scheme, mask, cfg);
      MultiCoilKSpace k_m = stage_m(aligned, cfg, pm);
      const Predictor pu = build_predictor(cfg.predictor_u, Stage::U, s, k_m, scheme, mask, cfg);
      std::optional<MultiCoilKSpace> anchor;
      if (anchors) anchor = (*anchors)[s];
      MultiCoilKSpace k_full = stage_u(k_m, mask, cfg, pu, anchor);
      result.images.push_back(rss_combine(k_full));
      result.stage_m.push_back(std::move(k_m));
      result.full.push_back(std::move(k_full));
    } catch (const Error& e) {
      throw Error(e.kind(), "slice " + std::to_string(s) + ": " + e.what());
    }
    prov.slice_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return result;
}

}  // namespace smsrecon
