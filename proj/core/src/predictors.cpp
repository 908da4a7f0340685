#include "smsrecon/predictors.hpp"

#include <cmath>
#include <string>

namespace smsrecon {

Degradation oracle_predict(const TrajectoryState& state, const OracleTruth& truth) {
  require(truth.stack != nullptr, ErrorKind::Configuration, "oracle_predict: no ground-truth stack");
  require(truth.target_slice < truth.stack->b(), ErrorKind::Index,
          "oracle_predict: target slice out of range");
  Degradation d;
  if (state.stage == Stage::M) {
    require(truth.scheme.has_value(), ErrorKind::Configuration,
            "oracle_predict: stage M needs the CAIPI scheme");
    if (truth.mask && !truth.mask->all_kept()) {
      d = degradation_m(apply_mask(*truth.stack, *truth.mask), *truth.scheme, truth.target_slice);
    } else {
      d = degradation_m(*truth.stack, *truth.scheme, truth.target_slice);
    }
  } else {
    require(truth.mask.has_value(), ErrorKind::Configuration,
            "oracle_predict: stage U needs the sampling mask");
    d = degradation_u(truth.stack->slice(truth.target_slice), *truth.mask);
  }
  require_same_shape(state.x, d.value, "oracle_predict");
  return d;
}

Predictor make_oracle_predictor(OracleTruth truth) {
  require(truth.stack != nullptr, ErrorKind::Configuration, "oracle predictor: no ground-truth stack");
  // Step independent: both stage degradations are fixed at construction.
  const MultiCoilKSpace& ref = truth.stack->slice(0);
  const TrajectoryState probe_m{MultiCoilKSpace(ref.coils(), ref.rows(), ref.cols()), 1, Stage::M};
  const TrajectoryState probe_u{probe_m.x, 1, Stage::U};
  std::optional<Degradation> d_m;
  std::optional<Degradation> d_u;
  if (truth.scheme) d_m = oracle_predict(probe_m, truth);
  if (truth.mask) d_u = oracle_predict(probe_u, truth);
  return [d_m = std::move(d_m), d_u = std::move(d_u)](const TrajectoryState& state, const Schedule&) {
    const auto& d = state.stage == Stage::M ? d_m : d_u;
    if (!d) {
      fail(ErrorKind::Configuration, std::string("oracle predictor: no truth for stage ") +
                                         stage_code(state.stage));
    }
    require_same_shape(state.x, d->value, "oracle_predict");
    return *d;
  };
}

Degradation estimator_to_degradation(const TrajectoryState& state, const MultiCoilKSpace& k_est,
                                     const Schedule& sched, double eps) {
  require_same_shape(state.x, k_est, "estimator_to_degradation");
  const double alpha = sched.alpha(state.t);
  if (alpha < eps) {
    fail(ErrorKind::NearZeroAlpha, "estimator_to_degradation: alpha_" + std::to_string(state.t) +
                                       " = " + std::to_string(alpha) + " is below " +
                                       std::to_string(eps));
  }
  MultiCoilKSpace d = state.x - k_est;
  for (auto& g : d.grids()) {
    for (auto& v : g.data()) v /= alpha;
  }
  return {std::move(d), state.stage};
}

Predictor make_estimate_predictor(MultiCoilKSpace k_est, double eps) {
  return [k_est = std::move(k_est), eps](const TrajectoryState& state, const Schedule& sched) {
    return estimator_to_degradation(state, k_est, sched, eps);
  };
}

Predictor make_zero_predictor() {
  return [](const TrajectoryState& state, const Schedule&) {
    return Degradation{MultiCoilKSpace(state.x.coils(), state.x.rows(), state.x.cols()), state.stage};
  };
}

}  // namespace smsrecon
