#include "smsrecon/trajectory.hpp"

#include <cmath>
#include <string>

namespace smsrecon {

Schedule::Schedule(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  require(alphas_.size() >= 2, ErrorKind::Argument, "Schedule: need at least one step");
  require(alphas_.front() == 0.0 && alphas_.back() == 1.0, ErrorKind::Argument,
          "Schedule: alpha_0 must be 0 and alpha_T must be 1");
  for (std::size_t t = 0; t < alphas_.size(); ++t) {
    require(std::isfinite(alphas_[t]) && alphas_[t] >= 0.0 && alphas_[t] <= 1.0,
            ErrorKind::Argument, "Schedule: alphas must lie in [0, 1]");
    if (t > 0) {
      require(alphas_[t] >= alphas_[t - 1], ErrorKind::Argument, "Schedule: alphas must be nondecreasing");
    }
  }
}

double Schedule::alpha(std::size_t t) const {
  require(t < alphas_.size(), ErrorKind::Index,
          "Schedule: step " + std::to_string(t) + " beyond T = " + std::to_string(steps()));
  return alphas_[t];
}

Schedule linear_schedule(std::size_t steps) {
  require(steps >= 1, ErrorKind::Argument, "linear_schedule: T must be >= 1");
  std::vector<double> alphas(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) {
    alphas[t] = static_cast<double>(t) / static_cast<double>(steps);
  }
  return Schedule(std::move(alphas));
}

TrajectoryState forward_state(const MultiCoilKSpace& k_star, const Degradation& d,
                              const Schedule& sched, std::size_t t) {
  require_same_shape(k_star, d.value, "forward_state");
  return {axpy(k_star, sched.alpha(t), d.value), t, d.stage};
}

ReverseStep reverse_step(const TrajectoryState& state, const Degradation& d_hat,
                         const Schedule& sched) {
  require(state.t >= 1, ErrorKind::StepUnderflow, "reverse_step: state is already at t = 0");
  require(d_hat.stage == state.stage, ErrorKind::Argument,
          "reverse_step: predicted degradation is for a different stage");
  require_same_shape(state.x, d_hat.value, "reverse_step");
  MultiCoilKSpace k_hat = axpy(state.x, -sched.alpha(state.t), d_hat.value);
  MultiCoilKSpace next = axpy(k_hat, sched.alpha(state.t - 1), d_hat.value);
  return {std::move(k_hat), {std::move(next), state.t - 1, state.stage}};
}

MultiCoilKSpace run_reverse_chain(const MultiCoilKSpace& x_terminal, Stage stage,
                                  const Schedule& sched, const Predictor& predict,
                                  const PostStep& post_step) {
  require(static_cast<bool>(predict), ErrorKind::Configuration, "run_reverse_chain: no predictor");
  TrajectoryState state{x_terminal, sched.steps(), stage};
  while (state.t >= 1) {
    const std::size_t t = state.t;
    Degradation d_hat;
    try {
      d_hat = predict(state, sched);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("stage ") + stage_code(stage) + " step " +
                                std::to_string(t) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Reconstruction, std::string("stage ") + stage_code(stage) +
                                                 " step " + std::to_string(t) + ": " + e.what());
    }
    ReverseStep step = reverse_step(state, d_hat, sched);
    state = std::move(step.next);
    if (post_step) state.x = post_step(std::move(state.x), t);
  }
  return std::move(state.x);
}

}  // namespace smsrecon
