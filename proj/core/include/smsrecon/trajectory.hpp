#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "smsrecon/operators.hpp"

namespace smsrecon {

/// Monotone interpolation weights alpha_0 = 0 <= ... <= alpha_T = 1.
class Schedule {
 public:
  explicit Schedule(std::vector<double> alphas);

  std::size_t steps() const noexcept { return alphas_.size() - 1; }
  double alpha(std::size_t t) const;
  double normalized(std::size_t t) const { return static_cast<double>(t) / static_cast<double>(steps()); }
  const std::vector<double>& alphas() const noexcept { return alphas_; }

 private:
  std::vector<double> alphas_;
};

Schedule linear_schedule(std::size_t steps);

struct TrajectoryState {
  MultiCoilKSpace x;
  std::size_t t = 0;
  Stage stage = Stage::M;
};

struct ReverseStep {
  MultiCoilKSpace k_hat;
  TrajectoryState next;
};

/// x_t = k_star + alpha_t * d
TrajectoryState forward_state(const MultiCoilKSpace& k_star, const Degradation& d,
                              const Schedule& sched, std::size_t t);

/// k_hat = x_t - alpha_t * d_hat, then x_{t-1} = k_hat + alpha_{t-1} * d_hat.
ReverseStep reverse_step(const TrajectoryState& state, const Degradation& d_hat,
                         const Schedule& sched);

/// Degradation predictor. Receives the current state and the schedule in use;
/// `sched.normalized(state.t)` is the step encoding handed to learned models.
using Predictor = std::function<Degradation(const TrajectoryState&, const Schedule&)>;

/// Optional transformation of x_{t-1}, called with the step t just consumed.
using PostStep = std::function<MultiCoilKSpace(MultiCoilKSpace, std::size_t t)>;

/// Iterates reverse_step from t = T down to 1 and returns x_0.
MultiCoilKSpace run_reverse_chain(const MultiCoilKSpace& x_terminal, Stage stage,
                                  const Schedule& sched, const Predictor& predict,
                                  const PostStep& post_step = {});

}  // namespace smsrecon
