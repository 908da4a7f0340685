#include <gtest/gtest.h>

#include "gen.hpp"
#include "smsrecon/trajectory.hpp"

using namespace smsrecon;

namespace {

Predictor fixed(const Degradation& d) {
  return [d](const TrajectoryState&, const Schedule&) { return d; };
}

}  // namespace

TEST(Schedule, LinearEndpoints) {
  const Schedule s = linear_schedule(4);
  EXPECT_EQ(s.steps(), 4u);
  EXPECT_EQ(s.alpha(0), 0.0);
  EXPECT_EQ(s.alpha(4), 1.0);
  EXPECT_EQ(s.alpha(2), 0.5);
  EXPECT_EQ(s.normalized(1), 0.25);
  EXPECT_THROW((void)s.alpha(5), Error);
}

TEST(Schedule, RejectsInvalid) {
  EXPECT_THROW(Schedule({0.0}), Error);
  EXPECT_THROW(Schedule({0.1, 1.0}), Error);
  EXPECT_THROW(Schedule({0.0, 0.6, 0.4, 1.0}), Error);
  EXPECT_THROW(Schedule({0.0, 0.9}), Error);
  EXPECT_THROW(linear_schedule(0), Error);
  EXPECT_NO_THROW(Schedule({0.0, 0.0, 1.0}));
}

TEST(Trajectory, ForwardEndpoints) {
  testgen::Rng rng(41);
  const auto k = testgen::kspace(rng, 2, 4, 5);
  const Degradation d{testgen::kspace(rng, 2, 4, 5), Stage::U};
  const Schedule s = linear_schedule(3);
  EXPECT_EQ(forward_state(k, d, s, 0).x, k);
  const auto top = forward_state(k, d, s, 3);
  EXPECT_LT(testgen::max_abs_diff(top.x, k + d.value), 1e-15);
  EXPECT_EQ(top.stage, Stage::U);
  EXPECT_EQ(top.t, 3u);
}

TEST(Trajectory, ExactStepRecoversTargetAndPreviousState) {
  testgen::Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t steps = rng.index(1, 30);
    const Schedule s = linear_schedule(steps);
    const auto k = testgen::kspace(rng, 2, 3, 4);
    const Degradation d{testgen::kspace(rng, 2, 3, 4), Stage::M};
    const std::size_t t = rng.index(1, steps);
    const auto step = reverse_step(forward_state(k, d, s, t), d, s);
    EXPECT_LT(testgen::max_abs_diff(step.k_hat, k), 1e-12);
    EXPECT_LT(testgen::max_abs_diff(step.next.x, forward_state(k, d, s, t - 1).x), 1e-12);
    EXPECT_EQ(step.next.t, t - 1);
  }
}

TEST(Trajectory, ReverseStepErrors) {
  testgen::Rng rng(43);
  const auto x = testgen::kspace(rng, 1, 2, 2);
  const Schedule s = linear_schedule(2);
  try {
    (void)reverse_step({x, 0, Stage::M}, {x, Stage::M}, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepUnderflow);
  }
  try {
    (void)reverse_step({x, 1, Stage::M}, {x, Stage::U}, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Argument);
  }
}

TEST(Trajectory, ChainWithExactDegradationIsScheduleInvariant) {
  testgen::Rng rng(44);
  const auto k = testgen::kspace(rng, 2, 6, 6);
  const Degradation d{testgen::kspace(rng, 2, 6, 6), Stage::M};
  for (std::size_t steps : {1u, 2u, 5u, 50u}) {
    const auto out = run_reverse_chain(k + d.value, Stage::M, linear_schedule(steps), fixed(d));
    EXPECT_LT(testgen::relative_error(out, k), 1e-12) << "T = " << steps;
  }
}

TEST(Trajectory, PostStepSeesEveryStep) {
  testgen::Rng rng(45);
  const auto x = testgen::kspace(rng, 1, 2, 2);
  std::vector<std::size_t> seen;
  const Degradation zero{MultiCoilKSpace(1, 2, 2), Stage::U};
  (void)run_reverse_chain(x, Stage::U, linear_schedule(4), fixed(zero),
                          [&](MultiCoilKSpace v, std::size_t t) {
                            seen.push_back(t);
                            return v;
                          });
  EXPECT_EQ(seen, (std::vector<std::size_t>{4, 3, 2, 1}));
}

TEST(Trajectory, PredictorErrorsCarryStepContext) {
  const MultiCoilKSpace x(1, 2, 2);
  const Predictor broken = [](const TrajectoryState& st, const Schedule&) -> Degradation {
    if (st.t == 2) fail(ErrorKind::Transport, "link down");
    return {MultiCoilKSpace(1, 2, 2), st.stage};
  };
  try {
    (void)run_reverse_chain(x, Stage::U, linear_schedule(3), broken);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Transport);
    EXPECT_NE(std::string(e.what()).find("stage U step 2"), std::string::npos) << e.what();
  }
  const Predictor throws_std = [](const TrajectoryState&, const Schedule&) -> Degradation {
    throw std::runtime_error("boom");
  };
  try {
    (void)run_reverse_chain(x, Stage::M, linear_schedule(1), throws_std);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Reconstruction);
  }
}
