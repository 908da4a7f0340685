#include <gtest/gtest.h>

#include "smsrecon/run_config.hpp"

using namespace smsrecon;

namespace {

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    (void)parse_run_config(text);
    FAIL() << "accepted: " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Configuration);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(RunConfig, Defaults) {
  const auto cfg = parse_run_config("", "/base");
  EXPECT_EQ(cfg.phantom.rows, 96u);
  EXPECT_EQ(cfg.phantom.b, 3u);
  EXPECT_EQ(cfg.r, 2u);
  EXPECT_EQ(cfg.acs, 32u);
  EXPECT_EQ(cfg.t_m, 10u);
  EXPECT_EQ(cfg.guidance_interval, 2u);
  EXPECT_TRUE(cfg.anchor);
  EXPECT_EQ(cfg.predictor_m, "grappa");
  EXPECT_EQ(cfg.output_dir, std::filesystem::path("/base/out"));
  EXPECT_EQ(cfg.scheme().shifts(), (std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0 - 1.0}));
}

TEST(RunConfig, ParsesEverySection) {
  const auto cfg = parse_run_config(R"(
# comment
[phantom]
rows = 48
cols = 64
coils = 2
variant_seed = 9
noise_sigma = 0.01

[scheme]
b = 2
shifts = 0, 0.25

[mask]
r = 3
acs = 12

[inference]
t_m = 4
t_u = 6
guidance_interval = 3
anchor = off
predictor_m = oracle
predictor_u = external
endpoint = tcp:127.0.0.1:9
kernel_rows = 3
kernel_cols = 7
ridge = 1e-3
inplane_ridge = 0

[seeds]
noise = 17

[output]
directory = /abs/out
)",
                                    "/base");
  EXPECT_EQ(cfg.phantom.rows, 48u);
  EXPECT_EQ(cfg.phantom.cols, 64u);
  EXPECT_EQ(cfg.phantom.coils, 2u);
  EXPECT_EQ(cfg.phantom.variant_seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.phantom.noise_sigma, 0.01);
  EXPECT_EQ(cfg.scheme().shifts(), (std::vector<double>{0.0, 0.25}));
  EXPECT_EQ(cfg.r, 3u);
  EXPECT_EQ(cfg.acs, 12u);
  EXPECT_EQ(cfg.t_m, 4u);
  EXPECT_EQ(cfg.t_u, 6u);
  EXPECT_EQ(cfg.guidance_interval, 3u);
  EXPECT_FALSE(cfg.anchor);
  EXPECT_EQ(cfg.predictor_m, "oracle");
  EXPECT_EQ(cfg.predictor_u, "external");
  EXPECT_EQ(cfg.endpoint, "tcp:127.0.0.1:9");
  EXPECT_EQ(cfg.kernel_window, (KernelWindow{3, 7}));
  EXPECT_DOUBLE_EQ(cfg.ridge, 1e-3);
  EXPECT_EQ(cfg.inplane_ridge, 0.0);
  EXPECT_EQ(cfg.noise_seed, 17u);
  EXPECT_EQ(cfg.output_dir, std::filesystem::path("/abs/out"));
}

TEST(RunConfig, FormatRoundTrips) {
  auto cfg = parse_run_config("[scheme]\nb = 2\nshifts = 0,0.5\n[output]\ndirectory = rel\n", "/x");
  const auto again = parse_run_config(format_run_config(cfg), "/elsewhere");
  EXPECT_EQ(format_run_config(again), format_run_config(cfg));
  EXPECT_EQ(again.output_dir, std::filesystem::path("/x/rel"));
}

TEST(RunConfig, Rejections) {
  expect_config_error("[mask]\nbogus = 1\n", "mask.bogus");
  expect_config_error("[nowhere]\nr = 1\n", "nowhere.r");
  expect_config_error("[mask]\nr = two\n", "mask.r");
  expect_config_error("[mask]\nr = -1\n", "mask.r");
  expect_config_error("[mask]\nr = 0\n", "mask.r");
  expect_config_error("[mask]\nacs = 200\n", "mask.acs");
  expect_config_error("[inference]\nt_m = 0\n", "inference.t_m");
  expect_config_error("[inference]\nanchor = maybe\n", "inference.anchor");
  expect_config_error("[inference]\npredictor_m = magic\n", "inference.predictor_m");
  expect_config_error("[inference]\npredictor_u = external\n", "inference.endpoint");
  expect_config_error("[scheme]\nb = 2\nshifts = 0\n", "scheme.shifts");
  expect_config_error("[scheme]\nb = 5\n", "scheme");
  expect_config_error("[phantom]\nrows = 8\n", "phantom");
  expect_config_error("[mask\n", "line 1");
  expect_config_error("[mask]\njust words\n", "line 2");
}

TEST(RunConfig, MissingFileIsConfigurationError) {
  try {
    (void)load_run_config("/nonexistent/run.ini");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Configuration);
  }
}
