#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gen.hpp"
#include "smsrecon/metrics.hpp"

using namespace smsrecon;

namespace {

MagnitudeImage random_image(testgen::Rng& rng, std::size_t rows, std::size_t cols) {
  MagnitudeImage m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(0.0, 1.0);
  return m;
}

// Direct per-window evaluation with explicit 2-D weights.
double ssim_oracle(const MagnitudeImage& x, const MagnitudeImage& y) {
  const int n = 11;
  const double sigma = 1.5;
  std::vector<double> g(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    g[i] = std::exp(-(i - 5) * (i - 5) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + n <= x.rows(); ++r0) {
    for (std::size_t c0 = 0; c0 + n <= x.cols(); ++c0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double w = g[a] * g[b] / (sum * sum);
          const double xv = x(r0 + a, c0 + b);
          const double yv = y(r0 + a, c0 + b);
          mx += w * xv;
          my += w * yv;
          sxx += w * xv * xv;
          syy += w * yv * yv;
          sxy += w * xv * yv;
        }
      }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cov = sxy - mx * my;
      total += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST(Metrics, ClosedForms) {
  MagnitudeImage ref(2, 2, {1.0, 0.0, 0.0, 0.0});
  MagnitudeImage rec(2, 2, {0.5, 0.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(nmse(rec, ref), 0.25);
  // mse = 0.25 / 4
  EXPECT_NEAR(psnr(rec, ref), -10.0 * std::log10(0.0625), 1e-12);
  EXPECT_EQ(psnr(ref, ref), std::numeric_limits<double>::infinity());
  EXPECT_EQ(nmse(ref, ref), 0.0);
}

TEST(Metrics, PsnrCap) {
  EXPECT_EQ(capped_psnr(std::numeric_limits<double>::infinity()), kPsnrCap);
  EXPECT_EQ(capped_psnr(42.0), 42.0);
  const auto line = format_report({MetricReport{std::numeric_limits<double>::infinity(), 1.0, 0.0, 2.0}});
  EXPECT_EQ(parse_report(line).at(0).psnr, kPsnrCap);
}

TEST(Metrics, SsimMatchesWindowOracle) {
  testgen::Rng rng(400);
  for (int i = 0; i < 3; ++i) {
    const std::size_t rows = rng.index(11, 20);
    const std::size_t cols = rng.index(11, 20);
    const auto x = random_image(rng, rows, cols);
    auto y = x;
    for (auto& v : y.values()) v = std::clamp(v + 0.2 * rng.normal(), 0.0, 1.0);
    EXPECT_NEAR(ssim(x, y), ssim_oracle(x, y), 1e-12);
  }
}

TEST(Metrics, SsimProperties) {
  testgen::Rng rng(401);
  const auto x = random_image(rng, 24, 24);
  const auto y = random_image(rng, 24, 24);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);
  EXPECT_NEAR(ssim(x, y), ssim(y, x), 1e-12);
  EXPECT_LT(ssim(x, y), 0.9);
  EXPECT_THROW((void)ssim(MagnitudeImage(8, 8), MagnitudeImage(8, 8)), Error);
  EXPECT_THROW((void)ssim(MagnitudeImage(12, 12), MagnitudeImage(12, 13)), Error);
}

TEST(Metrics, EvaluateIsScaleInvariant) {
  testgen::Rng rng(402);
  const auto ref = random_image(rng, 16, 16);
  const auto rec = random_image(rng, 16, 16);
  const auto a = evaluate_images(rec, ref);
  const auto b = evaluate_images(scale_magnitude(rec, 0.25), scale_magnitude(ref, 0.25));
  EXPECT_NEAR(a.nmse, b.nmse, 1e-12);
  EXPECT_NEAR(a.psnr, b.psnr, 1e-10);
  EXPECT_NEAR(a.ssim, b.ssim, 1e-12);
  EXPECT_NEAR(b.scale, a.scale / 0.25, 1e-12);
}

TEST(Metrics, PsnrAndNmseAgree) {
  testgen::Rng rng(403);
  for (int i = 0; i < 20; ++i) {
    const auto ref = random_image(rng, 12, 12);
    const auto rec = random_image(rng, 12, 12);
    const auto m = evaluate_images(rec, ref);
    auto [ref_n, scale] = normalize_magnitude(ref);
    double energy = 0.0;
    for (double v : ref_n.values()) energy += v * v;
    const double mse = m.nmse * energy / static_cast<double>(ref.size());
    EXPECT_NEAR(m.psnr, -10.0 * std::log10(mse), 1e-9);
  }
}

TEST(Metrics, LargerPerturbationScoresWorse) {
  testgen::Rng rng(404);
  const auto ref = random_image(rng, 32, 32);
  auto small = ref;
  auto large = ref;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double n = rng.normal();
    small.values()[i] = std::abs(small.values()[i] + 0.01 * n);
    large.values()[i] = std::abs(large.values()[i] + 0.1 * n);
  }
  const auto s = evaluate_images(small, ref);
  const auto l = evaluate_images(large, ref);
  EXPECT_LT(s.nmse, l.nmse);
  EXPECT_GT(s.psnr, l.psnr);
  EXPECT_GT(s.ssim, l.ssim);
}

TEST(Metrics, CaseLevelChecks) {
  testgen::Rng rng(405);
  const auto truth = testgen::stack(rng, 2, 2, 12, 12);
  std::vector<MagnitudeImage> imgs{rss_combine(truth.slice(0)), rss_combine(truth.slice(1))};
  const auto reports = evaluate_images(imgs, truth);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[1].nmse, 0.0);
  EXPECT_NEAR(reports[0].ssim, 1.0, 1e-12);
  imgs.pop_back();
  try {
    (void)evaluate_images(imgs, truth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Evaluation);
  }
  imgs.push_back(MagnitudeImage(12, 11));
  EXPECT_THROW((void)evaluate_images(imgs, truth), Error);
}

TEST(Metrics, ReportRoundTrip) {
  testgen::Rng rng(406);
  std::vector<MetricReport> in;
  for (int i = 0; i < 4; ++i) {
    in.push_back({rng.uniform(10, 60), rng.uniform(0, 1), rng.uniform(0, 1) * 1e-3, rng.uniform(1, 100)});
  }
  const auto text = format_report(in);
  const auto out = parse_report(text);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out[i].psnr, in[i].psnr);
    EXPECT_EQ(out[i].ssim, in[i].ssim);
    EXPECT_EQ(out[i].nmse, in[i].nmse);
    EXPECT_EQ(out[i].scale, in[i].scale);
  }
  EXPECT_EQ(format_report(out), text);
  EXPECT_THROW((void)parse_report("slice=1 psnr=1\n"), Error);
  EXPECT_THROW((void)parse_report("bogus\n"), Error);
}
