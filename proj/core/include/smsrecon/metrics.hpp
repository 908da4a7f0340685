#pragma once

#include <string>
#include <vector>

#include "smsrecon/inference.hpp"

namespace smsrecon {

inline constexpr double kPsnrCap = 99.99;

struct MetricReport {
  double psnr = 0.0;  // dB, +inf when identical
  double ssim = 0.0;
  double nmse = 0.0;
  double scale = 1.0;  // reference maximum used for joint normalization
};

double nmse(const MagnitudeImage& recon, const MagnitudeImage& ref);

/// Peak 1: both images are expected to be normalized by the reference scale.
double psnr(const MagnitudeImage& recon, const MagnitudeImage& ref);

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all fully contained windows.
double ssim(const MagnitudeImage& recon, const MagnitudeImage& ref, const SsimParams& p = {});

/// Normalizes both images by the reference maximum, then computes all three metrics.
MetricReport evaluate_images(const MagnitudeImage& recon, const MagnitudeImage& ref);

std::vector<MetricReport> evaluate_case(const ReconstructionResult& result, const SliceStack& truth);
std::vector<MetricReport> evaluate_images(const std::vector<MagnitudeImage>& recon,
                                          const SliceStack& truth);

/// PSNR written with the cap applied.
double capped_psnr(double psnr_db) noexcept;

/// One `slice=<i> psnr=... ssim=... nmse=... scale=...` line per slice.
std::string format_report(const std::vector<MetricReport>& reports);
std::vector<MetricReport> parse_report(const std::string& text);

}  // namespace smsrecon
