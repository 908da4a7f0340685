#include "smsrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace smsrecon {

namespace {

void check_pair(const MagnitudeImage& recon, const MagnitudeImage& ref, const char* where) {
  if (!recon.same_shape(ref)) {
    fail(ErrorKind::Shape, std::string(where) + ": image shapes differ");
  }
  require(ref.size() > 0, ErrorKind::DegenerateInput, std::string(where) + ": empty image");
}

std::vector<double> gaussian_window(std::size_t n, double sigma) {
  std::vector<double> w(n);
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering of a row-major image.
std::vector<double> filter_valid(std::span<const double> img, std::size_t rows, std::size_t cols,
                                 const std::vector<double>& w) {
  const std::size_t n = w.size();
  const std::size_t out_cols = cols - n + 1;
  const std::size_t out_rows = rows - n + 1;
  std::vector<double> tmp(rows * out_cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * img[r * cols + c + k];
      tmp[r * out_cols + c] = acc;
    }
  }
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * tmp[(r + k) * out_cols + c];
      out[r * out_cols + c] = acc;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double nmse(const MagnitudeImage& recon, const MagnitudeImage& ref) {
  check_pair(recon, ref, "nmse");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = recon.values()[i] - ref.values()[i];
    num += d * d;
    den += ref.values()[i] * ref.values()[i];
  }
  require(den > 0.0, ErrorKind::DegenerateInput, "nmse: reference image is zero");
  return num / den;
}

double psnr(const MagnitudeImage& recon, const MagnitudeImage& ref) {
  check_pair(recon, ref, "psnr");
  const double peak = *std::max_element(ref.values().begin(), ref.values().end());
  require(peak > 0.0, ErrorKind::DegenerateInput, "psnr: reference image is zero");
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = recon.values()[i] - ref.values()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double ssim(const MagnitudeImage& recon, const MagnitudeImage& ref, const SsimParams& p) {
  check_pair(recon, ref, "ssim");
  require(p.window >= 1 && p.sigma > 0.0, ErrorKind::Argument, "ssim: invalid window parameters");
  if (ref.rows() < p.window || ref.cols() < p.window) {
    fail(ErrorKind::Argument, "ssim: image smaller than the " + std::to_string(p.window) + "x" +
                                  std::to_string(p.window) + " window");
  }
  const std::size_t rows = ref.rows();
  const std::size_t cols = ref.cols();
  const auto w = gaussian_window(p.window, p.sigma);
  std::vector<double> xx(ref.size()), yy(ref.size()), xy(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double x = recon.values()[i];
    const double y = ref.values()[i];
    xx[i] = x * x;
    yy[i] = y * y;
    xy[i] = x * y;
  }
  const auto mx = filter_valid(recon.values(), rows, cols, w);
  const auto my = filter_valid(ref.values(), rows, cols, w);
  const auto sxx = filter_valid(xx, rows, cols, w);
  const auto syy = filter_valid(yy, rows, cols, w);
  const auto sxy = filter_valid(xy, rows, cols, w);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

MetricReport evaluate_images(const MagnitudeImage& recon, const MagnitudeImage& ref) {
  check_pair(recon, ref, "evaluate");
  auto [ref_n, scale] = normalize_magnitude(ref);
  const MagnitudeImage rec_n = scale_magnitude(recon, scale);
  MetricReport m;
  m.scale = scale;
  m.nmse = nmse(rec_n, ref_n);
  m.psnr = psnr(rec_n, ref_n);
  m.ssim = ssim(rec_n, ref_n);
  return m;
}

std::vector<MetricReport> evaluate_images(const std::vector<MagnitudeImage>& recon,
                                          const SliceStack& truth) {
  if (recon.size() != truth.b()) {
    fail(ErrorKind::Evaluation, "evaluate: " + std::to_string(recon.size()) +
                                    " reconstructed slices for " + std::to_string(truth.b()) +
                                    " reference slices");
  }
  std::vector<MetricReport> out;
  out.reserve(recon.size());
  for (std::size_t s = 0; s < recon.size(); ++s) {
    const MagnitudeImage ref = rss_combine(truth.slice(s));
    if (!recon[s].same_shape(ref)) {
      fail(ErrorKind::Evaluation, "evaluate: slice " + std::to_string(s) + " shape mismatch");
    }
    out.push_back(evaluate_images(recon[s], ref));
  }
  return out;
}

std::vector<MetricReport> evaluate_case(const ReconstructionResult& result, const SliceStack& truth) {
  return evaluate_images(result.images, truth);
}

double capped_psnr(double psnr_db) noexcept { return std::min(psnr_db, kPsnrCap); }

std::string format_report(const std::vector<MetricReport>& reports) {
  std::string out;
  for (std::size_t s = 0; s < reports.size(); ++s) {
    out += "slice=" + std::to_string(s) + " psnr=" + fmt(capped_psnr(reports[s].psnr)) +
           " ssim=" + fmt(reports[s].ssim) + " nmse=" + fmt(reports[s].nmse) +
           " scale=" + fmt(reports[s].scale) + "\n";
  }
  return out;
}

std::vector<MetricReport> parse_report(const std::string& text) {
  std::vector<MetricReport> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    MetricReport m;
    int seen = 0;
    while (fields >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) fail(ErrorKind::InvalidData, "report: malformed field '" + token + "'");
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      try {
        if (key == "slice") {
          if (std::stoul(value) != out.size()) fail(ErrorKind::InvalidData, "report: slices out of order");
        } else if (key == "psnr") {
          m.psnr = std::stod(value);
        } else if (key == "ssim") {
          m.ssim = std::stod(value);
        } else if (key == "nmse") {
          m.nmse = std::stod(value);
        } else if (key == "scale") {
          m.scale = std::stod(value);
        } else {
          fail(ErrorKind::InvalidData, "report: unknown field '" + key + "'");
        }
      } catch (const std::logic_error&) {
        fail(ErrorKind::InvalidData, "report: bad value in '" + token + "'");
      }
      ++seen;
    }
    require(seen == 5, ErrorKind::InvalidData, "report: expected five fields per line");
    out.push_back(m);
  }
  return out;
}

}  // namespace smsrecon
