#include "smsrecon/simulation.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

namespace smsrecon {

namespace {

struct Ellipse {
  double intensity;
  double a;
  double b;
  double x0;
  double y0;
  double phi_deg;
};

// Modified Shepp-Logan set (Toft contrast values).
constexpr std::array<Ellipse, 10> kEllipses{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
}};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void PhantomSpec::validate() const {
  require(rows >= 32 && cols >= 32, ErrorKind::Argument, "PhantomSpec: rows and cols must be >= 32");
  require(b >= 1, ErrorKind::Argument, "PhantomSpec: b must be >= 1");
  require(coils >= 1, ErrorKind::Argument, "PhantomSpec: at least one coil is required");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, ErrorKind::Argument,
          "PhantomSpec: noise_sigma must be finite and nonnegative");
}

std::vector<double> ellipse_phantom(std::size_t rows, std::size_t cols, double scale,
                                    double rotation_deg) {
  require(scale > 0.0, ErrorKind::Argument, "ellipse_phantom: scale must be positive");
  std::vector<double> img(rows * cols, 0.0);
  const double rot = rotation_deg * std::numbers::pi / 180.0;
  const double cr = std::cos(rot);
  const double sr = std::sin(rot);
  for (std::size_t r = 0; r < rows; ++r) {
    // y points up, x along columns; both in [-1, 1).
    const double y = 1.0 - 2.0 * (static_cast<double>(r) + 0.5) / static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = 2.0 * (static_cast<double>(c) + 0.5) / static_cast<double>(cols) - 1.0;
      // Inverse of rotate-then-scale.
      const double xs = (cr * x + sr * y) / scale;
      const double ys = (-sr * x + cr * y) / scale;
      double v = 0.0;
      for (const auto& e : kEllipses) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double dx = xs - e.x0;
        const double dy = ys - e.y0;
        const double u = std::cos(phi) * dx + std::sin(phi) * dy;
        const double w = -std::sin(phi) * dx + std::cos(phi) * dy;
        if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.intensity;
      }
      img[r * cols + c] = v;
    }
  }
  return img;
}

SliceVariation slice_variation(std::uint64_t variant_seed, std::size_t slice) {
  std::seed_seq seq{static_cast<std::uint32_t>(variant_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(variant_seed >> 32),
                    static_cast<std::uint32_t>(slice)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SliceVariation v;
  v.scale = 1.0 + 0.1 * unit(rng);
  v.rotation_deg = 10.0 * unit(rng);
  return v;
}

MultiCoilKSpace synthetic_coil_maps(std::size_t coils, std::size_t rows, std::size_t cols,
                                    std::size_t slice) {
  require(coils >= 1, ErrorKind::Argument, "synthetic_coil_maps: at least one coil is required");
  MultiCoilKSpace maps(coils, rows, cols);
  if (coils == 1) {
    for (auto& v : maps.coil(0).data()) v = cplx(1.0, 0.0);
    return maps;
  }
  constexpr double kRing = 1.3;
  constexpr double kWidth = 0.9;
  const double slice_offset = 0.35 * static_cast<double>(slice);
  for (std::size_t c = 0; c < coils; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(coils) +
                         slice_offset;
    const double cx = kRing * std::cos(angle);
    const double cy = kRing * std::sin(angle);
    // Gentle linear phase whose direction follows the coil position.
    const double kx = 0.6 * std::cos(angle + 0.5);
    const double ky = 0.6 * std::sin(angle + 0.5);
    auto& g = maps.coil(c);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = 1.0 - 2.0 * (static_cast<double>(r) + 0.5) / static_cast<double>(rows);
      for (std::size_t j = 0; j < cols; ++j) {
        const double x = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(cols) - 1.0;
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        g(r, j) = std::polar(std::exp(-d2 / (2.0 * kWidth * kWidth)), kx * x + ky * y);
      }
    }
  }
  for (std::size_t i = 0; i < rows * cols; ++i) {
    double acc = 0.0;
    for (const auto& g : maps.grids()) acc += std::norm(g.data()[i]);
    const double rss = std::sqrt(acc);
    for (auto& g : maps.grids()) g.data()[i] /= rss;
  }
  return maps;
}

std::pair<SliceStack, CoilSensitivitySet> shepp_logan_stack(const PhantomSpec& spec) {
  spec.validate();
  std::vector<MultiCoilKSpace> slices;
  std::vector<MultiCoilKSpace> maps;
  for (std::size_t s = 0; s < spec.b; ++s) {
    const SliceVariation var = slice_variation(spec.variant_seed, s);
    const auto phantom = ellipse_phantom(spec.rows, spec.cols, var.scale, var.rotation_deg);
    MultiCoilKSpace m = synthetic_coil_maps(spec.coils, spec.rows, spec.cols, s);
    MultiCoilKSpace images = m;
    for (auto& g : images.grids()) {
      auto d = g.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= phantom[i];
    }
    slices.push_back(fft2_centered(images));
    maps.push_back(std::move(m));
  }
  return {SliceStack(std::move(slices)), CoilSensitivitySet(std::move(maps))};
}

CaipiScheme standard_scheme(std::size_t b, std::size_t rows, std::size_t cols, bool generic) {
  require(b >= 1, ErrorKind::Argument, "standard_scheme: b must be >= 1");
  if (b > 3 && !generic) {
    fail(ErrorKind::Argument, "standard_scheme: no standard shifts for b = " + std::to_string(b) +
                                  "; request the generic 1/b spacing explicitly");
  }
  std::vector<double> shifts(b);
  for (std::size_t s = 0; s < b; ++s) {
    double f = static_cast<double>(s) / static_cast<double>(b);
    if (f > 0.5) f -= 1.0;
    shifts[s] = f;
  }
  return CaipiScheme(std::move(shifts), rows, cols);
}

AcsBand centered_band(std::size_t cols, std::size_t lines) {
  require(lines <= cols, ErrorKind::Argument, "centered_band: more ACS lines than columns");
  const std::size_t begin = (cols - lines) / 2;
  return AcsBand{begin, begin + lines};
}

SamplingMask uniform_mask(std::size_t rows, std::size_t cols, std::size_t r,
                          std::size_t acs_lines) {
  require(r >= 1, ErrorKind::Argument, "uniform_mask: r must be >= 1");
  if (acs_lines > cols) {
    fail(ErrorKind::Argument, "uniform_mask: acs_lines = " + std::to_string(acs_lines) +
                                  " exceeds cols = " + std::to_string(cols));
  }
  const AcsBand band = centered_band(cols, acs_lines);
  std::vector<bool> kept(cols);
  for (std::size_t j = 0; j < cols; ++j) kept[j] = (j % r == 0) || band.contains(j);
  return SamplingMask::from_columns(rows, kept, band);
}

std::map<std::string, std::string> DatasetCase::provenance() const {
  std::map<std::string, std::string> p;
  p["phantom.rows"] = std::to_string(spec.rows);
  p["phantom.cols"] = std::to_string(spec.cols);
  p["phantom.b"] = std::to_string(spec.b);
  p["phantom.coils"] = std::to_string(spec.coils);
  p["phantom.variant_seed"] = std::to_string(spec.variant_seed);
  p["phantom.noise_sigma"] = fmt_double(spec.noise_sigma);
  std::string shifts;
  for (std::size_t s = 0; s < scheme.b(); ++s) {
    if (s) shifts += ',';
    shifts += fmt_double(scheme.shift(s));
  }
  p["scheme.shifts"] = shifts;
  p["mask.r"] = std::to_string(r);
  p["mask.acs"] = std::to_string(acs_lines);
  p["mask.net_acceleration"] = fmt_double(net_acceleration());
  p["seeds.noise"] = std::to_string(noise_seed);
  return p;
}

double DatasetCase::net_acceleration() const {
  std::size_t kept = 0;
  for (std::size_t j = 0; j < mask.cols(); ++j) kept += mask.kept(0, j) ? 1 : 0;
  return kept == 0 ? 0.0 : static_cast<double>(mask.cols()) / static_cast<double>(kept);
}

DatasetCase build_case(const PhantomSpec& spec, std::size_t r, std::size_t acs_lines,
                       std::uint64_t noise_seed) {
  spec.validate();
  return build_case(spec, standard_scheme(spec.b, spec.rows, spec.cols), r, acs_lines, noise_seed);
}

DatasetCase build_case(const PhantomSpec& spec, const CaipiScheme& scheme, std::size_t r,
                       std::size_t acs_lines, std::uint64_t noise_seed) {
  spec.validate();
  require(scheme.b() == spec.b && scheme.rows() == spec.rows && scheme.cols() == spec.cols,
          ErrorKind::Shape, "build_case: scheme does not match the phantom spec");
  auto [truth, maps] = shepp_logan_stack(spec);
  SamplingMask mask = uniform_mask(spec.rows, spec.cols, r, acs_lines);
  MultiCoilKSpace y = measure(truth, scheme, mask, spec.noise_sigma, noise_seed);
  return DatasetCase{std::move(truth), scheme,     std::move(mask), std::move(y),
                     std::move(maps),  spec,       r,               acs_lines,
                     noise_seed};
}

SliceStack acs_reference(const SliceStack& truth, AcsBand band) {
  std::vector<MultiCoilKSpace> out;
  out.reserve(truth.b());
  for (const auto& s : truth.slices()) out.push_back(restrict_to_band(s, band));
  return SliceStack(std::move(out));
}

}  // namespace smsrecon
