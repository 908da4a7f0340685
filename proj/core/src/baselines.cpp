#include "smsrecon/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace smsrecon {

CoilSensitivitySet::CoilSensitivitySet(std::vector<MultiCoilKSpace> maps, double tolerance)
    : maps_(std::move(maps)) {
  require(!maps_.empty(), ErrorKind::Argument, "CoilSensitivitySet: no slices");
  for (const auto& m : maps_) {
    require_same_shape(m, maps_.front(), "CoilSensitivitySet");
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) {
      double acc = 0.0;
      for (const auto& g : m.grids()) acc += std::norm(g.data()[i]);
      const double rss = std::sqrt(acc);
      require(rss == 0.0 || std::abs(rss - 1.0) <= tolerance, ErrorKind::InvalidData,
              "CoilSensitivitySet: maps are not normalized to unit RSS");
    }
  }
}

CoilSensitivitySet CoilSensitivitySet::normalized(std::vector<MultiCoilKSpace> raw) {
  for (auto& m : raw) {
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) {
      double acc = 0.0;
      for (const auto& g : m.grids()) acc += std::norm(g.data()[i]);
      const double rss = std::sqrt(acc);
      for (auto& g : m.grids()) g.data()[i] = rss > 0.0 ? g.data()[i] / rss : cplx(0.0, 0.0);
    }
  }
  return CoilSensitivitySet(std::move(raw));
}

MultiCoilKSpace zero_fill_reconstruct(const MultiCoilKSpace& y, const CaipiScheme& scheme,
                                      std::size_t s_star) {
  require(s_star < scheme.b(), ErrorKind::Index, "zero_fill_reconstruct: slice index out of range");
  return caipi_inverse(y, scheme, s_star);
}

SliceStack sense_reconstruct(const MultiCoilKSpace& y, const CaipiScheme& scheme,
                             const SamplingMask& mask, const CoilSensitivitySet& sens,
                             double tikhonov) {
  require(tikhonov >= 0.0 && std::isfinite(tikhonov), ErrorKind::Argument,
          "sense_reconstruct: tikhonov weight must be nonnegative");
  require(sens.b() == scheme.b(), ErrorKind::Shape, "sense_reconstruct: sensitivity slice count mismatch");
  require(y.rows() == scheme.rows() && y.cols() == scheme.cols(), ErrorKind::Shape,
          "sense_reconstruct: measurement does not match scheme");
  require(y.rows() == mask.rows() && y.cols() == mask.cols(), ErrorKind::Shape,
          "sense_reconstruct: measurement does not match mask");
  require(sens.slice(0).same_shape(y), ErrorKind::Shape, "sense_reconstruct: sensitivity shape mismatch");

  const std::size_t rows = y.rows();
  const std::size_t cols = y.cols();
  const std::size_t coils = y.coils();
  const std::size_t b = scheme.b();
  const PhaseEncodePattern pattern = detect_pattern(mask);
  const std::size_t period = pattern.period;
  if (cols % period != 0) {
    fail(ErrorKind::UnsupportedMask, "sense_reconstruct: sampling period " + std::to_string(period) +
                                         " does not divide " + std::to_string(cols) + " columns");
  }
  std::vector<std::size_t> pixel_shift(b);
  for (std::size_t s = 0; s < b; ++s) {
    const double exact = scheme.shift(s) * static_cast<double>(cols);
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9) {
      fail(ErrorKind::UnsupportedMask, "sense_reconstruct: CAIPI shift of slice " +
                                           std::to_string(s) + " is not an integer pixel count");
    }
    const auto n = static_cast<long long>(rounded);
    const auto c = static_cast<long long>(cols);
    pixel_shift[s] = static_cast<std::size_t>(((n % c) + c) % c);
  }

  // Drop the ACS-only lines so that the zero-filled image is exactly periodic.
  MultiCoilKSpace periodic = y;
  for (auto& g : periodic.grids()) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < cols; ++j) {
        if (!pattern.sampled(j)) g(r, j) = cplx(0.0, 0.0);
      }
    }
  }
  const MultiCoilKSpace aliased = ifft2_centered(periodic);

  // Folding weights of the centered transform: image replica m carries
  // exp(2 pi i m (cols/2 - offset) / R) / R.
  const std::size_t fold = cols / period;
  std::vector<cplx> weight(period);
  for (std::size_t m = 0; m < period; ++m) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(m) *
                         (static_cast<double>(cols / 2) - static_cast<double>(pattern.offset)) /
                         static_cast<double>(period);
    weight[m] = std::polar(1.0 / static_cast<double>(period), phase);
  }

  std::vector<ComplexGrid> rho(b, ComplexGrid(rows, cols));
  struct Unknown {
    std::size_t slice;
    std::size_t pixel;
    std::size_t replica;
  };
  std::vector<Unknown> unknowns;
  for (std::size_t x = 0; x < rows; ++x) {
    for (std::size_t n0 = 0; n0 < fold; ++n0) {
      unknowns.clear();
      for (std::size_t s = 0; s < b; ++s) {
        for (std::size_t m = 0; m < period; ++m) {
          const std::size_t p = (n0 + m * fold + cols - pixel_shift[s]) % cols;
          bool any = false;
          for (std::size_t c = 0; c < coils && !any; ++c) any = sens.slice(s).coil(c)(x, p) != cplx(0.0, 0.0);
          if (any) unknowns.push_back({s, p, m});
        }
      }
      if (unknowns.empty()) continue;
      Eigen::MatrixXcd e(coils, unknowns.size());
      Eigen::VectorXcd a(coils);
      for (std::size_t c = 0; c < coils; ++c) {
        a(c) = aliased.coil(c)(x, n0);
        for (std::size_t u = 0; u < unknowns.size(); ++u) {
          const auto& k = unknowns[u];
          e(c, u) = weight[k.replica] * sens.slice(k.slice).coil(c)(x, k.pixel);
        }
      }
      Eigen::VectorXcd sol;
      if (tikhonov == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(e);
        if (qr.rank() < static_cast<Eigen::Index>(unknowns.size())) {
          fail(ErrorKind::Solver, "sense_reconstruct: aliased pixel group (" + std::to_string(x) +
                                      ", " + std::to_string(n0) + ") is singular with " +
                                      std::to_string(unknowns.size()) + " unknowns and " +
                                      std::to_string(coils) + " coils; use tikhonov > 0");
        }
        sol = qr.solve(a);
      } else {
        Eigen::MatrixXcd normal = e.adjoint() * e;
        // Each group stands for R identical replicas of its residual.
        normal.diagonal().array() += tikhonov / static_cast<double>(period);
        sol = normal.llt().solve(e.adjoint() * a);
      }
      for (std::size_t u = 0; u < unknowns.size(); ++u) {
        rho[unknowns[u].slice](x, unknowns[u].pixel) = sol(u);
      }
    }
  }

  std::vector<MultiCoilKSpace> slices;
  slices.reserve(b);
  for (std::size_t s = 0; s < b; ++s) {
    MultiCoilKSpace images(coils, rows, cols);
    for (std::size_t c = 0; c < coils; ++c) {
      auto dst = images.coil(c).data();
      auto map = sens.slice(s).coil(c).data();
      auto src = rho[s].data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = map[i] * src[i];
    }
    slices.push_back(fft2_centered(images));
  }
  return SliceStack(std::move(slices));
}

CoilSensitivitySet estimate_sensitivities(const SliceStack& acs_slices, AcsBand band) {
  require(!band.empty(), ErrorKind::DegenerateInput, "estimate_sensitivities: ACS band is empty");
  require(band.end <= acs_slices.cols(), ErrorKind::Argument,
          "estimate_sensitivities: ACS band exceeds the grid");
  const std::size_t rows = acs_slices.rows();
  const std::size_t cols = acs_slices.cols();
  std::vector<double> taper(cols, 0.0);
  for (std::size_t j = band.begin; j < band.end; ++j) {
    const double u = (static_cast<double>(j - band.begin) + 0.5) / static_cast<double>(band.size());
    const double s = std::sin(std::numbers::pi * u);
    taper[j] = s * s;
  }

  std::vector<MultiCoilKSpace> maps;
  maps.reserve(acs_slices.b());
  for (const auto& slice : acs_slices.slices()) {
    MultiCoilKSpace lowres = slice;
    for (auto& g : lowres.grids()) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cols; ++j) g(r, j) *= taper[j];
      }
    }
    MultiCoilKSpace images = ifft2_centered(lowres);
    std::vector<double> rss(rows * cols, 0.0);
    for (const auto& g : images.grids()) {
      for (std::size_t i = 0; i < rss.size(); ++i) rss[i] += std::norm(g.data()[i]);
    }
    double peak = 0.0;
    for (auto& v : rss) {
      v = std::sqrt(v);
      peak = std::max(peak, v);
    }
    const double threshold = kSensitivityThreshold * peak;
    for (auto& g : images.grids()) {
      for (std::size_t i = 0; i < rss.size(); ++i) {
        g.data()[i] = (peak > 0.0 && rss[i] >= threshold) ? g.data()[i] / rss[i] : cplx(0.0, 0.0);
      }
    }
    maps.push_back(std::move(images));
  }
  return CoilSensitivitySet(std::move(maps));
}

std::vector<MultiCoilKSpace> slice_grappa_reconstruct(const MultiCoilKSpace& y,
                                                      const CaipiScheme& scheme,
                                                      const SamplingMask& mask,
                                                      const std::vector<GrappaKernel>& kernels,
                                                      KernelWindow inplane_window,
                                                      double inplane_ridge) {
  require(kernels.size() == scheme.b(), ErrorKind::Configuration,
          "slice_grappa_reconstruct: expected one kernel per slice");
  std::vector<MultiCoilKSpace> out;
  out.reserve(scheme.b());
  for (std::size_t s = 0; s < scheme.b(); ++s) {
    const MultiCoilKSpace separated = slice_grappa_apply(caipi_inverse(y, scheme, s), kernels[s]);
    out.push_back(inplane_complete(apply_mask(separated, mask), mask, inplane_window, inplane_ridge));
  }
  return out;
}

}  // namespace smsrecon
