#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "smsrecon/predictors.hpp"

namespace smsrecon {

namespace {

std::size_t block_of(const PhaseEncodePattern& p, std::size_t col) {
  return (col + p.period - p.offset % p.period) % p.period;
}

struct TapIndex {
  std::size_t in;
  std::size_t dr;
  std::size_t dc;
};

Eigen::MatrixXcd solve_ridge(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, double ridge,
                             std::size_t slice) {
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
    if (qr.rank() < a.cols()) {
      fail(ErrorKind::Solver, "grappa_calibrate: slice " + std::to_string(slice) +
                                  " calibration matrix is rank deficient (rank " +
                                  std::to_string(qr.rank()) + " of " + std::to_string(a.cols()) +
                                  "); use ridge > 0");
    }
    return qr.solve(b);
  }
  Eigen::MatrixXcd normal = a.adjoint() * a;
  const double lambda = ridge * normal.diagonal().real().mean();
  normal.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXcd> llt(normal);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::Solver, "grappa_calibrate: slice " + std::to_string(slice) +
                                " normal equations are not positive definite; increase ridge");
  }
  return llt.solve(a.adjoint() * b);
}

}  // namespace

GrappaKernel make_kernel(std::size_t target_slice, std::size_t coils_in, std::size_t coils_out,
                         KernelWindow window, PhaseEncodePattern pattern) {
  require(window.rows % 2 == 1 && window.cols % 2 == 1, ErrorKind::Argument,
          "kernel window dimensions must be odd");
  require(pattern.period >= 1 && pattern.offset < pattern.period, ErrorKind::Argument,
          "kernel sampling pattern is invalid");
  GrappaKernel k;
  k.target_slice = target_slice;
  k.coils_in = coils_in;
  k.coils_out = coils_out;
  k.window = window;
  k.pattern = pattern;
  k.taps.assign(pattern.period, std::vector<cplx>(k.taps_per_block()));
  return k;
}

GrappaKernel identity_kernel(std::size_t coils, KernelWindow window) {
  GrappaKernel k = make_kernel(0, coils, coils, window);
  for (std::size_t c = 0; c < coils; ++c) k.tap(0, c, c, window.rows / 2, window.cols / 2) = 1.0;
  return k;
}

std::vector<GrappaKernel> grappa_calibrate(const MultiCoilKSpace& collapsed,
                                           const SliceStack& slices, const CaipiScheme& scheme,
                                           AcsBand band, const CalibrationOptions& options) {
  const KernelWindow w = options.window;
  const PhaseEncodePattern pattern = options.pattern;
  require(w.rows % 2 == 1 && w.cols % 2 == 1, ErrorKind::Argument,
          "grappa_calibrate: window dimensions must be odd");
  require(options.ridge >= 0.0 && std::isfinite(options.ridge), ErrorKind::Argument,
          "grappa_calibrate: ridge must be nonnegative");
  require(slices.b() == scheme.b(), ErrorKind::Shape,
          "grappa_calibrate: reference slice count does not match scheme");
  require(slices.rows() == collapsed.rows() && slices.cols() == collapsed.cols(), ErrorKind::Shape,
          "grappa_calibrate: reference and collapsed grids differ in shape");
  require(!band.empty() && band.end <= collapsed.cols(), ErrorKind::DegenerateInput,
          "grappa_calibrate: ACS band is empty or out of range");

  const std::size_t hr = w.rows / 2;
  const std::size_t hc = w.cols / 2;
  const std::size_t rows = collapsed.rows();
  const std::size_t coils_in = collapsed.coils();
  const std::size_t coils_out = slices.coils();

  std::vector<GrappaKernel> kernels;
  kernels.reserve(slices.b());
  for (std::size_t s = 0; s < slices.b(); ++s) {
    const MultiCoilKSpace source = caipi_inverse(collapsed, scheme, s);
    const MultiCoilKSpace& target = slices.slice(s);
    GrappaKernel kernel = make_kernel(s, coils_in, coils_out, w, pattern);
    kernel.ridge = options.ridge;
    double residual_sq = 0.0;
    double target_sq = 0.0;

    for (std::size_t block = 0; block < pattern.period; ++block) {
      std::vector<std::size_t> cols;
      if (rows >= w.rows && band.size() >= w.cols) {
        for (std::size_t j = band.begin + hc; j + hc < band.end; ++j) {
          if (block_of(pattern, j) == block) cols.push_back(j);
        }
      }
      const std::size_t interior_rows = rows >= w.rows ? rows - 2 * hr : 0;
      const std::size_t m = cols.size() * interior_rows;

      std::vector<TapIndex> active;
      // Sampled source columns depend only on the block, so use a representative column.
      const std::size_t rep = pattern.offset + block + pattern.period * (w.cols + 1);
      for (std::size_t in = 0; in < coils_in; ++in) {
        for (std::size_t dr = 0; dr < w.rows; ++dr) {
          for (std::size_t dc = 0; dc < w.cols; ++dc) {
            if (pattern.sampled(rep + dc - hc)) active.push_back({in, dr, dc});
          }
        }
      }
      if (m < active.size() || m == 0) {
        fail(ErrorKind::Calibration,
             "grappa_calibrate: slice " + std::to_string(s) + " block " + std::to_string(block) +
                 " has " + std::to_string(m) + " ACS fitting positions but needs at least " +
                 std::to_string(active.size()) + " (one per kernel tap)");
      }

      Eigen::MatrixXcd a(m, active.size());
      Eigen::MatrixXcd b(m, coils_out);
      std::size_t row = 0;
      for (std::size_t j : cols) {
        for (std::size_t r = hr; r + hr < rows; ++r, ++row) {
          for (std::size_t t = 0; t < active.size(); ++t) {
            const auto& tap = active[t];
            a(row, t) = source.coil(tap.in)(r + tap.dr - hr, j + tap.dc - hc);
          }
          for (std::size_t o = 0; o < coils_out; ++o) b(row, o) = target.coil(o)(r, j);
        }
      }

      const Eigen::MatrixXcd weights = solve_ridge(a, b, options.ridge, s);
      residual_sq += (a * weights - b).squaredNorm();
      target_sq += b.squaredNorm();
      for (std::size_t o = 0; o < coils_out; ++o) {
        for (std::size_t t = 0; t < active.size(); ++t) {
          const auto& tap = active[t];
          kernel.tap(block, o, tap.in, tap.dr, tap.dc) = weights(t, o);
        }
      }
    }
    kernel.residual = target_sq > 0.0 ? std::sqrt(residual_sq / target_sq) : std::sqrt(residual_sq);
    kernels.push_back(std::move(kernel));
  }
  return kernels;
}

MultiCoilKSpace slice_grappa_apply(const MultiCoilKSpace& aligned, const GrappaKernel& kernel) {
  require(aligned.coils() == kernel.coils_in, ErrorKind::Shape,
          "slice_grappa_apply: kernel expects " + std::to_string(kernel.coils_in) +
              " input coils, got " + std::to_string(aligned.coils()));
  require(kernel.taps.size() == kernel.pattern.period, ErrorKind::Shape,
          "slice_grappa_apply: kernel block count does not match its sampling period");
  const std::size_t rows = aligned.rows();
  const std::size_t cols = aligned.cols();
  const auto hr = static_cast<std::ptrdiff_t>(kernel.window.rows / 2);
  const auto hc = static_cast<std::ptrdiff_t>(kernel.window.cols / 2);

  std::vector<bool> sampled(cols);
  for (std::size_t j = 0; j < cols; ++j) sampled[j] = kernel.pattern.sampled(j);

  MultiCoilKSpace out(kernel.coils_out, rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const auto& block = kernel.taps[block_of(kernel.pattern, j)];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < kernel.coils_out; ++o) {
        cplx acc(0.0, 0.0);
        for (std::size_t in = 0; in < kernel.coils_in; ++in) {
          const ComplexGrid& src = aligned.coil(in);
          for (std::size_t dr = 0; dr < kernel.window.rows; ++dr) {
            const auto sr = static_cast<std::ptrdiff_t>(r + dr) - hr;
            if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(rows)) continue;
            const std::size_t base = ((o * kernel.coils_in + in) * kernel.window.rows + dr) *
                                     kernel.window.cols;
            for (std::size_t dc = 0; dc < kernel.window.cols; ++dc) {
              const auto sc = static_cast<std::ptrdiff_t>(j + dc) - hc;
              if (sc < 0 || sc >= static_cast<std::ptrdiff_t>(cols) || !sampled[sc]) continue;
              acc += block[base + dc] * src(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
            }
          }
        }
        out.coil(o)(r, j) = acc;
      }
    }
  }
  return out;
}

MultiCoilKSpace inplane_complete(const MultiCoilKSpace& k, const SamplingMask& mask,
                                 KernelWindow window, double ridge) {
  require(k.rows() == mask.rows() && k.cols() == mask.cols(), ErrorKind::Shape,
          "inplane_complete: grid does not match mask");
  const PhaseEncodePattern pattern = detect_pattern(mask);
  if (mask.all_kept()) return k;
  const CaipiScheme single({0.0}, k.rows(), k.cols());
  const auto kernels = grappa_calibrate(k, SliceStack({k}), single, mask.acs(),
                                        {window, ridge, pattern});
  const MultiCoilKSpace estimate = slice_grappa_apply(k, kernels.front());
  MultiCoilKSpace out = k;
  for (std::size_t c = 0; c < k.coils(); ++c) {
    for (std::size_t r = 0; r < k.rows(); ++r) {
      for (std::size_t j = 0; j < k.cols(); ++j) {
        if (!mask.kept(r, j)) out.coil(c)(r, j) = estimate.coil(c)(r, j);
      }
    }
  }
  return out;
}

std::vector<MultiCoilKSpace> low_frequency_anchor(const MultiCoilKSpace& y,
                                                  const SamplingMask& mask,
                                                  const CaipiScheme& scheme,
                                                  const std::vector<GrappaKernel>& kernels) {
  require(!mask.acs().empty(), ErrorKind::DegenerateInput, "low_frequency_anchor: ACS band is empty");
  require(kernels.size() == scheme.b(), ErrorKind::Configuration,
          "low_frequency_anchor: expected " + std::to_string(scheme.b()) + " kernels, got " +
              std::to_string(kernels.size()));
  std::vector<MultiCoilKSpace> anchors;
  anchors.reserve(scheme.b());
  for (std::size_t s = 0; s < scheme.b(); ++s) {
    require(kernels[s].target_slice == s, ErrorKind::Configuration,
            "low_frequency_anchor: kernels are not ordered by target slice");
    anchors.push_back(restrict_to_band(slice_grappa_apply(caipi_inverse(y, scheme, s), kernels[s]),
                                       mask.acs()));
  }
  return anchors;
}

}  // namespace smsrecon
