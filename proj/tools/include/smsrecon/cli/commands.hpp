#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "smsrecon/cli/bundle.hpp"
#include "smsrecon/metrics.hpp"
#include "smsrecon/transport.hpp"

namespace smsrecon::cli {

/// Process exit status for an error kind: 2 configuration, 3 data,
/// 4 transport, 5 numerical.
int exit_code(ErrorKind kind) noexcept;

struct SimulateOptions {
  fs::path config;
  std::optional<fs::path> out;  // overrides [output] directory
};
/// Returns the bundle directory.
fs::path cmd_simulate(const SimulateOptions& opt);

struct CalibrateOptions {
  fs::path bundle;
  KernelWindow window;
  double ridge = 1e-4;
  std::optional<fs::path> out;  // defaults to the bundle
};
std::vector<GrappaKernel> cmd_calibrate(const CalibrateOptions& opt);

struct ReconstructOptions {
  fs::path bundle;
  std::string method = "ocdi";  // ocdi | sense | slice-grappa | zero-fill
  std::optional<std::string> predictor;  // oracle | grappa | external (ocdi only)
  std::optional<std::string> predictor_u;  // stage-U override
  std::string endpoint;
  std::optional<fs::path> kernels;  // defaults to the bundle
  fs::path out;
  std::size_t t_m = 10;
  std::size_t t_u = 10;
  std::size_t guidance_interval = 2;
  bool anchor = true;
  KernelWindow inplane_window;
  double inplane_ridge = 1e-4;
  double tikhonov = 1e-3;
  double timeout_seconds = 30.0;
};
ResultBundle cmd_reconstruct(const ReconstructOptions& opt);

struct EvaluateOptions {
  fs::path result;
  fs::path truth;
  std::optional<fs::path> out;    // defaults to <result>/report.txt
  std::optional<fs::path> plots;  // PGM panels: reference | reconstruction | 10x error
};
std::vector<MetricReport> cmd_evaluate(const EvaluateOptions& opt);

/// Reference predictor handlers. `oracle` needs a bundle with ground truth and
/// recovers the target slice from the incoming state.
PredictHandler make_serve_handler(const std::string& mode, const std::optional<fs::path>& bundle);

struct ServeOptions {
  std::string mode = "echo";  // zero | echo | oracle
  std::optional<fs::path> bundle;
  std::optional<std::uint16_t> listen;  // stdio when absent
};
void cmd_serve(const ServeOptions& opt);

/// Binary PGM (P5) of a [0, 1] image, clipped.
void write_pgm(const fs::path& path, const MagnitudeImage& image);

}  // namespace smsrecon::cli
