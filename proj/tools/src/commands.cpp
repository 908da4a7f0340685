#include "smsrecon/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "smsrecon/baselines.hpp"
#include "smsrecon/inference.hpp"
#include "smsrecon/run_config.hpp"
#include "smsrecon/tensor_file.hpp"

namespace smsrecon::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const SliceStack& need_truth(const CaseBundle& b, const fs::path& dir, const char* why) {
  if (!b.truth) {
    fail(ErrorKind::Configuration, std::string(why) + " needs per-slice reference data (truth_s<i>.kst) in " +
                                       dir.string());
  }
  return *b.truth;
}

PredictorKind predictor_kind(const std::string& name, const CaseBundle& b, const fs::path& dir,
                             const std::shared_ptr<const SliceStack>& truth,
                             std::shared_ptr<ExternalPredictor>& external, const ReconstructOptions& opt) {
  if (name == "oracle") {
    need_truth(b, dir, "the oracle predictor");
    return OracleKind{truth};
  }
  if (name == "grappa") return CalibratedKind{};
  if (name == "external") {
    if (opt.endpoint.empty()) fail(ErrorKind::Configuration, "the external predictor needs --endpoint");
    if (!external) {
      const auto timeout = std::chrono::milliseconds(static_cast<long long>(opt.timeout_seconds * 1000.0));
      external = std::make_shared<ExternalPredictor>(Endpoint::parse(opt.endpoint), timeout);
    }
    return ExternalKind{external};
  }
  fail(ErrorKind::Configuration, "unknown predictor '" + name + "' (expected oracle, grappa or external)");
}

struct Candidate {
  MultiCoilKSpace target;
  MultiCoilKSpace degradation;
};

double residual(const MultiCoilKSpace& x, const Candidate& c) {
  // Best alpha for x = target + alpha * d, then the remaining misfit.
  double dd = 0.0;
  double dr = 0.0;
  for (std::size_t coil = 0; coil < x.coils(); ++coil) {
    const auto xv = x.coil(coil).data();
    const auto kv = c.target.coil(coil).data();
    const auto d = c.degradation.coil(coil).data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      dd += std::norm(d[i]);
      dr += (std::conj(d[i]) * (xv[i] - kv[i])).real();
    }
  }
  const double alpha = dd > 0.0 ? dr / dd : 0.0;
  double res = 0.0;
  for (std::size_t coil = 0; coil < x.coils(); ++coil) {
    const auto xv = x.coil(coil).data();
    const auto kv = c.target.coil(coil).data();
    const auto d = c.degradation.coil(coil).data();
    for (std::size_t i = 0; i < xv.size(); ++i) res += std::norm(xv[i] - kv[i] - alpha * d[i]);
  }
  return res;
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Configuration:
    case ErrorKind::Argument:
      return 2;
    case ErrorKind::InvalidData:
    case ErrorKind::Shape:
    case ErrorKind::Index:
    case ErrorKind::DegenerateInput:
    case ErrorKind::UnsupportedMask:
    case ErrorKind::Io:
    case ErrorKind::Evaluation:
      return 3;
    case ErrorKind::Protocol:
    case ErrorKind::Transport:
      return 4;
    case ErrorKind::Calibration:
    case ErrorKind::Solver:
    case ErrorKind::StepUnderflow:
    case ErrorKind::NearZeroAlpha:
    case ErrorKind::Reconstruction:
      return 5;
  }
  return 1;
}

fs::path cmd_simulate(const SimulateOptions& opt) {
  const RunConfig cfg = load_run_config(opt.config);
  const fs::path out = opt.out.value_or(cfg.output_dir);
  const DatasetCase c = build_case(cfg.phantom, cfg.scheme(), cfg.r, cfg.acs, cfg.noise_seed);
  write_case_bundle(out, c);
  return out;
}

std::vector<GrappaKernel> cmd_calibrate(const CalibrateOptions& opt) {
  const CaseBundle b = read_case_bundle(opt.bundle);
  const SliceStack& truth = need_truth(b, opt.bundle, "calibration");
  CalibrationOptions co;
  co.window = opt.window;
  co.ridge = opt.ridge;
  co.pattern = detect_pattern(b.mask);
  const AcsBand band = b.mask.acs();
  auto kernels = grappa_calibrate(b.measurement, acs_reference(truth, band), b.scheme, band, co);
  write_kernels(opt.out.value_or(opt.bundle), kernels);
  return kernels;
}

ResultBundle cmd_reconstruct(const ReconstructOptions& opt) {
  const std::string& method = opt.method;
  if (method != "ocdi" && method != "sense" && method != "slice-grappa" && method != "zero-fill") {
    fail(ErrorKind::Configuration,
         "unknown method '" + method + "' (expected ocdi, sense, slice-grappa or zero-fill)");
  }
  if (method != "ocdi" && (opt.predictor || opt.predictor_u)) {
    fail(ErrorKind::Configuration, "--predictor applies to --method ocdi only");
  }
  const CaseBundle b = read_case_bundle(opt.bundle);
  const fs::path kernel_dir = opt.kernels.value_or(opt.bundle);
  const std::size_t slices = b.scheme.b();

  ResultBundle out;
  out.provenance["method"] = method;
  if (method == "zero-fill") {
    for (std::size_t s = 0; s < slices; ++s) out.recon.push_back(zero_fill_reconstruct(b.measurement, b.scheme, s));
  } else if (method == "slice-grappa") {
    const auto kernels = read_kernels(kernel_dir, slices);
    out.recon = slice_grappa_reconstruct(b.measurement, b.scheme, b.mask, kernels, opt.inplane_window,
                                         opt.inplane_ridge);
    out.provenance["inplane_ridge"] = fmt(opt.inplane_ridge);
  } else if (method == "sense") {
    CoilSensitivitySet sens;
    if (b.truth) {
      sens = estimate_sensitivities(acs_reference(*b.truth, b.mask.acs()), b.mask.acs());
      out.provenance["sensitivities"] = "acs-estimate";
    } else if (b.sensitivities) {
      sens = *b.sensitivities;
      out.provenance["sensitivities"] = "bundle";
    } else {
      fail(ErrorKind::Configuration, "sense needs reference data or sens_s<i>.kst in the bundle");
    }
    const SliceStack rec = sense_reconstruct(b.measurement, b.scheme, b.mask, sens, opt.tikhonov);
    for (const auto& s : rec.slices()) out.recon.push_back(s);
    out.provenance["tikhonov"] = fmt(opt.tikhonov);
  } else {
    const std::string pm = opt.predictor.value_or("grappa");
    const std::string pu = opt.predictor_u.value_or(pm);
    std::shared_ptr<const SliceStack> truth;
    if (b.truth) truth = std::make_shared<const SliceStack>(*b.truth);
    std::shared_ptr<ExternalPredictor> external;
    InferenceConfig cfg;
    cfg.t_m = opt.t_m;
    cfg.t_u = opt.t_u;
    cfg.guidance_interval = opt.guidance_interval;
    cfg.use_anchor = opt.anchor;
    cfg.inplane_window = opt.inplane_window;
    cfg.inplane_ridge = opt.inplane_ridge;
    cfg.predictor_m = predictor_kind(pm, b, opt.bundle, truth, external, opt);
    cfg.predictor_u = predictor_kind(pu, b, opt.bundle, truth, external, opt);
    // Kernels drive the calibrated predictor and the anchor; other predictors
    // use the anchor only when kernels are named explicitly.
    if (pm == "grappa" || pu == "grappa" || opt.kernels) cfg.kernels = read_kernels(kernel_dir, slices);
    ReconstructionResult r = reconstruct_all(b.measurement, b.scheme, b.mask, cfg);
    out.recon = std::move(r.full);
    out.stage_m = std::move(r.stage_m);
    out.images = std::move(r.images);
    out.slice_seconds = r.provenance.slice_seconds;
    for (const auto& [k, v] : r.provenance.settings) out.provenance[k] = v;
    out.provenance["predictor_m"] = pm;
    out.provenance["predictor_u"] = pu;
    if (external) out.provenance["endpoint"] = external->endpoint().describe();
  }
  if (out.images.empty()) {
    for (const auto& k : out.recon) out.images.push_back(rss_combine(k));
  }
  write_result_bundle(opt.out, out);
  return out;
}

std::vector<MetricReport> cmd_evaluate(const EvaluateOptions& opt) {
  const auto recon = read_result_recon(opt.result);
  const CaseBundle truth_bundle = read_case_bundle(opt.truth);
  const SliceStack& truth = need_truth(truth_bundle, opt.truth, "evaluation");
  if (recon.size() != truth.b()) {
    fail(ErrorKind::Evaluation, "evaluate: result has " + std::to_string(recon.size()) +
                                    " slices, reference has " + std::to_string(truth.b()));
  }
  std::vector<MagnitudeImage> images;
  for (std::size_t s = 0; s < recon.size(); ++s) {
    if (!recon[s].same_shape(truth.slice(s))) {
      fail(ErrorKind::Evaluation, "evaluate: slice " + std::to_string(s) + " shape differs from the reference");
    }
    images.push_back(rss_combine(recon[s]));
  }
  const auto reports = evaluate_images(images, truth);
  write_text_atomic(opt.out.value_or(opt.result / "report.txt"), format_report(reports));
  if (opt.plots) {
    std::error_code ec;
    fs::create_directories(*opt.plots, ec);
    if (!fs::is_directory(*opt.plots)) fail(ErrorKind::Io, "cannot create " + opt.plots->string());
    for (std::size_t s = 0; s < images.size(); ++s) {
      const MagnitudeImage ref = scale_magnitude(rss_combine(truth.slice(s)), reports[s].scale);
      const MagnitudeImage rec = scale_magnitude(images[s], reports[s].scale);
      const std::size_t rows = ref.rows();
      const std::size_t cols = ref.cols();
      MagnitudeImage panel(rows, 3 * cols);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          panel(r, c) = ref(r, c);
          panel(r, cols + c) = rec(r, c);
          panel(r, 2 * cols + c) = 10.0 * std::abs(rec(r, c) - ref(r, c));
        }
      }
      write_pgm(*opt.plots / ("slice_" + std::to_string(s) + ".pgm"), panel);
    }
  }
  return reports;
}

PredictHandler make_serve_handler(const std::string& mode, const std::optional<fs::path>& bundle) {
  if (mode == "zero") {
    return [](const MultiCoilKSpace& x, double, Stage) { return MultiCoilKSpace(x.coils(), x.rows(), x.cols()); };
  }
  if (mode == "echo") {
    return [](const MultiCoilKSpace& x, double, Stage) { return x; };
  }
  if (mode != "oracle") fail(ErrorKind::Configuration, "unknown serve mode '" + mode + "' (zero, echo, oracle)");
  if (!bundle) fail(ErrorKind::Configuration, "serve --mode oracle needs --bundle");
  const CaseBundle b = read_case_bundle(*bundle);
  const SliceStack& truth = need_truth(b, *bundle, "the oracle server");
  auto stage_m = std::make_shared<std::vector<Candidate>>();
  auto stage_u = std::make_shared<std::vector<Candidate>>();
  const SliceStack source = b.mask.all_kept() ? truth : apply_mask(truth, b.mask);
  for (std::size_t s = 0; s < truth.b(); ++s) {
    Degradation dm = degradation_m(source, b.scheme, s);
    stage_m->push_back({target_aligned_collapse(source, b.scheme, s) - dm.value, std::move(dm.value)});
    stage_u->push_back({truth.slice(s), degradation_u(truth.slice(s), b.mask).value});
  }
  return [stage_m, stage_u](const MultiCoilKSpace& x, double, Stage stage) {
    const auto& candidates = stage == Stage::M ? *stage_m : *stage_u;
    require(candidates.front().target.same_shape(x), ErrorKind::Shape,
            "oracle server: request shape does not match the bundle");
    std::size_t best = 0;
    double best_res = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < candidates.size(); ++s) {
      const double r = residual(x, candidates[s]);
      if (r < best_res) {
        best_res = r;
        best = s;
      }
    }
    return candidates[best].degradation;
  };
}

void cmd_serve(const ServeOptions& opt) {
  PredictHandler handler = make_serve_handler(opt.mode, opt.bundle);
  if (opt.listen) {
    TcpPredictorServer server(handler, *opt.listen);
    std::printf("port=%u\n", static_cast<unsigned>(server.port()));
    std::fflush(stdout);
    server.wait();
    return;
  }
  FdStream stream(0, 1);
  serve_stream(stream, handler);
}

void write_pgm(const fs::path& path, const MagnitudeImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (double v : image.values()) {
    bytes.push_back(static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))));
  }
  write_file_atomic(path, bytes);
}

}  // namespace smsrecon::cli
