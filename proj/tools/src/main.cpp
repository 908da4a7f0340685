#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "smsrecon/cli/commands.hpp"
#include "smsrecon/run_config.hpp"

using namespace smsrecon;
using namespace smsrecon::cli;

int main(int argc, char** argv) {
  CLI::App app{"smsrecon: simultaneous multi-slice k-space reconstruction"};
  app.require_subcommand(1);

  SimulateOptions sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Build a phantom case bundle from a run config");
  simulate->add_option("--config", sim.config, "Run config file")->required();
  simulate->add_option("--out", sim_out, "Bundle directory (overrides [output] directory)");

  CalibrateOptions cal;
  std::string cal_out;
  std::string cal_config;
  auto* calibrate = app.add_subcommand("calibrate", "Fit slice-GRAPPA kernels on the ACS band");
  calibrate->add_option("--bundle", cal.bundle, "Case bundle")->required();
  auto* cal_rows = calibrate->add_option("--kernel-rows", cal.window.rows, "Kernel window rows");
  auto* cal_cols = calibrate->add_option("--kernel-cols", cal.window.cols, "Kernel window columns");
  auto* cal_ridge = calibrate->add_option("--ridge", cal.ridge, "Relative ridge weight");
  calibrate->add_option("--out", cal_out, "Kernel directory (defaults to the bundle)");
  calibrate->add_option("--config", cal_config, "Run config supplying defaults");

  ReconstructOptions rec;
  std::string rec_predictor;
  std::string rec_predictor_u;
  std::string rec_kernels;
  std::string rec_config;
  bool no_anchor = false;
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct every slice of a bundle");
  reconstruct->add_option("--bundle", rec.bundle, "Case bundle")->required();
  reconstruct->add_option("--out", rec.out, "Result directory")->required();
  reconstruct->add_option("--method", rec.method, "ocdi | sense | slice-grappa | zero-fill")
      ->check(CLI::IsMember({"ocdi", "sense", "slice-grappa", "zero-fill"}));
  auto* rec_pred = reconstruct->add_option("--predictor", rec_predictor, "oracle | grappa | external")
                       ->check(CLI::IsMember({"oracle", "grappa", "external"}));
  auto* rec_pred_u = reconstruct->add_option("--predictor-u", rec_predictor_u, "Stage-U predictor override")
                         ->check(CLI::IsMember({"oracle", "grappa", "external"}));
  auto* rec_endpoint =
      reconstruct->add_option("--endpoint", rec.endpoint, "subprocess:<command> or tcp:<host>:<port>");
  reconstruct->add_option("--kernels", rec_kernels, "Kernel directory (defaults to the bundle)");
  auto* rec_tm = reconstruct->add_option("--t-m", rec.t_m, "Stage-M steps");
  auto* rec_tu = reconstruct->add_option("--t-u", rec.t_u, "Stage-U steps");
  auto* rec_g = reconstruct->add_option("--guidance-interval", rec.guidance_interval, "Anchor interval G");
  auto* rec_noanchor = reconstruct->add_flag("--no-anchor", no_anchor, "Disable the low-frequency anchor");
  auto* rec_iridge = reconstruct->add_option("--inplane-ridge", rec.inplane_ridge, "In-plane relative ridge");
  reconstruct->add_option("--tikhonov", rec.tikhonov, "SENSE Tikhonov weight");
  reconstruct->add_option("--timeout", rec.timeout_seconds, "External predictor timeout in seconds");
  reconstruct->add_option("--config", rec_config, "Run config supplying [inference] defaults");

  EvaluateOptions ev;
  std::string ev_out;
  std::string ev_plots;
  auto* evaluate = app.add_subcommand("evaluate", "Score a result bundle against a truth bundle");
  evaluate->add_option("--result", ev.result, "Result directory")->required();
  evaluate->add_option("--truth", ev.truth, "Case bundle with ground truth")->required();
  evaluate->add_option("--out", ev_out, "Report path (defaults to <result>/report.txt)");
  evaluate->add_option("--plots", ev_plots, "Directory for PGM panels");

  ServeOptions srv;
  std::string srv_bundle;
  int srv_port = -1;
  auto* serve = app.add_subcommand("serve", "Run a reference predictor server");
  serve->add_option("--mode", srv.mode, "zero | echo | oracle")->check(CLI::IsMember({"zero", "echo", "oracle"}));
  serve->add_option("--bundle", srv_bundle, "Case bundle (oracle mode)");
  serve->add_option("--listen", srv_port, "TCP port on 127.0.0.1 (0 picks one); stdio when omitted")
      ->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      if (!sim_out.empty()) sim.out = sim_out;
      std::cout << cmd_simulate(sim).string() << "\n";
    } else if (*calibrate) {
      if (!cal_config.empty()) {
        const RunConfig cfg = load_run_config(cal_config);
        if (!*cal_rows) cal.window.rows = cfg.kernel_window.rows;
        if (!*cal_cols) cal.window.cols = cfg.kernel_window.cols;
        if (!*cal_ridge) cal.ridge = cfg.ridge;
      }
      if (!cal_out.empty()) cal.out = cal_out;
      for (const auto& k : cmd_calibrate(cal)) {
        std::printf("slice=%zu residual=%.17g\n", k.target_slice, k.residual);
      }
    } else if (*reconstruct) {
      if (!rec_config.empty()) {
        const RunConfig cfg = load_run_config(rec_config);
        if (!*rec_tm) rec.t_m = cfg.t_m;
        if (!*rec_tu) rec.t_u = cfg.t_u;
        if (!*rec_g) rec.guidance_interval = cfg.guidance_interval;
        if (!*rec_noanchor) no_anchor = !cfg.anchor;
        if (!*rec_iridge) rec.inplane_ridge = cfg.inplane_ridge;
        if (!*rec_endpoint) rec.endpoint = cfg.endpoint;
        if (rec.method == "ocdi" && !*rec_pred) {
          rec_predictor = cfg.predictor_m;
          if (!*rec_pred_u) rec_predictor_u = cfg.predictor_u;
        }
        rec.inplane_window = cfg.kernel_window;
      }
      if (!rec_predictor.empty()) rec.predictor = rec_predictor;
      if (!rec_predictor_u.empty()) rec.predictor_u = rec_predictor_u;
      if (!rec_kernels.empty()) rec.kernels = rec_kernels;
      rec.anchor = !no_anchor;
      const ResultBundle r = cmd_reconstruct(rec);
      std::printf("%s: %zu slices written to %s\n", rec.method.c_str(), r.recon.size(), rec.out.c_str());
    } else if (*evaluate) {
      if (!ev_out.empty()) ev.out = ev_out;
      if (!ev_plots.empty()) ev.plots = ev_plots;
      std::cout << format_report(cmd_evaluate(ev));
    } else if (*serve) {
      if (!srv_bundle.empty()) srv.bundle = srv_bundle;
      if (srv_port >= 0) srv.listen = static_cast<std::uint16_t>(srv_port);
      cmd_serve(srv);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "smsrecon: %s error: %s\n", std::string(to_string(e.kind())).c_str(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "smsrecon: %s\n", e.what());
    return 1;
  }
  return 0;
}
