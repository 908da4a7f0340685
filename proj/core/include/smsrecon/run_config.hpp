#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smsrecon/predictors.hpp"
#include "smsrecon/simulation.hpp"
#include "smsrecon/tensor_file.hpp"

namespace smsrecon {

/// Run description read from an INI-style file:
///
///   [phantom]   rows cols coils variant_seed noise_sigma
///   [scheme]    b shifts (comma list; default standard)
///   [mask]      r acs
///   [inference] t_m t_u guidance_interval anchor predictor_m predictor_u
///               endpoint kernel_rows kernel_cols ridge inplane_ridge
///   [seeds]     noise
///   [output]    directory
///
/// Every key is optional. Unknown sections or keys raise a configuration error
/// naming `section.key`. Relative paths resolve against the file's directory.
struct RunConfig {
  PhantomSpec phantom;
  std::optional<std::vector<double>> shifts;
  std::size_t r = 2;
  std::size_t acs = 32;
  std::size_t t_m = 10;
  std::size_t t_u = 10;
  std::size_t guidance_interval = 2;
  bool anchor = true;
  std::string predictor_m = "grappa";
  std::string predictor_u = "grappa";
  std::string endpoint;
  KernelWindow kernel_window;
  double ridge = 1e-4;
  double inplane_ridge = 1e-4;
  std::uint64_t noise_seed = 0;
  std::filesystem::path output_dir = "out";

  CaipiScheme scheme() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& cfg);

}  // namespace smsrecon
