#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smsrecon/simulation.hpp"

namespace smsrecon::cli {

namespace fs = std::filesystem;

using KeyValues = std::map<std::string, std::string>;

/// Case bundle as stored on disk. Values are the fp32 file contents widened to fp64.
struct CaseBundle {
  std::optional<SliceStack> truth;
  CaipiScheme scheme;
  SamplingMask mask;
  MultiCoilKSpace measurement;
  std::optional<CoilSensitivitySet> sensitivities;
  KeyValues provenance;
};

std::string truth_name(std::size_t s);
std::string sens_name(std::size_t s);
std::string kernel_name(std::size_t s);
std::string recon_name(std::size_t s);
std::string stage_m_name(std::size_t s);
std::string rss_name(std::size_t s);

std::string format_key_values(const KeyValues& kv);
KeyValues parse_key_values(const std::string& text);

/// scheme.txt: rows, cols, b, shifts, acs_begin, acs_end.
std::string format_scheme(const CaipiScheme& scheme, AcsBand acs);
std::pair<CaipiScheme, AcsBand> parse_scheme(const std::string& text);

void write_case_bundle(const fs::path& dir, const std::optional<SliceStack>& truth,
                       const CaipiScheme& scheme, const SamplingMask& mask,
                       const MultiCoilKSpace& measurement,
                       const std::optional<CoilSensitivitySet>& sensitivities,
                       const KeyValues& provenance);
void write_case_bundle(const fs::path& dir, const DatasetCase& c);
CaseBundle read_case_bundle(const fs::path& dir);

/// kernel_s<i>.kst holds taps as a complex [blocks, coils_out, coils_in, rows, cols]
/// tensor; calibration.txt one record per kernel.
void write_kernels(const fs::path& dir, const std::vector<GrappaKernel>& kernels);
/// Missing kernel files raise a configuration error.
std::vector<GrappaKernel> read_kernels(const fs::path& dir, std::size_t b);
bool has_kernels(const fs::path& dir, std::size_t b);

struct ResultBundle {
  std::vector<MultiCoilKSpace> recon;
  std::vector<MultiCoilKSpace> stage_m;  // empty for baselines
  std::vector<MagnitudeImage> images;
  KeyValues provenance;
  std::vector<double> slice_seconds;
};

void write_result_bundle(const fs::path& dir, const ResultBundle& result);
/// Reads the per-slice k-space of a result bundle.
std::vector<MultiCoilKSpace> read_result_recon(const fs::path& dir);

}  // namespace smsrecon::cli
