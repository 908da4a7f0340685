#include "smsrecon/cli/bundle.hpp"

#include <cstdio>
#include <sstream>

#include "smsrecon/tensor_file.hpp"

namespace smsrecon::cli {

namespace {

std::string indexed(const char* stem, std::size_t s) {
  return std::string(stem) + "_s" + std::to_string(s) + ".kst";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::string& lookup(const KeyValues& kv, const std::string& key, const char* where) {
  const auto it = kv.find(key);
  if (it == kv.end()) fail(ErrorKind::InvalidData, std::string(where) + ": missing key '" + key + "'");
  return it->second;
}

std::size_t to_size(const std::string& v, const char* where) {
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used == v.size()) return static_cast<std::size_t>(n);
  } catch (const std::logic_error&) {
  }
  fail(ErrorKind::InvalidData, std::string(where) + ": bad integer '" + v + "'");
}

double to_double(const std::string& v, const char* where) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  fail(ErrorKind::InvalidData, std::string(where) + ": bad number '" + v + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::Io, "cannot create directory " + dir.string());
}

}  // namespace

std::string truth_name(std::size_t s) { return indexed("truth", s); }
std::string sens_name(std::size_t s) { return indexed("sens", s); }
std::string kernel_name(std::size_t s) { return indexed("kernel", s); }
std::string recon_name(std::size_t s) { return indexed("recon", s); }
std::string stage_m_name(std::size_t s) { return indexed("stage_m", s); }
std::string rss_name(std::size_t s) { return indexed("rss", s); }

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::InvalidData, "expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string format_scheme(const CaipiScheme& scheme, AcsBand acs) {
  KeyValues kv;
  kv["rows"] = std::to_string(scheme.rows());
  kv["cols"] = std::to_string(scheme.cols());
  kv["b"] = std::to_string(scheme.b());
  std::string shifts;
  for (std::size_t s = 0; s < scheme.b(); ++s) shifts += (s ? "," : "") + fmt(scheme.shift(s));
  kv["shifts"] = shifts;
  kv["acs_begin"] = std::to_string(acs.begin);
  kv["acs_end"] = std::to_string(acs.end);
  return format_key_values(kv);
}

std::pair<CaipiScheme, AcsBand> parse_scheme(const std::string& text) {
  const KeyValues kv = parse_key_values(text);
  const char* where = "scheme.txt";
  const std::size_t b = to_size(lookup(kv, "b", where), where);
  std::vector<double> shifts;
  std::istringstream in(lookup(kv, "shifts", where));
  std::string item;
  while (std::getline(in, item, ',')) shifts.push_back(to_double(item, where));
  require(shifts.size() == b, ErrorKind::InvalidData, "scheme.txt: shift count does not match b");
  AcsBand acs{to_size(lookup(kv, "acs_begin", where), where), to_size(lookup(kv, "acs_end", where), where)};
  CaipiScheme scheme(std::move(shifts), to_size(lookup(kv, "rows", where), where),
                     to_size(lookup(kv, "cols", where), where));
  return {std::move(scheme), acs};
}

void write_case_bundle(const fs::path& dir, const std::optional<SliceStack>& truth,
                       const CaipiScheme& scheme, const SamplingMask& mask,
                       const MultiCoilKSpace& measurement,
                       const std::optional<CoilSensitivitySet>& sensitivities,
                       const KeyValues& provenance) {
  ensure_dir(dir);
  if (truth) {
    for (std::size_t s = 0; s < truth->b(); ++s) write_tensor(dir / truth_name(s), to_tensor(truth->slice(s)));
  }
  if (sensitivities) {
    for (std::size_t s = 0; s < sensitivities->b(); ++s) {
      write_tensor(dir / sens_name(s), to_tensor(sensitivities->slice(s)));
    }
  }
  write_tensor(dir / "measurement.kst", to_tensor(measurement));
  write_tensor(dir / "mask.kst", mask_to_tensor(mask));
  write_text_atomic(dir / "scheme.txt", format_scheme(scheme, mask.acs()));
  write_text_atomic(dir / "provenance.txt", format_key_values(provenance));
}

void write_case_bundle(const fs::path& dir, const DatasetCase& c) {
  write_case_bundle(dir, c.truth, c.scheme, c.mask, c.measurement, c.sensitivities, c.provenance());
}

CaseBundle read_case_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "bundle directory not found: " + dir.string());
  auto [scheme, acs] = parse_scheme(read_text(dir / "scheme.txt"));
  SamplingMask mask = tensor_to_mask(read_tensor(dir / "mask.kst"), acs);
  MultiCoilKSpace y = to_multicoil(read_tensor(dir / "measurement.kst"));
  require(y.rows() == scheme.rows() && y.cols() == scheme.cols() && mask.rows() == y.rows() &&
              mask.cols() == y.cols(),
          ErrorKind::InvalidData, "bundle " + dir.string() + ": inconsistent shapes");
  std::optional<SliceStack> truth;
  if (fs::exists(dir / truth_name(0))) {
    std::vector<MultiCoilKSpace> slices;
    for (std::size_t s = 0; s < scheme.b(); ++s) slices.push_back(to_multicoil(read_tensor(dir / truth_name(s))));
    truth = SliceStack(std::move(slices));
    require(truth->slice(0).same_shape(y), ErrorKind::InvalidData,
            "bundle " + dir.string() + ": truth shape differs from the measurement");
  }
  std::optional<CoilSensitivitySet> sens;
  if (fs::exists(dir / sens_name(0))) {
    std::vector<MultiCoilKSpace> maps;
    for (std::size_t s = 0; s < scheme.b(); ++s) maps.push_back(to_multicoil(read_tensor(dir / sens_name(s))));
    // fp32 storage perturbs the unit-RSS normalization slightly.
    sens = CoilSensitivitySet::normalized(std::move(maps));
  }
  KeyValues prov;
  if (fs::exists(dir / "provenance.txt")) prov = parse_key_values(read_text(dir / "provenance.txt"));
  return CaseBundle{std::move(truth), std::move(scheme), std::move(mask), std::move(y), std::move(sens),
                    std::move(prov)};
}

void write_kernels(const fs::path& dir, const std::vector<GrappaKernel>& kernels) {
  ensure_dir(dir);
  std::string report;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const auto& k = kernels[i];
    MultiCoilKSpace flat(k.taps.size(), 1, k.taps_per_block());
    for (std::size_t blk = 0; blk < k.taps.size(); ++blk) {
      auto d = flat.coil(blk).data();
      std::copy(k.taps[blk].begin(), k.taps[blk].end(), d.begin());
    }
    TensorFile t = to_tensor(flat);
    t.dims = {k.taps.size(), k.coils_out, k.coils_in, k.window.rows, k.window.cols};
    write_tensor(dir / kernel_name(i), t);
    report += "slice=" + std::to_string(i) + " target=" + std::to_string(k.target_slice) +
              " period=" + std::to_string(k.pattern.period) + " offset=" + std::to_string(k.pattern.offset) +
              " ridge=" + fmt(k.ridge) + " residual=" + fmt(k.residual) + "\n";
  }
  write_text_atomic(dir / "calibration.txt", report);
}

bool has_kernels(const fs::path& dir, std::size_t b) {
  if (!fs::exists(dir / "calibration.txt")) return false;
  for (std::size_t s = 0; s < b; ++s) {
    if (!fs::exists(dir / kernel_name(s))) return false;
  }
  return true;
}

std::vector<GrappaKernel> read_kernels(const fs::path& dir, std::size_t b) {
  if (!has_kernels(dir, b)) {
    fail(ErrorKind::Configuration, "no calibrated kernels in " + dir.string() + "; run calibrate first");
  }
  std::vector<KeyValues> records;
  {
    std::istringstream in(read_text(dir / "calibration.txt"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream fields(line);
      std::string token;
      KeyValues kv;
      while (fields >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) fail(ErrorKind::InvalidData, "calibration.txt: malformed field");
        kv[token.substr(0, eq)] = token.substr(eq + 1);
      }
      records.push_back(std::move(kv));
    }
  }
  require(records.size() == b, ErrorKind::InvalidData, "calibration.txt: expected one record per slice");
  std::vector<GrappaKernel> kernels;
  const char* where = "calibration.txt";
  for (std::size_t s = 0; s < b; ++s) {
    TensorFile t = read_tensor(dir / kernel_name(s));
    require(t.dtype == TensorDtype::ComplexF32 && t.dims.size() == 5, ErrorKind::InvalidData,
            kernel_name(s) + ": expected a complex rank-5 tensor");
    const auto& kv = records[s];
    PhaseEncodePattern pattern{to_size(lookup(kv, "period", where), where),
                               to_size(lookup(kv, "offset", where), where)};
    require(t.dims[0] == pattern.period, ErrorKind::InvalidData,
            kernel_name(s) + ": block count does not match the sampling period");
    GrappaKernel k = make_kernel(to_size(lookup(kv, "target", where), where), t.dims[2], t.dims[1],
                                 KernelWindow{t.dims[3], t.dims[4]}, pattern);
    std::size_t i = 0;
    for (auto& block : k.taps) {
      for (auto& v : block) {
        v = cplx(t.values[i], t.values[i + 1]);
        i += 2;
      }
    }
    k.ridge = to_double(lookup(kv, "ridge", where), where);
    k.residual = to_double(lookup(kv, "residual", where), where);
    kernels.push_back(std::move(k));
  }
  return kernels;
}

void write_result_bundle(const fs::path& dir, const ResultBundle& result) {
  ensure_dir(dir);
  for (std::size_t s = 0; s < result.recon.size(); ++s) {
    write_tensor(dir / recon_name(s), to_tensor(result.recon[s]));
  }
  for (std::size_t s = 0; s < result.stage_m.size(); ++s) {
    write_tensor(dir / stage_m_name(s), to_tensor(result.stage_m[s]));
  }
  for (std::size_t s = 0; s < result.images.size(); ++s) {
    write_tensor(dir / rss_name(s), to_tensor(result.images[s]));
  }
  KeyValues prov = result.provenance;
  prov["slices"] = std::to_string(result.recon.size());
  write_text_atomic(dir / "provenance.txt", format_key_values(prov));
  std::string timings;
  for (std::size_t s = 0; s < result.slice_seconds.size(); ++s) {
    timings += "slice=" + std::to_string(s) + " seconds=" + fmt(result.slice_seconds[s]) + "\n";
  }
  write_text_atomic(dir / "timings.txt", timings);
}

std::vector<MultiCoilKSpace> read_result_recon(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "result directory not found: " + dir.string());
  const KeyValues prov = parse_key_values(read_text(dir / "provenance.txt"));
  const std::size_t n = to_size(lookup(prov, "slices", "provenance.txt"), "provenance.txt");
  std::vector<MultiCoilKSpace> out;
  for (std::size_t s = 0; s < n; ++s) out.push_back(to_multicoil(read_tensor(dir / recon_name(s))));
  return out;
}

}  // namespace smsrecon::cli
