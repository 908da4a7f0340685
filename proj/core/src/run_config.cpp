#include "smsrecon/run_config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace smsrecon {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  fail(ErrorKind::Configuration, "config " + key + ": " + why);
}

std::size_t as_size(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    n = std::stoull(v, &used);
  } catch (const std::logic_error&) {
    bad(key, "expected a nonnegative integer, got '" + v + "'");
  }
  if (used != v.size()) bad(key, "expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

double as_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::logic_error&) {
    bad(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) bad(key, "expected a number, got '" + v + "'");
  return d;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad(key, "expected true or false, got '" + v + "'");
}

std::string predictor_name(const std::string& key, const std::string& v) {
  if (v == "oracle" || v == "grappa" || v == "external") return v;
  bad(key, "expected oracle, grappa or external, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CaipiScheme RunConfig::scheme() const {
  if (shifts) return CaipiScheme(*shifts, phantom.rows, phantom.cols);
  return standard_scheme(phantom.b, phantom.rows, phantom.cols);
}

void RunConfig::validate() const {
  try {
    phantom.validate();
  } catch (const Error& e) {
    bad("phantom", e.what());
  }
  if (shifts && shifts->size() != phantom.b) bad("scheme.shifts", "expected b entries");
  try {
    (void)scheme();
  } catch (const Error& e) {
    bad("scheme", e.what());
  }
  if (r == 0) bad("mask.r", "must be >= 1");
  if (acs > phantom.cols) bad("mask.acs", "exceeds the number of columns");
  if (t_m == 0) bad("inference.t_m", "must be >= 1");
  if (t_u == 0) bad("inference.t_u", "must be >= 1");
  if (guidance_interval == 0) bad("inference.guidance_interval", "must be >= 1");
  if ((predictor_m == "external" || predictor_u == "external") && endpoint.empty()) {
    bad("inference.endpoint", "required for the external predictor");
  }
  if (kernel_window.rows == 0 || kernel_window.cols == 0) bad("inference.kernel_rows", "window must be nonempty");
  if (!(ridge >= 0.0)) bad("inference.ridge", "must be nonnegative");
  if (!(inplane_ridge >= 0.0)) bad("inference.inplane_ridge", "must be nonnegative");
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  const std::map<std::string, Setter> setters{
      {"phantom.rows", [&](auto& k, auto& v) { cfg.phantom.rows = as_size(k, v); }},
      {"phantom.cols", [&](auto& k, auto& v) { cfg.phantom.cols = as_size(k, v); }},
      {"phantom.coils", [&](auto& k, auto& v) { cfg.phantom.coils = as_size(k, v); }},
      {"phantom.variant_seed", [&](auto& k, auto& v) { cfg.phantom.variant_seed = as_size(k, v); }},
      {"phantom.noise_sigma", [&](auto& k, auto& v) { cfg.phantom.noise_sigma = as_double(k, v); }},
      {"scheme.b", [&](auto& k, auto& v) { cfg.phantom.b = as_size(k, v); }},
      {"scheme.shifts",
       [&](auto& k, auto& v) {
         std::vector<double> s;
         std::istringstream in(v);
         std::string item;
         while (std::getline(in, item, ',')) s.push_back(as_double(k, trim(item)));
         if (s.empty()) bad(k, "empty shift list");
         cfg.shifts = std::move(s);
       }},
      {"mask.r", [&](auto& k, auto& v) { cfg.r = as_size(k, v); }},
      {"mask.acs", [&](auto& k, auto& v) { cfg.acs = as_size(k, v); }},
      {"inference.t_m", [&](auto& k, auto& v) { cfg.t_m = as_size(k, v); }},
      {"inference.t_u", [&](auto& k, auto& v) { cfg.t_u = as_size(k, v); }},
      {"inference.guidance_interval", [&](auto& k, auto& v) { cfg.guidance_interval = as_size(k, v); }},
      {"inference.anchor", [&](auto& k, auto& v) { cfg.anchor = as_bool(k, v); }},
      {"inference.predictor_m", [&](auto& k, auto& v) { cfg.predictor_m = predictor_name(k, v); }},
      {"inference.predictor_u", [&](auto& k, auto& v) { cfg.predictor_u = predictor_name(k, v); }},
      {"inference.endpoint", [&](auto&, auto& v) { cfg.endpoint = v; }},
      {"inference.kernel_rows", [&](auto& k, auto& v) { cfg.kernel_window.rows = as_size(k, v); }},
      {"inference.kernel_cols", [&](auto& k, auto& v) { cfg.kernel_window.cols = as_size(k, v); }},
      {"inference.ridge", [&](auto& k, auto& v) { cfg.ridge = as_double(k, v); }},
      {"inference.inplane_ridge", [&](auto& k, auto& v) { cfg.inplane_ridge = as_double(k, v); }},
      {"seeds.noise", [&](auto& k, auto& v) { cfg.noise_seed = as_size(k, v); }},
      {"output.directory",
       [&](auto&, auto& v) {
         std::filesystem::path p(v);
         cfg.output_dir = p.is_absolute() ? p : base_dir / p;
       }},
  };
  cfg.output_dir = base_dir / cfg.output_dir;

  std::istringstream lines(text);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(lines, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad("line " + std::to_string(lineno), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad("line " + std::to_string(lineno), "expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const auto it = setters.find(key);
    if (it == setters.end()) bad(key, "unknown key");
    it->second(key, trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    fail(ErrorKind::Configuration, e.what());
  }
  return parse_run_config(text, path.parent_path().empty() ? "." : path.parent_path());
}

std::string format_run_config(const RunConfig& cfg) {
  std::ostringstream o;
  o << "[phantom]\nrows = " << cfg.phantom.rows << "\ncols = " << cfg.phantom.cols
    << "\ncoils = " << cfg.phantom.coils << "\nvariant_seed = " << cfg.phantom.variant_seed
    << "\nnoise_sigma = " << fmt(cfg.phantom.noise_sigma) << "\n\n[scheme]\nb = " << cfg.phantom.b << "\n";
  if (cfg.shifts) {
    o << "shifts = ";
    for (std::size_t i = 0; i < cfg.shifts->size(); ++i) o << (i ? "," : "") << fmt((*cfg.shifts)[i]);
    o << "\n";
  }
  o << "\n[mask]\nr = " << cfg.r << "\nacs = " << cfg.acs << "\n\n[inference]\nt_m = " << cfg.t_m
    << "\nt_u = " << cfg.t_u << "\nguidance_interval = " << cfg.guidance_interval
    << "\nanchor = " << (cfg.anchor ? "true" : "false") << "\npredictor_m = " << cfg.predictor_m
    << "\npredictor_u = " << cfg.predictor_u << "\n";
  if (!cfg.endpoint.empty()) o << "endpoint = " << cfg.endpoint << "\n";
  o << "kernel_rows = " << cfg.kernel_window.rows << "\nkernel_cols = " << cfg.kernel_window.cols
    << "\nridge = " << fmt(cfg.ridge) << "\ninplane_ridge = " << fmt(cfg.inplane_ridge)
    << "\n\n[seeds]\nnoise = " << cfg.noise_seed << "\n\n[output]\ndirectory = "
    << cfg.output_dir.string() << "\n";
  return o.str();
}

}  // namespace smsrecon
