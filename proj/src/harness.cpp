#include "mesoclt/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <unistd.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "mesoclt/errors.hpp"
#include "mesoclt/experiments.hpp"
#include "mesoclt/gp_sampler.hpp"
#include "mesoclt/hs_calculus.hpp"
#include "mesoclt/parallel.hpp"
#include "mesoclt/rng.hpp"
#include "mesoclt/stats.hpp"

#ifndef MESOCLT_VERSION
#define MESOCLT_VERSION "0.0.0"
#endif

namespace mesoclt {

using nlohmann::json;

// Names -------------------------------------------------------------------

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kExperimentNames[] = {
    {ExperimentKind::resolvent_clt, "resolvent_clt"}, {ExperimentKind::linstat_clt, "linstat_clt"},
    {ExperimentKind::local_law, "local_law"},         {ExperimentKind::bias_rate, "bias_rate"},
    {ExperimentKind::gp_sample, "gp_sample"},         {ExperimentKind::hs_check, "hs_check"},
    {ExperimentKind::mixed_moments, "mixed_moments"}, {ExperimentKind::cumulant_check, "cumulant_check"},
    {ExperimentKind::theory_dump, "theory_dump"},
};

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kExperimentNames)
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind parse_experiment(std::string_view s) {
  for (const auto& [kind, name] : kExperimentNames)
    if (name == s) return kind;
  throw ConfigError("experiment: unknown experiment '" + std::string(s) + "'");
}

const std::vector<ExperimentKind>& all_experiments() {
  static const std::vector<ExperimentKind> v = [] {
    std::vector<ExperimentKind> r;
    for (const auto& [kind, name] : kExperimentNames) r.push_back(kind);
    return r;
  }();
  return v;
}

// Number formatting -------------------------------------------------------

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_complex(cplx z) {
  std::string s = format_double(z.real());
  if (!(z.imag() < 0.0) && !std::signbit(z.imag())) s += '+';
  s += format_double(z.imag());
  s += 'i';
  return s;
}

namespace {

double parse_double_strict(std::string_view s, const std::string& field) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(field + ": expected a number, got '" + t + "'");
  return v;
}

long long parse_int_strict(std::string_view s, const std::string& field) {
  const std::string t = trim(s);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(field + ": expected an integer, got '" + t + "'");
  return v;
}

std::uint64_t parse_u64_strict(std::string_view s, const std::string& field) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(field + ": expected a non-negative integer, got '" + t + "'");
  return v;
}

bool parse_bool_strict(std::string_view s, const std::string& field) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(field + ": expected true/false, got '" + t + "'");
}

}  // namespace

cplx parse_complex(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ConfigError("empty complex number");
  const std::string field = "complex '" + s + "'";
  if (s.back() != 'i') return {parse_double_strict(s, field), 0.0};
  s.pop_back();
  // split at the last sign that is not an exponent sign or the leading sign
  std::size_t cut = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      cut = k;
      break;
    }
  }
  std::string re = cut == std::string::npos ? "" : s.substr(0, cut);
  std::string im = cut == std::string::npos ? s : s.substr(cut);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  if (im[0] == '+') im.erase(0, 1);
  return {re.empty() ? 0.0 : parse_double_strict(re, field), parse_double_strict(im, field)};
}

// Config parsing ----------------------------------------------------------

ConfigMap parse_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ConfigMap map;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      map[key] = trim(node.data());
    } else {
      for (const auto& [sub, leaf] : node) map[key + "." + sub] = trim(leaf.data());
    }
  }
  return map;
}

ConfigMap json_to_config_map(const json& j) {
  ConfigMap map;
  std::function<void(const std::string&, const json&)> walk = [&](const std::string& prefix, const json& v) {
    auto scalar = [](const json& x) -> std::string {
      if (x.is_string()) return x.get<std::string>();
      if (x.is_boolean()) return x.get<bool>() ? "true" : "false";
      if (x.is_number_unsigned()) return std::to_string(x.get<std::uint64_t>());
      if (x.is_number_integer()) return std::to_string(x.get<std::int64_t>());
      if (x.is_number_float()) return format_double(x.get<double>());
      throw ConfigError("config: unsupported JSON value " + x.dump());
    };
    if (v.is_object()) {
      for (const auto& [k, x] : v.items()) walk(prefix.empty() ? k : prefix + "." + k, x);
    } else if (v.is_array()) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += scalar(v[i]);
      }
      map[prefix] = s;
    } else if (!v.is_null()) {
      map[prefix] = scalar(v);
    }
  };
  walk("", j);
  return map;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(ss.str());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.contains("config")) throw ConfigError("config: JSON file has no 'config' object");
    return json_to_config_map(j.at("config"));
  }
  return parse_ini(ss.str());
}

void apply_overrides(ConfigMap& map, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set: expected key=value, got '" + item + "'");
    map[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
}

ExperimentConfig config_from_map(const ConfigMap& map) {
  ExperimentConfig c;
  std::set<std::string> used;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = map.find(key);
    if (it == map.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };
  auto num = [&](const std::string& key, double& out) {
    if (auto v = get(key)) out = parse_double_strict(*v, key);
  };
  auto integer = [&](const std::string& key, int& out) {
    if (auto v = get(key)) {
      const long long x = parse_int_strict(*v, key);
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(key + ": out of range");
      out = static_cast<int>(x);
    }
  };
  auto boolean = [&](const std::string& key, bool& out) {
    if (auto v = get(key)) out = parse_bool_strict(*v, key);
  };
  auto text = [&](const std::string& key, std::string& out) {
    if (auto v = get(key)) out = *v;
  };
  auto int_list = [&](const std::string& key, std::vector<int>& out) {
    if (auto v = get(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(static_cast<int>(parse_int_strict(item, key)));
    }
  };
  auto cplx_list = [&](const std::string& key, std::vector<cplx>& out) {
    if (auto v = get(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) {
        try {
          out.push_back(parse_complex(item));
        } catch (const ConfigError& e) {
          throw ConfigError(key + ": " + e.what());
        }
      }
    }
  };

  if (auto v = get("experiment")) c.experiment = parse_experiment(trim(*v));
  if (auto v = get("ensemble.symmetry_class")) {
    try {
      c.ensemble.symmetry_class = parse_symmetry_class(trim(*v));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("ensemble.symmetry_class: ") + e.what());
    }
  }
  if (auto v = get("ensemble.entry_law")) {
    try {
      c.ensemble.entry_law = parse_entry_law(trim(*v));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("ensemble.entry_law: ") + e.what());
    }
  }
  c.ensemble.dimension = 64;
  integer("ensemble.dimension", c.ensemble.dimension);
  if (auto v = get("ensemble.diagonal_variance")) {
    const std::string t = trim(*v);
    if (t.empty() || t == "default")
      c.ensemble.diagonal_variance.reset();
    else
      c.ensemble.diagonal_variance = parse_double_strict(t, "ensemble.diagonal_variance");
  }
  num("ensemble.heavy_tail_exponent", c.ensemble.heavy_tail_exponent);
  if (auto v = get("ensemble.master_seed")) c.ensemble.master_seed = parse_u64_strict(*v, "ensemble.master_seed");
  num("scale.alpha", c.scale.alpha);
  num("scale.energy", c.scale.energy);
  int_list("N_list", c.n_list);
  int_list("samples_per_N", c.samples_per_n);
  cplx_list("b_points", c.b_points);
  if (auto v = get("test_functions")) c.test_functions = split_list(*v);
  integer("num_samples", c.num_samples);
  integer("num_workers", c.num_workers);
  text("output_dir", c.output_dir);
  boolean("persist_samples", c.persist_samples);
  boolean("persist_spectra", c.persist_spectra);
  num("quad_tol", c.quad_tol);
  num("local_law.epsilon", c.epsilon);
  cplx_list("local_law.z_grid", c.z_grid);
  integer("mixed.max_degree", c.max_degree);
  integer("gp.truncation_K", c.gp_truncation_K);
  num("gp.target_tail_variance", c.gp_target_tail_variance);
  num("hs.eta", c.hs_eta);
  num("hs.sigma", c.hs_sigma);
  text("hs.variant", c.hs_variant);
  if (auto v = get("hs.lambdas")) {
    c.hs_lambdas.clear();
    for (const auto& item : split_list(*v)) c.hs_lambdas.push_back(parse_double_strict(item, "hs.lambdas"));
  }
  text("cumulant.law", c.cumulant_law);
  text("cumulant.function", c.cumulant_function);
  integer("cumulant.order", c.cumulant_order);
  integer("cumulant.nodes", c.cumulant_nodes);
  num("cumulant.parameter", c.cumulant_parameter);
  integer("theory.grid_points", c.theory_grid_points);

  for (const auto& [key, value] : map)
    if (!used.count(key)) throw ConfigError(key + ": unknown config key");
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (num_workers < 0) throw ConfigError("num_workers: must be >= 1 (or 0 for all cores)");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  if (!(quad_tol > 0.0)) throw ConfigError("quad_tol: must be positive");
  auto need_ensemble = [&] { ensemble.validate(); };
  auto need_scale = [&] { scale.validate(); };
  auto need_samples = [&](int min) {
    if (num_samples < min)
      throw ConfigError("num_samples: must be >= " + std::to_string(min) + " for " + std::string(to_string(experiment)));
  };
  auto need_functions = [&] {
    if (test_functions.empty()) throw ConfigError("test_functions: must not be empty");
    for (const auto& label : test_functions) {
      try {
        (void)catalog::by_label(label);
      } catch (const std::exception& e) {
        throw ConfigError("test_functions: " + std::string(e.what()));
      }
    }
  };
  auto need_b = [&] {
    if (b_points.empty()) throw ConfigError("b_points: must not be empty");
    for (cplx b : b_points)
      if (!(b.imag() > 0.0)) throw ConfigError("b_points: every Im b must be positive, got " + format_complex(b));
  };
  switch (experiment) {
    case ExperimentKind::resolvent_clt:
      need_ensemble();
      need_scale();
      need_b();
      need_samples(64);
      break;
    case ExperimentKind::linstat_clt:
      need_ensemble();
      need_scale();
      need_functions();
      need_samples(64);
      break;
    case ExperimentKind::local_law:
      need_ensemble();
      need_samples(1);
      if (!(epsilon >= 0.0)) throw ConfigError("local_law.epsilon: must be >= 0");
      for (cplx z : z_grid)
        if (!(z.imag() > 0.0)) throw ConfigError("local_law.z_grid: every Im z must be positive");
      break;
    case ExperimentKind::bias_rate:
      need_ensemble();
      need_scale();
      if (n_list.size() < 3) throw ConfigError("N_list: needs at least 3 increasing values");
      for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw ConfigError("N_list: values must be increasing");
      if (!samples_per_n.empty() && samples_per_n.size() != n_list.size())
        throw ConfigError("samples_per_N: needs one entry per N_list value");
      for (int s : samples_per_n)
        if (s < 64) throw ConfigError("samples_per_N: every entry must be >= 64");
      if (samples_per_n.empty()) need_samples(64);
      break;
    case ExperimentKind::gp_sample:
      need_b();
      need_functions();
      need_samples(64);
      if (gp_truncation_K < 0) throw ConfigError("gp.truncation_K: must be >= 0");
      if (!(gp_target_tail_variance > 0.0)) throw ConfigError("gp.target_tail_variance: must be positive");
      break;
    case ExperimentKind::hs_check:
      need_ensemble();
      need_functions();
      need_samples(1);
      if (ensemble.dimension > 32) throw ConfigError("ensemble.dimension: hs_check supports N <= 32");
      if (!(hs_eta > 0.0)) throw ConfigError("hs.eta: must be positive");
      if (hs_sigma < 0.0 || hs_sigma > hs_eta) throw ConfigError("hs.sigma: must be in [0, hs.eta]");
      if (hs_variant != "first_order" && hs_variant != "derivative_form")
        throw ConfigError("hs.variant: expected first_order or derivative_form");
      break;
    case ExperimentKind::mixed_moments:
      need_ensemble();
      need_scale();
      need_samples(64);
      if (max_degree < 2 || max_degree > 4) throw ConfigError("mixed.max_degree: must be in [2, 4]");
      break;
    case ExperimentKind::cumulant_check:
      if (cumulant_law != "gaussian" && cumulant_law != "rademacher" && cumulant_law != "centered_poisson")
        throw ConfigError("cumulant.law: expected gaussian, rademacher or centered_poisson");
      if (cumulant_order < 0 || cumulant_order > 7) throw ConfigError("cumulant.order: must be in [0, 7]");
      if (cumulant_nodes < 1) throw ConfigError("cumulant.nodes: must be >= 1");
      break;
    case ExperimentKind::theory_dump:
      if (theory_grid_points < 2) throw ConfigError("theory.grid_points: must be >= 2");
      break;
  }
}

json config_to_json(const ExperimentConfig& c) {
  auto cl = [](const std::vector<cplx>& v) {
    json a = json::array();
    for (cplx z : v) a.push_back(format_complex(z));
    return a;
  };
  json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["ensemble"] = {
      {"symmetry_class", std::string(to_string(c.ensemble.symmetry_class))},
      {"entry_law", std::string(to_string(c.ensemble.entry_law))},
      {"dimension", c.ensemble.dimension},
      {"diagonal_variance", c.ensemble.diagonal_variance ? json(*c.ensemble.diagonal_variance) : json(nullptr)},
      {"heavy_tail_exponent", c.ensemble.heavy_tail_exponent},
      {"master_seed", c.ensemble.master_seed},
  };
  j["scale"] = {{"alpha", c.scale.alpha}, {"energy", c.scale.energy}};
  j["N_list"] = c.n_list;
  j["samples_per_N"] = c.samples_per_n;
  j["b_points"] = cl(c.b_points);
  j["test_functions"] = c.test_functions;
  j["num_samples"] = c.num_samples;
  j["persist_samples"] = c.persist_samples;
  j["persist_spectra"] = c.persist_spectra;
  j["quad_tol"] = c.quad_tol;
  j["local_law"] = {{"epsilon", c.epsilon}, {"z_grid", cl(c.z_grid)}};
  j["mixed"] = {{"max_degree", c.max_degree}};
  j["gp"] = {{"truncation_K", c.gp_truncation_K}, {"target_tail_variance", c.gp_target_tail_variance}};
  j["hs"] = {{"eta", c.hs_eta}, {"sigma", c.hs_sigma}, {"variant", c.hs_variant}, {"lambdas", c.hs_lambdas}};
  j["cumulant"] = {{"law", c.cumulant_law},
                   {"function", c.cumulant_function},
                   {"order", c.cumulant_order},
                   {"nodes", c.cumulant_nodes},
                   {"parameter", c.cumulant_parameter}};
  j["theory"] = {{"grid_points", c.theory_grid_points}};
  return j;
}

// Hashing and files -------------------------------------------------------

namespace {

std::string digest_hex(const EVP_MD* md, std::string_view bytes) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out, &len, md, nullptr) != 1)
    throw NumericalError("digest computation failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[out[i] >> 4];
    s += hex[out[i] & 15];
  }
  return s;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) { return digest_hex(EVP_sha256(), bytes); }

std::string git_blob_sha1_hex(std::string_view bytes) {
  std::string blob = "blob " + std::to_string(bytes.size());
  blob.push_back('\0');
  blob.append(bytes);
  return digest_hex(EVP_sha1(), blob);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("output_dir: cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ConfigError("output_dir: write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError("output_dir: cannot rename into '" + path.string() + "'");
  }
}

// Result assembly ---------------------------------------------------------

namespace {

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw ContractViolation("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += quote(cells[i]);
    }
    out_ += "\r\n";
  }
  [[nodiscard]] const std::string& str() const { return out_; }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }
  std::size_t width_;
  std::string out_;
};

std::string f2s(double x) { return format_double(x); }

json cj(cplx z) { return json::array({z.real(), z.imag()}); }
json ce(const ComplexEstimate& e) { return json::array({e.std_error_re, e.std_error_im}); }

struct Outputs {
  json results = json::object();
  json errors = json::object();
  std::string csv;
  std::string samples_jsonl;
  std::string spectra_jsonl;
};

std::vector<TestFunction> functions_of(const ExperimentConfig& c) {
  std::vector<TestFunction> fs;
  for (const auto& label : c.test_functions) fs.push_back(catalog::by_label(label));
  return fs;
}

RunOptions options_of(const ExperimentConfig& c) { return {c.num_workers, 32}; }

void add_ks(json& results, std::span<const double> re, std::span<const double> im, double sd) {
  if (re.size() < 200 || !(sd > 0.0)) return;
  const auto a = ks_normality_test(re, sd);
  json k = {{"target_sd", sd}, {"re", {{"statistic", a.statistic}, {"p_value", a.p_value}}}};
  if (!im.empty()) {
    const auto b = ks_normality_test(im, sd);
    k["im"] = {{"statistic", b.statistic}, {"p_value", b.p_value}};
  }
  results["ks"] = k;
}

std::string spectra_lines(const SpectraSet& set) {
  std::string s;
  for (const auto& sp : set.spectra) s += json{{"sample_index", sp.sample_index}, {"eigenvalues", sp.eigenvalues}}.dump() + "\n";
  return s;
}

Outputs do_resolvent(const ExperimentConfig& c) {
  const auto opts = options_of(c);
  const auto set = sample_spectra(c.ensemble, c.num_samples, opts);
  const auto r = resolvent_from_spectra(set, c.scale, c.b_points, opts);
  const auto p = r.b_points.size();
  Outputs o;
  json bp = json::array();
  for (cplx b : r.b_points) bp.push_back(format_complex(b));
  json mean = json::array(), mean_e = json::array(), cov = json::array(), cov_e = json::array(),
       th = json::array(), ps = json::array(), ps_e = json::array(), ps_th = json::array();
  Csv csv({"j", "k", "b_j", "b_k", "cov_re", "cov_im", "cov_se_re", "cov_se_im", "theory_re", "theory_im",
           "pseudo_re", "pseudo_im", "pseudo_se_re", "pseudo_se_im"});
  for (std::size_t j = 0; j < p; ++j) {
    mean.push_back(cj(r.mean[j].value));
    mean_e.push_back(ce(r.mean[j]));
    json a = json::array(), ae = json::array(), t = json::array(), q = json::array(), qe = json::array(),
         qt = json::array();
    for (std::size_t k = 0; k < p; ++k) {
      a.push_back(cj(r.cov[j][k].value));
      ae.push_back(ce(r.cov[j][k]));
      t.push_back(cj(r.cov_theory[j][k]));
      q.push_back(cj(r.pseudo_cov[j][k].value));
      qe.push_back(ce(r.pseudo_cov[j][k]));
      qt.push_back(cj(r.pseudo_cov_theory[j][k]));
      csv.row({std::to_string(j), std::to_string(k), format_complex(r.b_points[j]), format_complex(r.b_points[k]),
               f2s(r.cov[j][k].value.real()), f2s(r.cov[j][k].value.imag()), f2s(r.cov[j][k].std_error_re),
               f2s(r.cov[j][k].std_error_im), f2s(r.cov_theory[j][k].real()), f2s(r.cov_theory[j][k].imag()),
               f2s(r.pseudo_cov[j][k].value.real()), f2s(r.pseudo_cov[j][k].value.imag()),
               f2s(r.pseudo_cov[j][k].std_error_re), f2s(r.pseudo_cov[j][k].std_error_im)});
    }
    cov.push_back(a);
    cov_e.push_back(ae);
    th.push_back(t);
    ps.push_back(q);
    ps_e.push_back(qe);
    ps_th.push_back(qt);
  }
  json mixed = json::array(), mixed_e = json::array();
  for (std::size_t j = 0; j < p; ++j)
    for (const auto& [nm, est] : r.mixed[j]) {
      mixed.push_back({{"b", format_complex(r.b_points[j])}, {"n", nm.first}, {"m", nm.second}, {"value", cj(est.value)}});
      mixed_e.push_back({{"b", format_complex(r.b_points[j])}, {"n", nm.first}, {"m", nm.second}, {"std_error", ce(est)}});
    }
  std::vector<cplx> col0(static_cast<std::size_t>(r.samples.rows()));
  for (Eigen::Index i = 0; i < r.samples.rows(); ++i) col0[static_cast<std::size_t>(i)] = r.samples(i, 0);
  const auto c0 = centre(col0);
  std::vector<double> re, im;
  for (cplx z : c0) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  const double sd = std::sqrt(std::max(r.cov_theory[0][0].real(), 0.0) / 2.0);
  o.results = {{"dimension", r.dimension},       {"eta", r.eta},
               {"num_samples", r.num_samples},   {"aborted", r.aborted},
               {"b_points", bp},                 {"mean", mean},
               {"cov_empirical", cov},           {"cov_theory", th},
               {"pseudo_cov_empirical", ps},     {"pseudo_cov_theory", ps_th},
               {"mixed_moments", mixed},         {"primary_samples", re},
               {"primary_target_sd", sd}};
  add_ks(o.results, re, im, sd);
  o.errors = {{"mean", mean_e}, {"cov_empirical", cov_e}, {"pseudo_cov_empirical", ps_e}, {"mixed_moments", mixed_e}};
  o.csv = csv.str();
  if (c.persist_samples) {
    for (Eigen::Index i = 0; i < r.samples.rows(); ++i) {
      json vals = json::array();
      for (Eigen::Index j = 0; j < r.samples.cols(); ++j) vals.push_back(cj(r.samples(i, j)));
      o.samples_jsonl += json{{"sample_index", set.spectra[static_cast<std::size_t>(i)].sample_index}, {"values", vals}}.dump() + "\n";
    }
  }
  if (c.persist_spectra) o.spectra_jsonl = spectra_lines(set);
  return o;
}

Outputs do_linstat(const ExperimentConfig& c) {
  const auto opts = options_of(c);
  const auto fs = functions_of(c);
  const auto set = sample_spectra(c.ensemble, c.num_samples, opts);
  const auto r = linstat_from_spectra(set, c.scale, fs, opts);
  const auto p = fs.size();
  Outputs o;
  auto vals = [](const std::vector<Estimate>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back(e.value);
    return a;
  };
  auto errs = [](const std::vector<Estimate>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back(e.std_error);
    return a;
  };
  json cov = json::array(), cov_e = json::array();
  Csv csv({"f_j", "f_k", "cov", "cov_se", "theory"});
  for (std::size_t j = 0; j < p; ++j) {
    cov.push_back(vals(r.cov[j]));
    cov_e.push_back(errs(r.cov[j]));
    for (std::size_t k = 0; k < p; ++k)
      csv.row({r.labels[j], r.labels[k], f2s(r.cov[j][k].value), f2s(r.cov[j][k].std_error), f2s(r.cov_theory[j][k])});
  }
  std::vector<double> col0(static_cast<std::size_t>(r.samples.rows()));
  for (Eigen::Index i = 0; i < r.samples.rows(); ++i) col0[static_cast<std::size_t>(i)] = r.samples(i, 0);
  const auto c0 = centre(col0);
  const double sd = std::sqrt(std::max(r.cov_theory[0][0], 0.0));
  o.results = {{"dimension", r.dimension},  {"eta", r.eta},
               {"num_samples", r.num_samples}, {"aborted", r.aborted},
               {"test_functions", r.labels}, {"mean", vals(r.mean)},
               {"variance", vals(r.variance)}, {"cumulant3", vals(r.cumulant3)},
               {"cumulant4", vals(r.cumulant4)}, {"cov_empirical", cov},
               {"cov_theory", r.cov_theory}, {"primary_samples", c0},
               {"primary_target_sd", sd}};
  add_ks(o.results, c0, {}, sd);
  o.errors = {{"mean", errs(r.mean)},
              {"variance", errs(r.variance)},
              {"cumulant3", errs(r.cumulant3)},
              {"cumulant4", errs(r.cumulant4)},
              {"cov_empirical", cov_e}};
  o.csv = csv.str();
  if (c.persist_samples) {
    for (Eigen::Index i = 0; i < r.samples.rows(); ++i) {
      std::vector<double> v(static_cast<std::size_t>(r.samples.cols()));
      for (Eigen::Index j = 0; j < r.samples.cols(); ++j) v[static_cast<std::size_t>(j)] = r.samples(i, j);
      o.samples_jsonl += json{{"sample_index", set.spectra[static_cast<std::size_t>(i)].sample_index}, {"values", v}}.dump() + "\n";
    }
  }
  if (c.persist_spectra) o.spectra_jsonl = spectra_lines(set);
  return o;
}

std::vector<cplx> default_z_grid(int n) {
  const double eta = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<cplx> z;
  for (double e : {-1.0, -0.5, 0.1, 0.5, 1.0}) z.emplace_back(e, eta);
  return z;
}

Outputs do_local_law(const ExperimentConfig& c) {
  const auto grid = c.z_grid.empty() ? default_z_grid(c.ensemble.dimension) : c.z_grid;
  const auto t = local_law_check(c.ensemble, grid, c.num_samples, c.epsilon, options_of(c));
  Outputs o;
  json rows = json::array();
  Csv csv({"z_re", "z_im", "frac_averaged", "frac_entrywise", "worst_averaged", "worst_entrywise", "pass"});
  for (const auto& r : t.rows) {
    rows.push_back({{"z", format_complex(r.z)},
                    {"frac_averaged", r.frac_averaged},
                    {"frac_entrywise", r.frac_entrywise},
                    {"worst_averaged", r.worst_averaged},
                    {"worst_entrywise", r.worst_entrywise},
                    {"pass_averaged", r.pass_averaged},
                    {"pass_entrywise", r.pass_entrywise}});
    csv.row({f2s(r.z.real()), f2s(r.z.imag()), f2s(r.frac_averaged), f2s(r.frac_entrywise), f2s(r.worst_averaged),
             f2s(r.worst_entrywise), (r.pass_averaged && r.pass_entrywise) ? "true" : "false"});
  }
  o.results = {{"dimension", t.dimension}, {"epsilon", t.epsilon}, {"num_samples", t.num_samples},
               {"rows", rows}, {"all_pass", t.all_pass}};
  o.csv = csv.str();
  return o;
}

Outputs do_bias(const ExperimentConfig& c) {
  const auto counts = c.samples_per_n.empty() ? std::vector<int>{c.num_samples} : c.samples_per_n;
  const auto fit = bias_rate_fit(c.ensemble, c.scale.alpha, c.scale.energy, c.n_list, counts, options_of(c));
  Outputs o;
  json pts = json::array(), pts_e = json::array();
  Csv csv({"N", "eta", "bias_re", "bias_im", "magnitude", "magnitude_se", "noise", "coarse_bound", "num_samples"});
  for (const auto& p : fit.points) {
    pts.push_back({{"N", p.dimension},
                   {"eta", p.eta},
                   {"bias", cj(p.bias.value)},
                   {"magnitude", p.magnitude.value},
                   {"coarse_bound", p.coarse_bound},
                   {"num_samples", p.num_samples}});
    pts_e.push_back({{"N", p.dimension}, {"bias", ce(p.bias)}, {"magnitude", p.magnitude.std_error}, {"noise", p.noise}});
    csv.row({std::to_string(p.dimension), f2s(p.eta), f2s(p.bias.value.real()), f2s(p.bias.value.imag()),
             f2s(p.magnitude.value), f2s(p.magnitude.std_error), f2s(p.noise), f2s(p.coarse_bound),
             std::to_string(p.num_samples)});
  }
  o.results = {{"points", pts},
               {"slope", fit.slope},
               {"intercept", fit.intercept},
               {"slope_ci", {fit.slope_ci_low, fit.slope_ci_high}},
               {"target_slope", fit.target_slope},
               {"noise_dominated", fit.noise_dominated},
               {"slope_ok", fit.slope_ok},
               {"coarse_bound_ok", fit.coarse_bound_ok}};
  o.errors = {{"points", pts_e}, {"slope", fit.slope_std_error}};
  o.csv = csv.str();
  return o;
}

Outputs do_gp(const ExperimentConfig& c) {
  Outputs o;
  GPConfig g{c.gp_truncation_K, c.ensemble.master_seed, c.gp_target_tail_variance};
  const auto y = sample_Y(c.b_points, g, c.num_samples);
  const auto p = c.b_points.size();
  const auto rows = static_cast<std::size_t>(y.rows());
  MCAccumulator acc(static_cast<int>(p), 2, 32);
  std::vector<cplx> row(p);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p; ++j) row[j] = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    acc.add(batch_of(i, rows, 32), std::span<const cplx>(row));
  }
  json cov = json::array(), cov_e = json::array(), th = json::array(), ps = json::array(), ps_e = json::array();
  Csv csv({"kind", "j", "k", "empirical_re", "empirical_im", "se_re", "se_im", "theory_re", "theory_im"});
  for (std::size_t j = 0; j < p; ++j) {
    json a = json::array(), ae = json::array(), t = json::array(), q = json::array(), qe = json::array();
    for (std::size_t k = 0; k < p; ++k) {
      const auto e = acc.cross(static_cast<int>(j), static_cast<int>(k));
      const auto s = acc.pseudo(static_cast<int>(j), static_cast<int>(k));
      const auto tc = resolvent_covariance(c.b_points[j], c.b_points[k]);
      a.push_back(cj(e.value));
      ae.push_back(ce(e));
      t.push_back(cj(tc.cov));
      q.push_back(cj(s.value));
      qe.push_back(ce(s));
      csv.row({"Y", std::to_string(j), std::to_string(k), f2s(e.value.real()), f2s(e.value.imag()),
               f2s(e.std_error_re), f2s(e.std_error_im), f2s(tc.cov.real()), f2s(tc.cov.imag())});
    }
    cov.push_back(a);
    cov_e.push_back(ae);
    th.push_back(t);
    ps.push_back(q);
    ps_e.push_back(qe);
  }
  const auto fs = functions_of(c);
  const auto gram = h_half_gram(fs);
  const auto zs = sample_gaussian_field(gram, c.num_samples, splitmix64(c.ensemble.master_seed));
  const auto q = fs.size();
  MCAccumulator zacc(static_cast<int>(q), 2, 32);
  std::vector<double> zr(q);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < q; ++j) zr[j] = zs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    zacc.add(batch_of(i, rows, 32), std::span<const double>(zr));
  }
  json zc = json::array(), zc_e = json::array(), zt = json::array();
  for (std::size_t j = 0; j < q; ++j) {
    json a = json::array(), ae = json::array(), t = json::array();
    for (std::size_t k = 0; k < q; ++k) {
      const auto e = zacc.cross(static_cast<int>(j), static_cast<int>(k));
      a.push_back(e.value.real());
      ae.push_back(e.std_error_re);
      t.push_back(gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
      csv.row({"Z", std::to_string(j), std::to_string(k), f2s(e.value.real()), "0", f2s(e.std_error_re), "0",
               f2s(gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k))), "0"});
    }
    zc.push_back(a);
    zc_e.push_back(ae);
    zt.push_back(t);
  }
  std::vector<double> re, im;
  for (std::size_t i = 0; i < rows; ++i) {
    re.push_back(y(static_cast<Eigen::Index>(i), 0).real());
    im.push_back(y(static_cast<Eigen::Index>(i), 0).imag());
  }
  json bp = json::array();
  for (cplx b : c.b_points) bp.push_back(format_complex(b));
  const int k_used = c.gp_truncation_K > 0 ? c.gp_truncation_K : choose_truncation(c.b_points, c.gp_target_tail_variance);
  const double sd = std::sqrt(resolvent_covariance(c.b_points[0], c.b_points[0]).cov.real() / 2.0);
  o.results = {{"b_points", bp},          {"truncation_K", k_used},  {"num_samples", c.num_samples},
               {"cov_empirical", cov},     {"cov_theory", th},        {"pseudo_cov_empirical", ps},
               {"test_functions", c.test_functions}, {"z_cov_empirical", zc}, {"z_cov_theory", zt},
               {"primary_samples", re},    {"primary_target_sd", sd}};
  add_ks(o.results, re, im, sd);
  o.errors = {{"cov_empirical", cov_e}, {"pseudo_cov_empirical", ps_e}, {"z_cov_empirical", zc_e}};
  o.csv = csv.str();
  if (c.persist_samples) {
    for (std::size_t i = 0; i < rows; ++i) {
      json vals = json::array();
      for (std::size_t j = 0; j < p; ++j) vals.push_back(cj(y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      for (std::size_t j = 0; j < q; ++j) vals.push_back(zs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      o.samples_jsonl += json{{"sample_index", i}, {"values", vals}}.dump() + "\n";
    }
  }
  return o;
}

Outputs do_hs(const ExperimentConfig& c) {
  const auto fs = functions_of(c);
  const auto variant =
      c.hs_variant == "derivative_form" ? ExtensionVariant::derivative_form : ExtensionVariant::first_order;
  Outputs o;
  Csv csv({"kind", "label", "point", "hs_value", "direct_value", "abs_error"});
  json scalar = json::array(), trace = json::array();
  double worst_scalar = 0.0, worst_trace = 0.0;
  for (const auto& f : fs) {
    const AlmostAnalyticExtension ext(variant, f, 1.0);
    for (double lam : c.hs_lambdas) {
      const double hs = hs_reconstruct_scalar(ext, lam, c.quad_tol);
      const double direct = f(lam);
      worst_scalar = std::max(worst_scalar, std::abs(hs - direct));
      scalar.push_back({{"label", f.label}, {"lambda", lam}, {"hs", hs}, {"direct", direct}});
      csv.row({"scalar", f.label, f2s(lam), f2s(hs), f2s(direct), f2s(std::abs(hs - direct))});
    }
  }
  std::vector<std::vector<double>> hs_vals(static_cast<std::size_t>(c.num_samples), std::vector<double>(fs.size()));
  std::vector<std::vector<double>> direct_vals = hs_vals;
  parallel_for(static_cast<std::size_t>(c.num_samples), c.num_workers, [&](std::size_t i) {
    const auto sp = eigenvalues(sample_matrix(c.ensemble, i));
    for (std::size_t j = 0; j < fs.size(); ++j) {
      hs_vals[i][j] = hs_trace(sp, fs[j], c.scale.energy, c.hs_eta, c.hs_sigma, c.quad_tol, variant);
      direct_vals[i][j] = linear_statistic(sp, fs[j], c.scale.energy, c.hs_eta);
    }
  });
  for (std::size_t i = 0; i < hs_vals.size(); ++i)
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const double err = std::abs(hs_vals[i][j] - direct_vals[i][j]);
      worst_trace = std::max(worst_trace, err);
      trace.push_back({{"sample_index", i}, {"label", fs[j].label}, {"hs", hs_vals[i][j]}, {"direct", direct_vals[i][j]}});
      csv.row({"trace", fs[j].label, std::to_string(i), f2s(hs_vals[i][j]), f2s(direct_vals[i][j]), f2s(err)});
    }
  o.results = {{"variant", c.hs_variant},
               {"eta", c.hs_eta},
               {"sigma", c.hs_sigma > 0.0 ? c.hs_sigma : c.hs_eta / 4.0},
               {"scalar", scalar},
               {"trace", trace},
               {"max_scalar_error", worst_scalar},
               {"max_trace_error", worst_trace},
               {"pass", worst_scalar <= c.quad_tol && worst_trace <= c.quad_tol * c.ensemble.dimension}};
  o.csv = csv.str();
  return o;
}

Outputs do_mixed(const ExperimentConfig& c) {
  const auto opts = options_of(c);
  const auto set = sample_spectra(c.ensemble, c.num_samples, opts);
  const auto t = mixed_moments_from_spectra(set, c.scale, c.max_degree, opts);
  Outputs o;
  json cells = json::array(), cells_e = json::array();
  Csv csv({"n", "m", "empirical_re", "empirical_im", "se_re", "se_im", "predicted", "ratio", "ratio_se", "consistent"});
  for (const auto& cell : t.cells) {
    cells.push_back({{"n", cell.n},
                     {"m", cell.m},
                     {"empirical", cj(cell.empirical.value)},
                     {"predicted", cell.predicted},
                     {"scale", cell.scale},
                     {"ratio", cell.predicted != 0.0 ? json(cell.ratio.value) : json(nullptr)},
                     {"consistent", cell.consistent}});
    cells_e.push_back({{"n", cell.n}, {"m", cell.m}, {"empirical", ce(cell.empirical)},
                       {"ratio", cell.predicted != 0.0 ? json(cell.ratio.std_error) : json(nullptr)}});
    csv.row({std::to_string(cell.n), std::to_string(cell.m), f2s(cell.empirical.value.real()),
             f2s(cell.empirical.value.imag()), f2s(cell.empirical.std_error_re), f2s(cell.empirical.std_error_im),
             f2s(cell.predicted), cell.predicted != 0.0 ? f2s(cell.ratio.value) : "",
             cell.predicted != 0.0 ? f2s(cell.ratio.std_error) : "", cell.consistent ? "true" : "false"});
  }
  o.results = {{"dimension", t.dimension}, {"alpha", t.alpha}, {"num_samples", t.num_samples}, {"cells", cells}};
  o.errors = {{"cells", cells_e}};
  o.csv = csv.str();
  if (c.persist_spectra) o.spectra_jsonl = spectra_lines(set);
  return o;
}

ScalarFunction scalar_function(const std::string& name) {
  ScalarFunction f;
  if (name == "sin" || name == "cos") {
    const int shift = name == "cos" ? 1 : 0;
    for (int k = 0; k <= 8; ++k) {
      const int phase = (k + shift) % 4;
      f.derivatives.push_back([phase](double x) {
        switch (phase) {
          case 0: return std::sin(x);
          case 1: return std::cos(x);
          case 2: return -std::sin(x);
          default: return -std::cos(x);
        }
      });
    }
  } else if (name == "cube") {
    f.derivatives = {[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
                     [](double x) { return 6 * x; }, [](double) { return 6.0; }};
    for (int k = 4; k <= 8; ++k) f.derivatives.push_back([](double) { return 0.0; });
  } else if (name == "linear") {
    f.derivatives = {[](double x) { return x; }, [](double) { return 1.0; }};
    for (int k = 2; k <= 8; ++k) f.derivatives.push_back([](double) { return 0.0; });
  } else {
    throw ConfigError("cumulant.function: expected sin, cos, cube or linear, got '" + name + "'");
  }
  return f;
}

Outputs do_cumulant(const ExperimentConfig& c) {
  const HLaw law = c.cumulant_law == "gaussian"     ? HLaw::gaussian
                   : c.cumulant_law == "rademacher" ? HLaw::rademacher
                                                    : HLaw::centered_poisson;
  const auto f = scalar_function(c.cumulant_function);
  Outputs o;
  Csv csv({"order", "lhs", "rhs", "residual"});
  json rows = json::array();
  for (int l = 0; l <= c.cumulant_order; ++l) {
    const auto r = cumulant_expansion_check(law, f, l, c.cumulant_nodes, c.cumulant_parameter);
    rows.push_back({{"order", l}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual}});
    csv.row({std::to_string(l), f2s(r.lhs), f2s(r.rhs), f2s(r.residual)});
  }
  o.results = {{"law", c.cumulant_law}, {"function", c.cumulant_function}, {"rows", rows}};
  o.csv = csv.str();
  return o;
}

Outputs do_theory(const ExperimentConfig& c) {
  Outputs o;
  Csv csv({"x", "rho", "E", "eta", "re_m", "im_m"});
  const int k = c.theory_grid_points;
  const double etas[] = {1e-3, 1e-2, 1e-1, 1.0};
  for (int i = 0; i < k; ++i) {
    const double x = -2.5 + 5.0 * i / (k - 1);
    for (double eta : etas) {
      const cplx m = stieltjes_m(cplx(x, eta));
      csv.row({f2s(x), f2s(semicircle_density(x)), f2s(x), f2s(eta), f2s(m.real()), f2s(m.imag())});
    }
  }
  o.results = {{"grid_points", k},
               {"eta_values", etas},
               {"c0", c.scale.alpha > 0.0 && c.scale.alpha < 1.0 ? json(rate_c0(c.scale.alpha)) : json(nullptr)},
               {"resolvent_cov_i_i", cj(resolvent_covariance({0, 1}, {0, 1}).cov)},
               {"resolvent_cov_i_1pi", cj(resolvent_covariance({0, 1}, {1, 1}).cov)}};
  o.csv = csv.str();
  return o;
}

Outputs dispatch(const ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::resolvent_clt: return do_resolvent(c);
    case ExperimentKind::linstat_clt: return do_linstat(c);
    case ExperimentKind::local_law: return do_local_law(c);
    case ExperimentKind::bias_rate: return do_bias(c);
    case ExperimentKind::gp_sample: return do_gp(c);
    case ExperimentKind::hs_check: return do_hs(c);
    case ExperimentKind::mixed_moments: return do_mixed(c);
    case ExperimentKind::cumulant_check: return do_cumulant(c);
    case ExperimentKind::theory_dump: return do_theory(c);
  }
  throw ContractViolation("unhandled experiment");
}

json summary_of(const ExperimentConfig& c, Outputs& o) {
  const json cfg = config_to_json(c);
  return {{"experiment", std::string(to_string(c.experiment))},
          {"config", cfg},
          {"results", std::move(o.results)},
          {"errors_bars", std::move(o.errors)},
          {"provenance",
           {{"library", "mesoclt"},
            {"version", MESOCLT_VERSION},
            {"config_hash", sha256_hex(cfg.dump())},
            {"seed", c.ensemble.master_seed}}}};
}

}  // namespace

json run_summary(const ExperimentConfig& cfg) {
  cfg.validate();
  auto o = dispatch(cfg);
  return summary_of(cfg, o);
}

json RunManifest::to_json() const {
  return {{"config_hash", config_hash}, {"input_hash", input_hash},   {"started_at", started_at},
          {"finished_at", finished_at}, {"seed", seed},               {"library_version", library_version},
          {"files", file_checksums},    {"config", config}};
}

RunManifest run(const ExperimentConfig& cfg) {
  cfg.validate();
  RunManifest man;
  man.started_at = utc_now();
  man.config = config_to_json(cfg);
  const std::string canonical = man.config.dump();
  man.config_hash = sha256_hex(canonical);
  man.input_hash = git_blob_sha1_hex(canonical);
  man.seed = cfg.ensemble.master_seed;
  man.library_version = MESOCLT_VERSION;

  auto o = dispatch(cfg);
  const std::string csv = std::move(o.csv);
  const std::string samples = std::move(o.samples_jsonl);
  const std::string spectra = std::move(o.spectra_jsonl);
  const std::string summary = summary_of(cfg, o).dump(2) + "\n";

  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("output_dir: cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::pair<std::string, const std::string*>> files{{"summary.json", &summary}, {"results.csv", &csv}};
  if (cfg.persist_samples && !samples.empty()) files.emplace_back("samples.jsonl", &samples);
  if (cfg.persist_spectra && !spectra.empty()) files.emplace_back("spectra.jsonl", &spectra);
  for (const auto& [name, bytes] : files) {
    write_file_atomic(dir / name, *bytes);
    man.file_checksums[name] = sha256_hex(*bytes);
  }
  man.finished_at = utc_now();
  write_file_atomic(dir / "manifest.json", man.to_json().dump(2) + "\n");
  return man;
}

// Plot data ---------------------------------------------------------------

PlotKind parse_plot_kind(std::string_view s) {
  if (s == "histogram_vs_gaussian") return PlotKind::histogram_vs_gaussian;
  if (s == "covariance_heatmap") return PlotKind::covariance_heatmap;
  if (s == "rate_loglog") return PlotKind::rate_loglog;
  throw ConfigError("plot kind: expected histogram_vs_gaussian, covariance_heatmap or rate_loglog");
}

std::filesystem::path emit_plot_data(const json& summary, PlotKind kind, const std::filesystem::path& out_dir) {
  if (!summary.contains("results") || !summary.contains("experiment"))
    throw ConfigError("plot: input is not a run summary");
  const auto& r = summary.at("results");
  const std::string exp = summary.at("experiment").get<std::string>();
  std::string name;
  std::string body;
  switch (kind) {
    case PlotKind::histogram_vs_gaussian: {
      if (!r.contains("primary_samples") || !r.contains("primary_target_sd"))
        throw ConfigError("plot: histogram_vs_gaussian needs a summary with samples, got " + exp);
      const auto xs = r.at("primary_samples").get<std::vector<double>>();
      const double sd = r.at("primary_target_sd").get<double>();
      if (!(sd > 0.0)) throw ConfigError("plot: target sd must be positive");
      constexpr int bins = 48;
      const double lo = -6.0 * sd, width = 12.0 * sd / bins;
      std::vector<long> count(bins, 0);
      for (double x : xs) {
        const auto b = static_cast<long>(std::floor((x - lo) / width));
        if (b >= 0 && b < bins) ++count[static_cast<std::size_t>(b)];
      }
      auto Phi = [&](double x) { return 0.5 * std::erfc(-x / (sd * std::numbers::sqrt2)); };
      Csv csv({"bin_left", "bin_right", "count", "gaussian_density"});
      for (int b = 0; b < bins; ++b) {
        const double a = lo + b * width, c = lo + (b + 1) * width;
        csv.row({f2s(a), f2s(c), std::to_string(count[static_cast<std::size_t>(b)]), f2s((Phi(c) - Phi(a)) / width)});
      }
      name = "histogram_vs_gaussian.csv";
      body = csv.str();
      break;
    }
    case PlotKind::covariance_heatmap: {
      if (!r.contains("cov_empirical") || !r.contains("cov_theory") || !r.contains("b_points"))
        throw ConfigError("plot: covariance_heatmap needs a resolvent_clt or gp_sample summary, got " + exp);
      const auto& e = r.at("cov_empirical");
      const auto& t = r.at("cov_theory");
      const auto& b = r.at("b_points");
      Csv csv({"j", "k", "b_j", "b_k", "cov_re", "cov_im", "theory_re", "theory_im"});
      for (std::size_t j = 0; j < e.size(); ++j)
        for (std::size_t k = 0; k < e[j].size(); ++k)
          csv.row({std::to_string(j), std::to_string(k), b[j].get<std::string>(), b[k].get<std::string>(),
                   f2s(e[j][k][0].get<double>()), f2s(e[j][k][1].get<double>()), f2s(t[j][k][0].get<double>()),
                   f2s(t[j][k][1].get<double>())});
      name = "covariance_heatmap.csv";
      body = csv.str();
      break;
    }
    case PlotKind::rate_loglog: {
      if (exp != "bias_rate" || !r.contains("points"))
        throw ConfigError("plot: rate_loglog needs a bias_rate summary, got " + exp);
      const double slope = r.at("slope").get<double>(), icpt = r.at("intercept").get<double>();
      Csv csv({"N", "log_bias", "fit_value"});
      for (const auto& p : r.at("points")) {
        const int n = p.at("N").get<int>();
        csv.row({std::to_string(n), f2s(std::log(p.at("magnitude").get<double>())),
                 f2s(icpt + slope * std::log(static_cast<double>(n)))});
      }
      name = "rate_loglog.csv";
      body = csv.str();
      break;
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("plot: cannot create '" + out_dir.string() + "'");
  const auto path = out_dir / name;
  write_file_atomic(path, body);
  return path;
}

}  // namespace mesoclt
