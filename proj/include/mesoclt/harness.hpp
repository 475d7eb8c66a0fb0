#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mesoclt/ensemble.hpp"
#include "mesoclt/theory.hpp"

namespace mesoclt {

enum class ExperimentKind {
  resolvent_clt,
  linstat_clt,
  local_law,
  bias_rate,
  gp_sample,
  hs_check,
  mixed_moments,
  cumulant_check,
  theory_dump,
};

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view s);
const std::vector<ExperimentKind>& all_experiments();

/// Flat "section.key" -> value view of a config file.
using ConfigMap = std::map<std::string, std::string>;

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::theory_dump;
  EnsembleSpec ensemble;
  MesoscopicScale scale;
  std::vector<int> n_list;
  std::vector<int> samples_per_n;
  std::vector<cplx> b_points{cplx(0.0, 1.0)};
  std::vector<std::string> test_functions{"cauchy"};
  int num_samples = 256;
  int num_workers = 0;
  std::string output_dir = "out";
  bool persist_samples = false;
  bool persist_spectra = false;
  double quad_tol = 1e-8;

  double epsilon = 0.2;
  std::vector<cplx> z_grid;  // empty: bulk grid at eta = N^{-1/2}
  int max_degree = 4;

  int gp_truncation_K = 0;
  double gp_target_tail_variance = 1e-6;

  double hs_eta = 0.25;
  double hs_sigma = 0.0;  // 0: eta/4
  std::string hs_variant = "first_order";
  std::vector<double> hs_lambdas{-2.0, -0.5, 0.0, 0.5, 1.0, 3.0};

  std::string cumulant_law = "gaussian";
  std::string cumulant_function = "sin";
  int cumulant_order = 1;
  int cumulant_nodes = 60;
  double cumulant_parameter = 1.0;

  int theory_grid_points = 201;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Reads "key = value" files with optional [section] headers. A path ending
/// in .json is read as a summary or manifest written by run().
ConfigMap read_config_file(const std::filesystem::path& path);
ConfigMap parse_ini(const std::string& text);
/// "key=value" items, applied in order.
void apply_overrides(ConfigMap& map, const std::vector<std::string>& overrides);
ExperimentConfig config_from_map(const ConfigMap& map);
/// Canonical JSON of the config; num_workers and output_dir are left out.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ConfigMap json_to_config_map(const nlohmann::json& j);

std::string format_complex(cplx z);
cplx parse_complex(std::string_view s);

struct RunManifest {
  std::string config_hash;  // SHA-256 of the canonical config JSON
  std::string input_hash;   // git blob SHA-1 of the same bytes
  std::string started_at;
  std::string finished_at;
  std::uint64_t seed = 0;
  std::string library_version;
  std::map<std::string, std::string> file_checksums;  // SHA-256 per output file
  nlohmann::json config;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Runs the experiment and writes summary.json, results.csv, optional
/// samples.jsonl / spectra.jsonl, and manifest.json into cfg.output_dir.
/// Nothing is written if the experiment throws.
RunManifest run(const ExperimentConfig& cfg);

/// The summary alone (no files); what run() serialises.
nlohmann::json run_summary(const ExperimentConfig& cfg);

enum class PlotKind { histogram_vs_gaussian, covariance_heatmap, rate_loglog };
PlotKind parse_plot_kind(std::string_view s);

/// Writes <kind>.csv into out_dir and returns its path.
std::filesystem::path emit_plot_data(const nlohmann::json& summary, PlotKind kind,
                                     const std::filesystem::path& out_dir);

// File helpers --------------------------------------------------------------

std::string sha256_hex(std::string_view bytes);
std::string git_blob_sha1_hex(std::string_view bytes);
/// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
/// Shortest round-trip decimal.
std::string format_double(double x);

/// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

}  // namespace mesoclt
