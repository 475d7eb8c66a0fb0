// mesoclt command-line driver.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mesoclt/errors.hpp"
#include "mesoclt/harness.hpp"

namespace {

struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string output;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

int run_experiment(mesoclt::ExperimentKind kind, const RunFlags& f) {
  mesoclt::ConfigMap map;
  if (!f.config.empty()) map = mesoclt::read_config_file(f.config);
  const std::string name(mesoclt::to_string(kind));
  if (auto it = map.find("experiment"); it != map.end() && it->second != name)
    throw mesoclt::ConfigError("experiment: config file says '" + it->second + "' but the subcommand is '" + name + "'");
  map["experiment"] = name;
  mesoclt::apply_overrides(map, f.sets);
  if (!f.output.empty()) map["output_dir"] = f.output;
  if (f.workers) map["num_workers"] = std::to_string(*f.workers);
  if (f.seed) map["ensemble.master_seed"] = std::to_string(*f.seed);
  const auto cfg = mesoclt::config_from_map(map);
  const auto man = mesoclt::run(cfg);
  std::cout << name << ": wrote " << man.file_checksums.size() + 1 << " files to " << cfg.output_dir
            << " (config " << man.config_hash.substr(0, 12) << ")\n";
  return mesoclt::kExitOk;
}

int run_plot(const std::string& summary_path, const std::string& kind, const std::string& out) {
  std::ifstream in(summary_path);
  if (!in) throw mesoclt::ConfigError("plot: cannot open '" + summary_path + "'");
  nlohmann::json summary;
  try {
    in >> summary;
  } catch (const nlohmann::json::exception& e) {
    throw mesoclt::ConfigError(std::string("plot: invalid JSON: ") + e.what());
  }
  const auto path = mesoclt::emit_plot_data(summary, mesoclt::parse_plot_kind(kind), out);
  std::cout << "wrote " << path.string() << "\n";
  return mesoclt::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesoscopic linear statistics of Wigner matrices: Monte Carlo experiments and limiting laws"};
  app.require_subcommand(1);

  RunFlags flags;
  std::vector<std::pair<mesoclt::ExperimentKind, CLI::App*>> subs;
  for (auto kind : mesoclt::all_experiments()) {
    auto* sub = app.add_subcommand(std::string(mesoclt::to_string(kind)), "run the " +
                                                                              std::string(mesoclt::to_string(kind)) +
                                                                              " experiment");
    sub->add_option("--config", flags.config, "config file (key = value with [sections], or a summary/manifest .json)");
    sub->add_option("--set", flags.sets, "override a config key, e.g. --set ensemble.dimension=512")->allow_extra_args(false);
    sub->add_option("--output", flags.output, "output directory");
    sub->add_option("--workers", flags.workers, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags.seed, "master seed");
    subs.emplace_back(kind, sub);
  }
  std::string summary_path, plot_kind, plot_out = ".";
  auto* plot = app.add_subcommand("plot", "write plot-ready CSV from a summary.json");
  plot->add_option("--summary", summary_path, "summary.json from a previous run")->required();
  plot->add_option("--kind", plot_kind, "histogram_vs_gaussian | covariance_heatmap | rate_loglog")->required();
  plot->add_option("--output", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mesoclt::kExitConfig;
  }

  try {
    if (plot->parsed()) return run_plot(summary_path, plot_kind, plot_out);
    for (const auto& [kind, sub] : subs)
      if (sub->parsed()) return run_experiment(kind, flags);
  } catch (const mesoclt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mesoclt::kExitConfig;
  } catch (const mesoclt::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mesoclt::kExitConfig;
  } catch (const mesoclt::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return mesoclt::kExitNumerical;
  } catch (const mesoclt::ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return mesoclt::kExitNumerical;
  }
  return mesoclt::kExitConfig;
}
