// covbayes: simulate, fit, tabulate and diagnose covariate-based intensity
// experiments.
//
// Exit codes: 0 success, 2 configuration error, 3 data validation error,
// 4 numerical failure, 1 anything else (I/O).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "covbayes/config.hpp"
#include "covbayes/experiment.hpp"
#include "covbayes/stats.hpp"

using namespace covbayes;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::string out;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config (desk defaults when omitted)");
  cmd->add_option("--seed", f.seed, "override the config seed");
  cmd->add_flag("--paper-scale", f.paper_scale, "n in {1,...,256}, 50 replicates, 25000 iterations");
  cmd->add_option("--out", f.out, "override output_dir");
  cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.paper_scale) apply_full_scale(c);
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.threads) c.threads = *f.threads;
  c.validate();
  return c;
}

void save_resolved(const ExperimentConfig& c) {
  fs::create_directories(c.output_dir);
  std::ofstream((fs::path(c.output_dir) / "config.json").string()) << serialize_config(c) << '\n';
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int cmd_simulate(const CommonFlags& f) {
  const auto c = resolve(f);
  save_resolved(c);
  const auto files = run_simulate(c);
  std::cout << "wrote " << files.size() << " datasets to " << (fs::path(c.output_dir) / "data").string() << '\n';
  return 0;
}

int cmd_fit(const CommonFlags& f) {
  const auto c = resolve(f);
  save_resolved(c);
  run_fit(c, [](const RunMetrics& m) {
    std::cout << m.prior << " n=" << num(m.n) << " rel_l1=" << num(m.rel_l1) << " acc=" << num(m.acc_rate)
              << " time=" << num(m.runtime_s) << "s\n";
  });
  return 0;
}

int cmd_table(const CommonFlags& f, const std::string& metrics_arg) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (!f.out.empty()) c.output_dir = f.out;
  const std::string where = metrics_arg.empty() ? (fs::path(c.output_dir) / "fit").string() : metrics_arg;
  const auto files = find_metrics_files(where);
  if (files.empty()) throw ConfigError("no metrics files match " + where);
  std::vector<RunMetrics> metrics;
  for (const auto& p : files) metrics.push_back(read_metrics_json(p));
  const auto rows = aggregate_metrics(metrics);
  fs::create_directories(c.output_dir);
  const std::string path = (fs::path(c.output_dir) / "table.csv").string();
  write_table_csv(path, rows);
  std::cout << std::ifstream(path).rdbuf();
  return 0;
}

int cmd_ingest(const std::string& pattern, std::string meta, const std::vector<std::string>& rasters,
               const std::string& out) {
  if (meta.empty()) meta = fs::path(pattern).replace_extension(".json").string();
  const auto r = ingest_dataset(pattern, meta, rasters);
  write_ingest(out, r);
  for (std::size_t k = 0; k < r.maps.size(); ++k)
    std::cout << "z" << k + 1 << " = (v - " << num(r.maps[k].min) << ") / " << num(r.maps[k].max - r.maps[k].min)
              << '\n';
  std::cout << r.pattern.count() << " points, " << r.outside.size() << " outside the raster extent\n";
  if (!r.outside.empty()) {
    std::cerr << "validation failed: see " << (fs::path(out) / "ingest.json").string() << '\n';
    return 3;
  }
  return 0;
}

int cmd_diag(const CommonFlags& f) {
  const auto c = resolve(f);
  if (c.external()) throw ConfigError("diag needs a simulated covariate");
  const auto rows = ergodicity_rows(c);
  fs::create_directories(c.output_dir);
  const std::string path = (fs::path(c.output_dir) / "diag.csv").string();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "n,replicate,spatial_average,deviation\n";
  std::map<double, std::vector<double>> by_n;
  for (const auto& r : rows) {
    os << r.n << ',' << r.replicate << ',' << r.spatial_average << ',' << r.deviation << '\n';
    by_n[r.n].push_back(r.deviation);
  }
  for (const auto& [n, dev] : by_n) std::cout << "n=" << num(n) << " mean deviation " << num(mean(dev)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian covariate-based intensity estimation for spatial point processes"};
  app.require_subcommand(1);

  CommonFlags sim_f, fit_f, table_f, diag_f;
  auto* sim = app.add_subcommand("simulate", "write simulated patterns and covariate rasters");
  add_common(sim, sim_f);
  auto* fit = app.add_subcommand("fit", "simulate (or ingest) data and run the samplers");
  add_common(fit, fit_f);
  auto* table = app.add_subcommand("table", "aggregate metrics.json files into table.csv");
  add_common(table, table_f);
  std::string metrics_arg;
  table->add_option("--metrics", metrics_arg, "directory or glob of metrics files (default <out>/fit)");
  auto* diag = app.add_subcommand("diag", "covariate ergodicity diagnostic over n_values");
  add_common(diag, diag_f);

  auto* ingest = app.add_subcommand("ingest", "validate and rescale an external dataset");
  std::string pattern, meta, ingest_out = "ingested";
  std::vector<std::string> rasters;
  ingest->add_option("--pattern", pattern, "pattern CSV")->required();
  ingest->add_option("--meta", meta, "pattern metadata JSON (default: pattern with .json)");
  ingest->add_option("--raster", rasters, "covariate raster, repeat for several components")->required();
  ingest->add_option("--out", ingest_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_f);
    if (*fit) return cmd_fit(fit_f);
    if (*table) return cmd_table(table_f, metrics_arg);
    if (*ingest) return cmd_ingest(pattern, meta, rasters, ingest_out);
    if (*diag) return cmd_diag(diag_f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
