#include "covbayes/experiment.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "covbayes/stats.hpp"
#include "json.hpp"

namespace covbayes {

namespace fs = std::filesystem;

namespace {

std::uint64_t bits(double n) { return std::bit_cast<std::uint64_t>(n); }

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

bool same_grid(const CovariateField& a, const CovariateField& b) {
  return a.window.D == b.window.D && a.window.lower == b.window.lower && a.grid.shape == b.grid.shape &&
         a.grid.spacing == b.grid.spacing;
}

}  // namespace

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; !failed && (i = next++) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

std::uint64_t field_seed(const ExperimentConfig& c, double n, std::size_t replicate) {
  return derive_seed(c.seed, {stream_tag("field"), bits(n), replicate});
}

std::uint64_t pattern_seed(const ExperimentConfig& c, double n, std::size_t replicate) {
  return derive_seed(c.seed, {stream_tag("pattern"), bits(n), replicate});
}

std::uint64_t chain_seed(const ExperimentConfig& c, const PriorConfig& prior, double n, std::size_t replicate) {
  return derive_seed(c.seed, {stream_tag("chain"), stream_tag(prior.label()), bits(n), replicate});
}

CovariateField simulate_field(const ExperimentConfig& c, double n, std::size_t replicate) {
  const int d = c.covariate_dim();
  if (d == 0) throw ConfigError("external scenarios have no simulated field");
  const Window w = Window::square(n, c.D);
  const std::size_t cap = c.covariate.max_per_axis ? c.covariate.max_per_axis : default_max_per_axis(c.D);
  const GridLayout grid = make_grid_layout(w, c.covariate.resolution, cap);
  const std::uint64_t seed = field_seed(c, n, replicate);
  if (c.covariate.kind == "voronoi") {
    VoronoiOptions opts;
    opts.intensity = c.covariate.voronoi_intensity;
    opts.d = d;
    return simulate_voronoi_field(w, grid, opts, seed);
  }
  std::vector<double> ls = c.covariate.lengthscales;
  if (ls.size() == 1 && d == 2) ls.push_back(ls[0]);
  return simulate_gaussian_covariate(w, grid, ls, seed);
}

Dataset simulate_dataset(const ExperimentConfig& c, double n, std::size_t replicate) {
  Dataset ds;
  ds.n = n;
  ds.replicate = replicate;
  ds.truth = ground_truth(parse_scenario(c.scenario));
  ds.field = simulate_field(c, n, replicate);
  ds.pattern = simulate_cox_thinning(ds.truth->function(), ds.field, pattern_seed(c, n, replicate)).pattern;
  return ds;
}

std::string dataset_stem(double n, std::size_t replicate) {
  return "n" + shortest(n) + "_r" + std::to_string(replicate);
}

FitOutput fit_dataset(const ExperimentConfig& c, const PriorConfig& prior, const Dataset& data,
                      std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  FitOutput out;
  out.spec = prior.spec;
  out.spec.n = data.n;
  out.spec.d = data.field.d;
  out.spec.validate();

  SamplerConfig sc = c.sampler;
  sc.hyper = prior.hyper;
  const LikelihoodData lik(data.pattern, data.field, make_quadrature(data.pattern.window, c.quadrature_nodes));
  const PosteriorModel model(out.spec, lik);
  out.chain = run_chain(sc, model, seed);
  if (out.chain.samples.size() < 2) throw ConfigError("fewer than 2 stored samples; lower thin or burn_in");

  out.posterior_mean = PosteriorMean(out.chain.samples, out.spec).function();
  out.summary = summarize(out.chain.samples, out.spec);

  RunMetrics& m = out.metrics;
  m.scenario = c.scenario;
  m.n = data.n;
  m.prior = prior.label();
  m.alpha = prior.hyper ? mean(out.chain.sample_alpha) : out.spec.alpha;
  m.rel_l1 = data.truth ? relative_l1_error(out.posterior_mean, data.truth->function(), data.field.d)
                        : std::nan("");
  m.acc_rate = out.chain.post_burn_in_acceptance;
  m.seed = seed;
  m.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_dataset(const std::string& dir, const Dataset& data) {
  ensure_dir(dir);
  const std::string stem = dataset_stem(data.n, data.replicate);
  write_pattern((fs::path(dir) / ("pattern_" + stem + ".csv")).string(),
                (fs::path(dir) / ("pattern_" + stem + ".json")).string(), data.pattern);
  write_raster_file((fs::path(dir) / ("raster_" + stem + ".txt")).string(), data.field);
}

void write_fit(const std::string& dir, const FitOutput& fit, bool write_samples) {
  ensure_dir(dir);
  const fs::path p(dir);
  write_trace_csv((p / "trace.csv").string(), fit.chain);
  if (write_samples) write_samples_csv((p / "samples.csv").string(), fit.chain);
  write_summary_csv((p / "summary.csv").string(), fit.summary);
  write_metrics_json((p / "metrics.json").string(), fit.metrics);
}

IngestResult ingest_dataset(const std::string& pattern_csv, const std::string& pattern_meta,
                            const std::vector<std::string>& rasters) {
  if (rasters.empty()) throw ConfigError("ingest needs at least one raster");
  IngestResult r;
  r.pattern = read_pattern(pattern_csv, pattern_meta);

  std::vector<CovariateField> raw;
  for (const auto& path : rasters) raw.push_back(read_raster_file(path, false));
  int d = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!same_grid(raw[i], raw[0])) throw DataError("raster " + rasters[i] + " is on a different grid");
    d += raw[i].d;
  }
  if (d > 2) throw DataError("at most 2 covariate components are supported, got " + std::to_string(d));
  if (raw[0].window.D != r.pattern.window.D) throw DataError("raster and pattern dimensions differ");

  CovariateField& f = r.field;
  f.window = raw[0].window;
  f.grid = raw[0].grid;
  f.d = d;
  f.interpolation = raw[0].interpolation;
  f.values.assign(f.node_count() * d, 0.0);
  int comp = 0;
  for (const auto& src : raw) {
    for (int k = 0; k < src.d; ++k, ++comp) {
      AffineMap m{INFINITY, -INFINITY};
      for (std::size_t i = 0; i < src.node_count(); ++i) {
        m.min = std::min(m.min, src.values[i * src.d + k]);
        m.max = std::max(m.max, src.values[i * src.d + k]);
      }
      if (!(m.max > m.min)) throw DataError("covariate component " + std::to_string(comp + 1) + " is constant");
      for (std::size_t i = 0; i < src.node_count(); ++i)
        f.values[i * d + comp] = std::clamp(m.apply(src.values[i * src.d + k]), 0.0, 1.0);
      r.maps.push_back(m);
    }
  }
  for (std::size_t i = 0; i < r.pattern.points.size(); ++i)
    if (!f.window.contains(r.pattern.points[i], 1e-12)) r.outside.push_back(i);
  return r;
}

void write_ingest(const std::string& dir, const IngestResult& r) {
  ensure_dir(dir);
  const fs::path p(dir);
  write_pattern((p / "pattern.csv").string(), (p / "pattern.json").string(), r.pattern);
  write_raster_file((p / "covariate.txt").string(), r.field);
  nlohmann::ordered_json j;
  j["points"] = r.pattern.count();
  j["d"] = r.field.d;
  j["maps"] = nlohmann::json::array();
  for (const auto& m : r.maps) j["maps"].push_back({{"min", m.min}, {"max", m.max}});
  j["outside_rows"] = r.outside;
  std::ofstream os((p / "ingest.json").string());
  if (!os) throw std::runtime_error("cannot write " + (p / "ingest.json").string());
  os << j.dump(2) << '\n';
}

std::vector<Dataset> load_datasets(const ExperimentConfig& c) {
  const auto ing = ingest_dataset(c.pattern.csv, c.pattern.meta, c.covariate.rasters);
  if (!ing.outside.empty())
    throw DataError(std::to_string(ing.outside.size()) + " points lie outside the raster extent");
  const Window& pw = ing.pattern.window;
  if (!ing.field.window.contains(pw.lower, 1e-9) || !ing.field.window.contains(pw.upper, 1e-9))
    throw DataError("pattern window is not covered by the rasters");
  std::vector<Dataset> out;
  for (std::size_t r = 0; r < c.replicates; ++r) {
    Dataset ds;
    ds.field = ing.field;
    ds.pattern = ing.pattern;
    ds.n = pw.volume();
    ds.replicate = r;
    out.push_back(std::move(ds));
  }
  return out;
}

std::vector<Dataset> simulate_datasets(const ExperimentConfig& c) {
  std::vector<Dataset> out(c.n_values.size() * c.replicates);
  parallel_for(out.size(), c.threads, [&](std::size_t i) {
    out[i] = simulate_dataset(c, c.n_values[i / c.replicates], i % c.replicates);
  });
  return out;
}

std::vector<TableRow> aggregate_metrics(const std::vector<RunMetrics>& metrics) {
  std::map<std::pair<std::string, double>, std::vector<double>> cells;
  for (const auto& m : metrics)
    if (std::isfinite(m.rel_l1)) cells[{m.prior, m.n}].push_back(m.rel_l1);
  std::vector<TableRow> rows;
  for (const auto& [key, v] : cells) rows.push_back({key.second, key.first, mean(v), sample_sd(v), v.size()});
  return rows;
}

void write_table_csv(const std::string& path, const std::vector<TableRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "n,prior,mean_rel_l1,sd_rel_l1,n_replicates\n";
  for (const auto& r : rows)
    os << shortest(r.n) << ',' << r.prior << ',' << shortest(r.mean_rel_l1) << ',' << shortest(r.sd_rel_l1) << ','
       << r.n_replicates << '\n';
}

std::vector<std::string> find_metrics_files(const std::string& dir_or_glob) {
  std::vector<std::string> out;
  if (fs::is_directory(dir_or_glob)) {
    for (const auto& e : fs::recursive_directory_iterator(dir_or_glob))
      if (e.is_regular_file() && e.path().filename() == "metrics.json") out.push_back(e.path().string());
  } else {
    glob_t g{};
    if (::glob(dir_or_glob.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DiagRow> ergodicity_rows(const ExperimentConfig& c) {
  std::vector<DiagRow> rows(c.n_values.size() * c.replicates);
  parallel_for(rows.size(), c.threads, [&](std::size_t i) {
    const double n = c.n_values[i / c.replicates];
    const std::size_t r = i % c.replicates;
    const auto field = simulate_field(c, n, r);
    const auto e = ergodicity_diagnostic(field, [](const Vec2& z) { return z[0]; }, 0.5);
    rows[i] = {n, r, e.spatial_average, e.deviation};
  });
  return rows;
}

std::vector<std::string> run_simulate(const ExperimentConfig& c) {
  c.validate();
  if (c.external()) throw ConfigError("simulate needs a simulated scenario");
  const std::string dir = (fs::path(c.output_dir) / "data").string();
  ensure_dir(dir);
  const auto data = simulate_datasets(c);
  std::vector<std::string> written;
  for (const auto& ds : data) {
    write_dataset(dir, ds);
    written.push_back((fs::path(dir) / ("pattern_" + dataset_stem(ds.n, ds.replicate) + ".csv")).string());
  }
  return written;
}

std::vector<RunMetrics> run_fit(const ExperimentConfig& c, const std::function<void(const RunMetrics&)>& on_done) {
  c.validate();
  const auto data = c.external() ? load_datasets(c) : simulate_datasets(c);
  ensure_dir(c.output_dir);
  if (!c.external()) {
    const std::string dir = (fs::path(c.output_dir) / "data").string();
    for (const auto& ds : data) write_dataset(dir, ds);
  }
  const std::size_t tasks = data.size() * c.priors.size();
  std::vector<RunMetrics> metrics(tasks);
  std::mutex mu;
  parallel_for(tasks, c.threads, [&](std::size_t i) {
    const auto& prior = c.priors[i / data.size()];
    const auto& ds = data[i % data.size()];
    const auto fit = fit_dataset(c, prior, ds, chain_seed(c, prior, ds.n, ds.replicate));
    write_fit((fs::path(c.output_dir) / "fit" / prior.label() / dataset_stem(ds.n, ds.replicate)).string(), fit,
              c.write_samples);
    metrics[i] = fit.metrics;
    if (on_done) {
      std::lock_guard<std::mutex> lock(mu);
      on_done(fit.metrics);
    }
  });
  return metrics;
}

}  // namespace covbayes
