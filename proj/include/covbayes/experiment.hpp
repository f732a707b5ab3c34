#pragma once

// Simulate -> fit -> evaluate pipeline shared by the command line tool, the
// acceptance checks and the Python module.
//
// Seed streams: the field of replicate r at window volume n uses
// derive_seed(seed, {stream_tag("field"), bits(n), r}), its pattern
// stream_tag("pattern") in place of "field", and the chain for prior P
// derive_seed(seed, {stream_tag("chain"), stream_tag(P.label()), bits(n), r}),
// with bits(n) the IEEE-754 bit pattern of n.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "covbayes/config.hpp"
#include "covbayes/covfield.hpp"
#include "covbayes/estimate.hpp"
#include "covbayes/pointproc.hpp"
#include "covbayes/samplers.hpp"
#include "covbayes/scenarios.hpp"

namespace covbayes {

// Runs body(0..count-1) on up to `threads` workers (0: hardware concurrency).
// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

std::uint64_t field_seed(const ExperimentConfig& c, double n, std::size_t replicate);
std::uint64_t pattern_seed(const ExperimentConfig& c, double n, std::size_t replicate);
std::uint64_t chain_seed(const ExperimentConfig& c, const PriorConfig& prior, double n, std::size_t replicate);

struct Dataset {
  CovariateField field;
  PointPattern pattern;
  double n = 0.0;
  std::size_t replicate = 0;
  std::optional<GroundTruth> truth;  // simulated scenarios only
};

CovariateField simulate_field(const ExperimentConfig& c, double n, std::size_t replicate);
Dataset simulate_dataset(const ExperimentConfig& c, double n, std::size_t replicate);

// "n4_r0"; non-integral n keep their shortest decimal form.
std::string dataset_stem(double n, std::size_t replicate);

struct FitOutput {
  PriorSpec spec;  // with n and d of the dataset
  ChainResult chain;
  PosteriorSummary summary;
  IntensityFn posterior_mean;
  RunMetrics metrics;
};

FitOutput fit_dataset(const ExperimentConfig& c, const PriorConfig& prior, const Dataset& data,
                      std::uint64_t seed);

// Writes pattern_<stem>.csv/.json and raster_<stem>.txt into dir.
void write_dataset(const std::string& dir, const Dataset& data);
// Writes trace.csv, samples.csv (optional), summary.csv and metrics.json into dir.
void write_fit(const std::string& dir, const FitOutput& fit, bool write_samples);

struct AffineMap {
  double min = 0.0;
  double max = 1.0;
  double apply(double v) const { return (v - min) / (max - min); }
  double invert(double z) const { return min + z * (max - min); }
};

struct IngestResult {
  PointPattern pattern;
  CovariateField field;             // components rescaled to [0,1]
  std::vector<AffineMap> maps;      // one per covariate component
  std::vector<std::size_t> outside; // pattern rows (0-based) outside the raster extent
};

// Rasters share one grid; each contributes its components in order (d <= 2).
// Throws DataError for non-finite cells, constant components or mismatched grids.
IngestResult ingest_dataset(const std::string& pattern_csv, const std::string& pattern_meta,
                            const std::vector<std::string>& rasters);
// Writes pattern.csv/.json, covariate.txt and ingest.json (maps and report).
void write_ingest(const std::string& dir, const IngestResult& r);

// Datasets for an external scenario: the ingested data, once per replicate.
std::vector<Dataset> load_datasets(const ExperimentConfig& c);
std::vector<Dataset> simulate_datasets(const ExperimentConfig& c);

struct TableRow {
  double n = 0.0;
  std::string prior;
  double mean_rel_l1 = 0.0;
  double sd_rel_l1 = 0.0;
  std::size_t n_replicates = 0;
};

// One row per (n, prior) with a finite rel_l1, ordered by prior then n.
std::vector<TableRow> aggregate_metrics(const std::vector<RunMetrics>& metrics);
void write_table_csv(const std::string& path, const std::vector<TableRow>& rows);
// A directory (searched recursively for metrics.json) or a glob pattern.
std::vector<std::string> find_metrics_files(const std::string& dir_or_glob);

struct DiagRow {
  double n = 0.0;
  std::size_t replicate = 0;
  double spatial_average = 0.0;
  double deviation = 0.0;
};

// Spatial average of the first covariate component against its stationary mean 1/2.
std::vector<DiagRow> ergodicity_rows(const ExperimentConfig& c);

// Command bodies; each writes under c.output_dir and returns what it wrote.
std::vector<std::string> run_simulate(const ExperimentConfig& c);
std::vector<RunMetrics> run_fit(const ExperimentConfig& c,
                                const std::function<void(const RunMetrics&)>& on_done = {});

}  // namespace covbayes
