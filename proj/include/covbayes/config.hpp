#pragma once

// Experiment configuration, read from and written to a single JSON document.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covbayes/priors.hpp"
#include "covbayes/samplers.hpp"

namespace covbayes {

struct CovariateConfig {
  std::string kind = "gaussian";           // "gaussian" or "voronoi"
  std::vector<double> lengthscales{0.5};   // per component; one value is reused for d = 2
  double resolution = 25.0;                // grid nodes per unit length
  std::size_t max_per_axis = 0;            // 0: default_max_per_axis(D)
  double voronoi_intensity = 1.0;
  std::vector<std::string> rasters;        // external data: one raster per component (or one with d = 2)
};

struct PriorConfig {
  PriorSpec spec;  // n and d are filled in per dataset
  std::optional<HyperConfig> hyper;

  // "gaussian", "besov_laplace", with "_hierarchical" appended for MWG runs.
  std::string label() const;
};

struct PatternFiles {
  std::string csv;
  std::string meta;  // sibling JSON; defaults to csv with a .json extension
};

struct ExperimentConfig {
  std::string scenario = "sn1d";  // ground truth id or "external"
  std::vector<double> n_values{1.0, 4.0, 16.0};
  int D = 2;
  CovariateConfig covariate;
  std::vector<PriorConfig> priors{PriorConfig{}};
  SamplerConfig sampler;
  std::string algorithm = "auto";  // "pcn", "wpcn", "mwg" must match every prior
  std::size_t replicates = 5;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t quadrature_nodes = 2500;
  PatternFiles pattern;     // external data only
  std::size_t threads = 0;  // 0: hardware concurrency
  bool write_samples = true;

  ExperimentConfig();

  bool external() const { return scenario == "external"; }
  // Covariate dimension implied by the scenario; 0 for external data (read from rasters).
  int covariate_dim() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Desk profile: 5000 iterations, 2000 burn-in, adaptation every 100 iterations.
SamplerConfig desk_sampler_config();

// n in {1,4,16,64,256}, 50 replicates, 25000 iterations with 10000 burn-in.
void apply_full_scale(ExperimentConfig& config);

// Missing keys take the defaults above; unknown keys are errors. Sigmoid and
// softplus links without an explicit link_scale get 200 and 100.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

}  // namespace covbayes
