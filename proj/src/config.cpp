#include "covbayes/config.hpp"

#include <fstream>
#include <sstream>

#include "covbayes/scenarios.hpp"
#include "json.hpp"

namespace covbayes {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string boundary_name(Boundary b) { return b == Boundary::periodic ? "periodic" : "symmetric"; }

Boundary parse_boundary(const std::string& s) {
  if (s == "symmetric") return Boundary::symmetric;
  if (s == "periodic") return Boundary::periodic;
  throw ConfigError("unknown boundary '" + s + "'");
}

double default_link_scale(LinkKind k) {
  switch (k) {
    case LinkKind::sigmoid: return 200.0;
    case LinkKind::softplus: return 100.0;
    default: return 1.0;
  }
}

PriorConfig parse_prior(const json& j, const std::string& where) {
  check_keys(j, {"kind", "alpha", "truncation", "link", "link_scale", "laplace_scale", "wavelet", "boundary",
                 "hierarchical"},
             where);
  PriorConfig p;
  std::string s = prior_kind_name(p.spec.kind);
  read(j, "kind", s, where);
  p.spec.kind = parse_prior_kind(s);
  read(j, "alpha", p.spec.alpha, where);
  read(j, "truncation", p.spec.truncation, where);
  s = link_name(p.spec.link.kind);
  read(j, "link", s, where);
  p.spec.link.kind = parse_link(s);
  p.spec.link.scale = default_link_scale(p.spec.link.kind);
  read(j, "link_scale", p.spec.link.scale, where);
  read(j, "laplace_scale", p.spec.laplace_scale, where);
  read(j, "wavelet", p.spec.wavelet, where);
  s = boundary_name(p.spec.boundary);
  read(j, "boundary", s, where);
  p.spec.boundary = parse_boundary(s);
  if (j.contains("hierarchical")) {
    const auto& h = j.at("hierarchical");
    const std::string hw = where + ".hierarchical";
    check_keys(h, {"rate", "step", "alpha_init"}, hw);
    HyperConfig hc;
    read(h, "rate", hc.rate, hw);
    read(h, "step", hc.step, hw);
    read(h, "alpha_init", hc.alpha_init, hw);
    p.hyper = hc;
  }
  return p;
}

json prior_json(const PriorConfig& p) {
  json j;
  j["kind"] = prior_kind_name(p.spec.kind);
  j["alpha"] = p.spec.alpha;
  j["truncation"] = p.spec.truncation;
  j["link"] = link_name(p.spec.link.kind);
  j["link_scale"] = p.spec.link.scale;
  j["laplace_scale"] = p.spec.laplace_scale;
  j["wavelet"] = p.spec.wavelet;
  j["boundary"] = boundary_name(p.spec.boundary);
  if (p.hyper) j["hierarchical"] = {{"rate", p.hyper->rate}, {"step", p.hyper->step}, {"alpha_init", p.hyper->alpha_init}};
  return j;
}

}  // namespace

std::string PriorConfig::label() const {
  return prior_kind_name(spec.kind) + (hyper ? "_hierarchical" : "");
}

SamplerConfig desk_sampler_config() {
  SamplerConfig c;
  c.iterations = 5000;
  c.burn_in = 2000;
  c.thin = 10;
  c.adapt_window = 50;
  return c;
}

ExperimentConfig::ExperimentConfig() : sampler(desk_sampler_config()) {}

int ExperimentConfig::covariate_dim() const {
  if (external()) return 0;
  return ground_truth(parse_scenario(scenario)).d;
}

void ExperimentConfig::validate() const {
  const int d = covariate_dim();  // throws for unknown scenarios
  if (D != 1 && D != 2) throw ConfigError("D must be 1 or 2");
  if (external()) {
    if (pattern.csv.empty()) throw ConfigError("external scenario needs pattern.csv");
    if (covariate.rasters.empty()) throw ConfigError("external scenario needs covariate.rasters");
  } else {
    if (!pattern.csv.empty()) throw ConfigError("simulated scenario '" + scenario + "' forbids a pattern file");
    if (!covariate.rasters.empty()) throw ConfigError("simulated scenario '" + scenario + "' forbids rasters");
    if (n_values.empty()) throw ConfigError("n_values is empty");
    for (double n : n_values)
      if (!(n > 0.0)) throw ConfigError("n_values must be positive");
    if (covariate.kind == "gaussian") {
      if (covariate.lengthscales.size() != 1 && covariate.lengthscales.size() != static_cast<std::size_t>(d))
        throw ConfigError("covariate.lengthscales needs 1 or d entries");
      for (double l : covariate.lengthscales)
        if (!(l > 0.0)) throw ConfigError("covariate.lengthscales must be positive");
    } else if (covariate.kind == "voronoi") {
      if (!(covariate.voronoi_intensity > 0.0)) throw ConfigError("covariate.voronoi_intensity must be positive");
    } else {
      throw ConfigError("unknown covariate kind '" + covariate.kind + "'");
    }
    if (!(covariate.resolution > 0.0)) throw ConfigError("covariate.resolution must be positive");
  }
  if (priors.empty()) throw ConfigError("at least one prior is required");
  for (const auto& p : priors) {
    PriorSpec s = p.spec;
    s.d = d ? d : 1;
    if (d) {
      s.validate();
    } else if (!(s.alpha > 0.0)) {
      throw ConfigError("prior alpha must be positive");
    }
    if (!(s.link.scale > 0.0)) throw ConfigError("link_scale must be positive");
    SamplerConfig sc = sampler;
    sc.hyper = p.hyper;
    sc.validate();

    const std::string label = p.label();
    if (algorithm == "pcn" && (p.hyper || s.kind != PriorKind::gaussian))
      throw ConfigError("sampler 'pcn' cannot target prior '" + label + "' (pcn needs a fixed-alpha gaussian prior)");
    if (algorithm == "wpcn" && (p.hyper || s.kind != PriorKind::besov_laplace))
      throw ConfigError("sampler 'wpcn' cannot target prior '" + label +
                        "' (wpcn needs a fixed-alpha besov_laplace prior)");
    if (algorithm == "mwg" && !p.hyper)
      throw ConfigError("sampler 'mwg' cannot target prior '" + label + "' (mwg needs a hierarchical prior)");
    if (algorithm != "auto" && algorithm != "pcn" && algorithm != "wpcn" && algorithm != "mwg")
      throw ConfigError("unknown sampler algorithm '" + algorithm + "'");
  }
  if (replicates == 0) throw ConfigError("replicates must be >= 1");
  if (quadrature_nodes < (D == 2 ? 16u : 4u)) throw ConfigError("quadrature_nodes too small");
}

void apply_full_scale(ExperimentConfig& config) {
  config.n_values = {1.0, 4.0, 16.0, 64.0, 256.0};
  config.replicates = 50;
  config.sampler.iterations = 25000;
  config.sampler.burn_in = 10000;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"scenario", "n_values", "D", "covariate", "prior", "priors", "sampler", "replicates", "seed",
                 "output_dir", "quadrature_nodes", "pattern", "threads", "write_samples"},
             "config");
  ExperimentConfig c;
  read(j, "scenario", c.scenario, "config");
  read(j, "n_values", c.n_values, "config");
  read(j, "D", c.D, "config");
  read(j, "replicates", c.replicates, "config");
  read(j, "seed", c.seed, "config");
  read(j, "output_dir", c.output_dir, "config");
  read(j, "quadrature_nodes", c.quadrature_nodes, "config");
  read(j, "threads", c.threads, "config");
  read(j, "write_samples", c.write_samples, "config");

  if (j.contains("covariate")) {
    const auto& cj = j.at("covariate");
    check_keys(cj, {"kind", "lengthscales", "resolution", "max_per_axis", "voronoi_intensity", "rasters"},
               "covariate");
    read(cj, "kind", c.covariate.kind, "covariate");
    read(cj, "lengthscales", c.covariate.lengthscales, "covariate");
    read(cj, "resolution", c.covariate.resolution, "covariate");
    read(cj, "max_per_axis", c.covariate.max_per_axis, "covariate");
    read(cj, "voronoi_intensity", c.covariate.voronoi_intensity, "covariate");
    read(cj, "rasters", c.covariate.rasters, "covariate");
  }
  if (j.contains("prior") && j.contains("priors")) throw ConfigError("give either 'prior' or 'priors', not both");
  if (j.contains("prior")) c.priors = {parse_prior(j.at("prior"), "prior")};
  if (j.contains("priors")) {
    const auto& pj = j.at("priors");
    if (!pj.is_array()) throw ConfigError("priors must be an array");
    c.priors.clear();
    for (std::size_t i = 0; i < pj.size(); ++i)
      c.priors.push_back(parse_prior(pj[i], "priors[" + std::to_string(i) + "]"));
  }
  if (j.contains("sampler")) {
    const auto& sj = j.at("sampler");
    check_keys(sj, {"algorithm", "b", "iterations", "burn_in", "thin", "adapt", "adapt_window", "target_low",
                    "target_high"},
               "sampler");
    read(sj, "algorithm", c.algorithm, "sampler");
    read(sj, "b", c.sampler.b, "sampler");
    read(sj, "iterations", c.sampler.iterations, "sampler");
    read(sj, "burn_in", c.sampler.burn_in, "sampler");
    read(sj, "thin", c.sampler.thin, "sampler");
    read(sj, "adapt", c.sampler.adapt, "sampler");
    read(sj, "adapt_window", c.sampler.adapt_window, "sampler");
    read(sj, "target_low", c.sampler.target_low, "sampler");
    read(sj, "target_high", c.sampler.target_high, "sampler");
  }
  if (j.contains("pattern")) {
    const auto& pj = j.at("pattern");
    if (pj.is_string()) {
      c.pattern.csv = pj.get<std::string>();
    } else {
      check_keys(pj, {"csv", "meta"}, "pattern");
      read(pj, "csv", c.pattern.csv, "pattern");
      read(pj, "meta", c.pattern.meta, "pattern");
    }
    if (c.pattern.meta.empty() && !c.pattern.csv.empty()) {
      const auto dot = c.pattern.csv.rfind('.');
      c.pattern.meta = (dot == std::string::npos ? c.pattern.csv : c.pattern.csv.substr(0, dot)) + ".json";
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["n_values"] = c.n_values;
  j["D"] = c.D;
  j["covariate"] = {{"kind", c.covariate.kind},
                    {"lengthscales", c.covariate.lengthscales},
                    {"resolution", c.covariate.resolution},
                    {"max_per_axis", c.covariate.max_per_axis},
                    {"voronoi_intensity", c.covariate.voronoi_intensity},
                    {"rasters", c.covariate.rasters}};
  j["priors"] = json::array();
  for (const auto& p : c.priors) j["priors"].push_back(prior_json(p));
  j["sampler"] = {{"algorithm", c.algorithm},       {"b", c.sampler.b},
                  {"iterations", c.sampler.iterations}, {"burn_in", c.sampler.burn_in},
                  {"thin", c.sampler.thin},           {"adapt", c.sampler.adapt},
                  {"adapt_window", c.sampler.adapt_window}, {"target_low", c.sampler.target_low},
                  {"target_high", c.sampler.target_high}};
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["quadrature_nodes"] = c.quadrature_nodes;
  if (!c.pattern.csv.empty()) j["pattern"] = {{"csv", c.pattern.csv}, {"meta", c.pattern.meta}};
  j["threads"] = c.threads;
  j["write_samples"] = c.write_samples;
  return j.dump(2);
}

}  // namespace covbayes
