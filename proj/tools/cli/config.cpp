#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "oed/errors.hpp"

namespace oed::cli {

namespace {

const char* const kDefaults = R"({
  "seed": null,
  "workers": 1,
  "out": "out",
  "model": {
    "name": "simple",
    "experiments": 1,
    "expansion": "",
    "kinetics": {"mechanism": "", "thermo": "", "pressure": 101325.0, "t_end": 1.0,
                 "rtol": 1e-8, "atol": 1e-14}
  },
  "prior": null,
  "design_box": null,
  "noise": {"sigma": null, "components": null},
  "estimator": {"n_out": 1000, "n_in": 1000, "reuse": true},
  "scan": {"nodes": 101, "common_random_numbers": false},
  "optimize": {
    "optimizer": "nmns",
    "n_runs": 100,
    "budget": 10000,
    "start": null,
    "spsa": {"a": null, "A": null, "c": null, "alpha": 0.602, "gamma": 0.101},
    "nmns": {"reflect": 1.0, "expand": 2.0, "contract": 0.5, "shrink": 0.9, "edge": 0.1,
             "reevaluate_best_on_shrink": true},
    "rescore": {"n_out": 10000, "n_in": 10000, "reuse": true}
  },
  "surrogate": {"p": 8, "tol": 1e-8, "max_evals": 10000, "error_level": 0,
                "require_tolerance": false, "file": "expansion.txt"},
  "infer": {
    "design": null,
    "theta_true": null,
    "data": null,
    "start": null,
    "n_steps": 20000,
    "burn_in": null,
    "thin": 1,
    "initial_scale": 0.1,
    "adapt": true,
    "adapt_start": 1000,
    "adapt_interval": 100,
    "delayed_rejection": true,
    "dr_scale": 0.2,
    "grid_resolution": 201
  },
  "bias": {"design": null, "n_in_list": [100, 1000, 10000], "reuse": true,
           "total_outer": 100000, "replications": 10},
  "validate": {"criteria": []}
})";

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Rejects keys absent from the defaults and values of the wrong JSON kind.
void check_against(const Json& user, const Json& schema, const std::string& where) {
  if (!user.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!schema.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    const Json& def = schema.at(key);
    if (def.is_null() || value.is_null()) continue;
    if (!same_kind(def, value)) {
      throw ConfigError("config key '" + path + "' must be of type " + std::string(def.type_name()));
    }
    if (def.is_object()) check_against(value, def, path);
  }
}

void merge_into(Json& base, const Json& user) {
  for (const auto& [key, value] : user.items()) {
    if (value.is_object() && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError("'" + path + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("'" + path + "' must be finite");
  return v;
}

std::size_t count(const Json& j, const std::string& path) {
  const double v = number(j, path);
  if (v < 0.0 || v != std::floor(v) || v > 9.0e15) {
    throw ConfigError("'" + path + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

Vector vector_of(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError("'" + path + "' must be a nonempty array of numbers");
  Vector v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

std::optional<Vector> optional_vector(const Json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  return vector_of(j, path);
}

std::optional<Box> optional_box(const Json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.empty()) throw ConfigError("'" + path + "' must be a nonempty array of [lo, hi] pairs");
  std::vector<Interval> bounds;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string item = path + "[" + std::to_string(i) + "]";
    const Vector pair = vector_of(j[i], item);
    if (pair.size() != 2) throw ConfigError("'" + item + "' must be a [lo, hi] pair");
    bounds.push_back({pair[0], pair[1]});
  }
  try {
    return Box(std::move(bounds));
  } catch (const ConfigError& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

std::vector<NoiseComponent> noise_components(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("'noise.components' must be a nonempty array");
  std::vector<NoiseComponent> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string item = "noise.components[" + std::to_string(i) + "]";
    const Json schema = {{"rel", 0.0}, {"abs", 0.0}, {"log_time", false}};
    check_against(j[i], schema, item);
    Json c = schema;
    merge_into(c, j[i]);
    NoiseComponent nc{number(c["rel"], item + ".rel"), number(c["abs"], item + ".abs"),
                      c["log_time"].get<bool>()};
    if (nc.rel < 0.0 || nc.abs < 0.0) throw ConfigError("'" + item + "' must have rel, abs >= 0");
    if (nc.rel == 0.0 && nc.abs == 0.0) throw ConfigError("'" + item + "' has zero noise");
    out.push_back(nc);
  }
  return out;
}

EigConfig estimator_of(const Json& j, const std::string& path) {
  EigConfig e;
  e.n_out = count(j["n_out"], path + ".n_out");
  e.n_in = count(j["n_in"], path + ".n_in");
  e.reuse = j["reuse"].get<bool>();
  try {
    e.validate();
  } catch (const ConfigError& err) {
    throw ConfigError("'" + path + "': " + err.what());
  }
  return e;
}

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError("'" + path + "' must be positive");
}

}  // namespace

const Json& config_defaults() {
  static const Json defaults = Json::parse(kDefaults);
  return defaults;
}

void apply_override(Json& user, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key.path=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &user;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

Json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return j;
}

RunConfig resolve_config(const Json& user) {
  check_against(user, config_defaults(), "");
  RunConfig cfg;
  cfg.resolved = config_defaults();
  merge_into(cfg.resolved, user);
  const Json& r = cfg.resolved;

  if (r["seed"].is_null()) throw ConfigError("'seed' is required");
  cfg.seed = static_cast<std::uint64_t>(count(r["seed"], "seed"));
  cfg.workers = count(r["workers"], "workers");
  if (cfg.workers == 0) throw ConfigError("'workers' must be at least 1");
  cfg.out = r["out"].get<std::string>();

  const Json& m = r["model"];
  cfg.model.name = m["name"].get<std::string>();
  cfg.model.experiments = count(m["experiments"], "model.experiments");
  if (cfg.model.experiments == 0) throw ConfigError("'model.experiments' must be at least 1");
  cfg.model.expansion = m["expansion"].get<std::string>();
  const Json& k = m["kinetics"];
  cfg.model.mechanism = k["mechanism"].get<std::string>();
  cfg.model.thermo = k["thermo"].get<std::string>();
  cfg.model.pressure = number(k["pressure"], "model.kinetics.pressure");
  cfg.model.t_end = number(k["t_end"], "model.kinetics.t_end");
  cfg.model.rtol = number(k["rtol"], "model.kinetics.rtol");
  cfg.model.atol = number(k["atol"], "model.kinetics.atol");
  require_positive(cfg.model.pressure, "model.kinetics.pressure");
  require_positive(cfg.model.t_end, "model.kinetics.t_end");
  require_positive(cfg.model.rtol, "model.kinetics.rtol");
  require_positive(cfg.model.atol, "model.kinetics.atol");

  cfg.prior = optional_box(r["prior"], "prior");
  cfg.design_box = optional_box(r["design_box"], "design_box");
  if (!r["noise"]["sigma"].is_null()) {
    cfg.noise_sigma = number(r["noise"]["sigma"], "noise.sigma");
    require_positive(*cfg.noise_sigma, "noise.sigma");
  }
  if (!r["noise"]["components"].is_null()) cfg.noise_components = noise_components(r["noise"]["components"]);
  if (cfg.noise_sigma && cfg.noise_components) {
    throw ConfigError("give either 'noise.sigma' or 'noise.components', not both");
  }

  cfg.estimator = estimator_of(r["estimator"], "estimator");
  cfg.estimator.seed = cfg.seed;
  cfg.estimator.workers = cfg.workers;
  cfg.scan_nodes = count(r["scan"]["nodes"], "scan.nodes");
  if (cfg.scan_nodes < 2) throw ConfigError("'scan.nodes' must be at least 2");
  cfg.common_random_numbers = r["scan"]["common_random_numbers"].get<bool>();

  const Json& o = r["optimize"];
  auto& ens = cfg.optimize.ensemble;
  ens.optimizer = optimizer_from_string(o["optimizer"].get<std::string>());
  ens.n_runs = count(o["n_runs"], "optimize.n_runs");
  ens.budget = count(o["budget"], "optimize.budget");
  if (auto s = optional_vector(o["start"], "optimize.start")) ens.start = *s;
  const Json& sp = o["spsa"];
  const int given = !sp["a"].is_null() + !sp["A"].is_null() + !sp["c"].is_null();
  if (given != 0 && given != 3) throw ConfigError("'optimize.spsa' needs a, A and c together");
  if (given == 3) {
    GainSchedule g;
    g.a = number(sp["a"], "optimize.spsa.a");
    g.A = number(sp["A"], "optimize.spsa.A");
    g.c = number(sp["c"], "optimize.spsa.c");
    g.alpha = number(sp["alpha"], "optimize.spsa.alpha");
    g.gamma = number(sp["gamma"], "optimize.spsa.gamma");
    g.validate();
    cfg.optimize.gains = g;
    ens.gains = {g};
  }
  const Json& nm = o["nmns"];
  ens.nmns.reflect = number(nm["reflect"], "optimize.nmns.reflect");
  ens.nmns.expand = number(nm["expand"], "optimize.nmns.expand");
  ens.nmns.contract = number(nm["contract"], "optimize.nmns.contract");
  ens.nmns.shrink = number(nm["shrink"], "optimize.nmns.shrink");
  ens.nmns.edge = number(nm["edge"], "optimize.nmns.edge");
  ens.nmns.reevaluate_best_on_shrink = nm["reevaluate_best_on_shrink"].get<bool>();
  ens.seed = cfg.seed;
  ens.workers = cfg.workers;
  ens.validate();
  cfg.optimize.rescore = estimator_of(o["rescore"], "optimize.rescore");

  const Json& su = r["surrogate"];
  cfg.surrogate.nisp.p = count(su["p"], "surrogate.p");
  cfg.surrogate.nisp.tol = number(su["tol"], "surrogate.tol");
  cfg.surrogate.nisp.max_evals = count(su["max_evals"], "surrogate.max_evals");
  cfg.surrogate.nisp.workers = cfg.workers;
  cfg.surrogate.error_level = static_cast<int>(count(su["error_level"], "surrogate.error_level"));
  cfg.surrogate.require_tolerance = su["require_tolerance"].get<bool>();
  cfg.surrogate.file = su["file"].get<std::string>();
  if (cfg.surrogate.nisp.tol < 0.0) throw ConfigError("'surrogate.tol' must be non-negative");
  if (cfg.surrogate.nisp.max_evals == 0) throw ConfigError("'surrogate.max_evals' must be positive");
  if (cfg.surrogate.error_level > 20) throw ConfigError("'surrogate.error_level' must be at most 20");
  if (cfg.surrogate.file.empty()) throw ConfigError("'surrogate.file' must be nonempty");

  const Json& in = r["infer"];
  auto& inf = cfg.infer;
  inf.design = optional_vector(in["design"], "infer.design");
  inf.theta_true = optional_vector(in["theta_true"], "infer.theta_true");
  inf.data = optional_vector(in["data"], "infer.data");
  inf.start = optional_vector(in["start"], "infer.start");
  inf.n_steps = count(in["n_steps"], "infer.n_steps");
  if (inf.n_steps == 0) throw ConfigError("'infer.n_steps' must be positive");
  inf.initial_scale = number(in["initial_scale"], "infer.initial_scale");
  require_positive(inf.initial_scale, "infer.initial_scale");
  if (!in["burn_in"].is_null()) inf.dram.burn_in = count(in["burn_in"], "infer.burn_in");
  inf.dram.thin = count(in["thin"], "infer.thin");
  inf.dram.adapt = in["adapt"].get<bool>();
  inf.dram.adapt_start = count(in["adapt_start"], "infer.adapt_start");
  inf.dram.adapt_interval = count(in["adapt_interval"], "infer.adapt_interval");
  inf.dram.delayed_rejection = in["delayed_rejection"].get<bool>();
  inf.dram.dr_scale = number(in["dr_scale"], "infer.dr_scale");
  inf.dram.seed = stream_seed(cfg.seed, stream::kChain);
  inf.grid_resolution = count(in["grid_resolution"], "infer.grid_resolution");
  if (inf.grid_resolution == 1) throw ConfigError("'infer.grid_resolution' must be 0 or at least 2");
  if (inf.dram.burn_in && *inf.dram.burn_in >= inf.n_steps) {
    throw ConfigError("'infer.burn_in' must be smaller than 'infer.n_steps'");
  }

  const Json& b = r["bias"];
  cfg.bias.design = optional_vector(b["design"], "bias.design");
  auto& st = cfg.bias.study;
  if (!b["n_in_list"].is_array()) throw ConfigError("'bias.n_in_list' must be an array");
  for (std::size_t i = 0; i < b["n_in_list"].size(); ++i) {
    st.n_in_list.push_back(count(b["n_in_list"][i], "bias.n_in_list[" + std::to_string(i) + "]"));
  }
  st.reuse = b["reuse"].get<bool>();
  st.total_outer = count(b["total_outer"], "bias.total_outer");
  st.replications = count(b["replications"], "bias.replications");
  st.seed = cfg.seed;
  st.workers = cfg.workers;
  st.validate();

  const Json& crit = r["validate"]["criteria"];
  if (!crit.is_array()) throw ConfigError("'validate.criteria' must be an array");
  for (std::size_t i = 0; i < crit.size(); ++i) {
    const std::size_t c = count(crit[i], "validate.criteria[" + std::to_string(i) + "]");
    if (c < 1 || c > 12) throw ConfigError("acceptance criteria are numbered 1 to 12");
    cfg.criteria.push_back(static_cast<int>(c));
  }
  return cfg;
}

std::string provenance(const RunConfig& cfg, std::string_view command) {
  Json shown = cfg.resolved;
  shown.erase("workers");
  shown.erase("out");
  std::ostringstream text;
  text << "oed " << command << '\n' << "seed " << cfg.seed << '\n' << "config " << shown.dump();
  return text.str();
}

}  // namespace oed::cli
