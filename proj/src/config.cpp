#include "citlab/config.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace citlab {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

std::string to_string(SplineSelection s) { return s == SplineSelection::gcv ? "gcv" : "fixed"; }

SplineSelection selection_from_string(const std::string& s) {
  if (s == "gcv") return SplineSelection::gcv;
  if (s == "fixed") return SplineSelection::fixed;
  throw ConfigError("unknown spline selection '" + s + "'");
}

template <typename F>
auto as_config_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

static RunConfig parse_run_config(const Json& j);
static SimulationPlan parse_simulation_plan(const Json& j);

std::string to_string(Sided s) { return s == Sided::two ? "two" : "upper"; }

Sided sided_from_string(const std::string& name) {
  if (name == "two") return Sided::two;
  if (name == "upper") return Sided::upper;
  throw ConfigError("unknown sidedness '" + name + "'");
}

LearnerConfig learner_from_json(const Json& j) {
  const std::string w = "learner";
  check_keys(j, {"kind", "ridge_lambda", "fit_intercept", "spline_basis_size", "spline_lambda_grid",
                 "spline_selection", "spline_fixed_lambda", "spline_shrinkage"},
             w);
  LearnerConfig c;
  std::string kind = to_string(c.kind);
  std::string selection = to_string(c.spline_selection);
  read(j, "kind", kind, w);
  read(j, "ridge_lambda", c.ridge_lambda, w);
  read(j, "fit_intercept", c.fit_intercept, w);
  read(j, "spline_basis_size", c.spline_basis_size, w);
  read(j, "spline_lambda_grid", c.spline_lambda_grid, w);
  read(j, "spline_selection", selection, w);
  read(j, "spline_fixed_lambda", c.spline_fixed_lambda, w);
  read(j, "spline_shrinkage", c.spline_shrinkage, w);
  c.kind = learner_kind_from_string(kind);
  if (c.kind == LearnerKind::oracle) throw ConfigError("learner: 'oracle' cannot be set from a file");
  c.spline_selection = selection_from_string(selection);
  return c;
}

Json to_json(const LearnerConfig& c) {
  return Json{{"kind", to_string(c.kind)},
              {"ridge_lambda", c.ridge_lambda},
              {"fit_intercept", c.fit_intercept},
              {"spline_basis_size", c.spline_basis_size},
              {"spline_lambda_grid", c.spline_lambda_grid},
              {"spline_selection", to_string(c.spline_selection)},
              {"spline_fixed_lambda", c.spline_fixed_lambda},
              {"spline_shrinkage", c.spline_shrinkage}};
}

GaussianConfig gaussian_from_json(const Json& j) {
  const std::string w = "gaussian";
  check_keys(j, {"estimator", "bandwidth", "glasso_grid_size", "glasso_min_ratio", "cv_folds"}, w);
  GaussianConfig c;
  std::string est = to_string(c.estimator);
  read(j, "estimator", est, w);
  read(j, "bandwidth", c.bandwidth, w);
  read(j, "glasso_grid_size", c.glasso_grid_size, w);
  read(j, "glasso_min_ratio", c.glasso_min_ratio, w);
  read(j, "cv_folds", c.cv_folds, w);
  c.estimator = gaussian_estimator_from_string(est);
  return c;
}

Json to_json(const GaussianConfig& c) {
  return Json{{"estimator", to_string(c.estimator)},
              {"bandwidth", c.bandwidth},
              {"glasso_grid_size", c.glasso_grid_size},
              {"glasso_min_ratio", c.glasso_min_ratio},
              {"cv_folds", c.cv_folds}};
}

TestConfig test_config_from_json(const Json& j) {
  const std::string w = "test";
  check_keys(j, {"alpha", "b_tpcm", "b_hrt", "train_proportion_tpcm_hrt", "train_proportion_pcm",
                 "gcm_sided", "cross_fit_folds", "b_gcm", "banded_hint", "threads"},
             w);
  TestConfig c;
  std::string sided = to_string(c.gcm_sided);
  read(j, "alpha", c.alpha, w);
  read(j, "b_tpcm", c.b_tpcm, w);
  read(j, "b_hrt", c.b_hrt, w);
  read(j, "train_proportion_tpcm_hrt", c.train_proportion_tpcm_hrt, w);
  read(j, "train_proportion_pcm", c.train_proportion_pcm, w);
  read(j, "gcm_sided", sided, w);
  read(j, "cross_fit_folds", c.cross_fit_folds, w);
  read(j, "b_gcm", c.b_gcm, w);
  read(j, "threads", c.threads, w);
  if (j.contains("banded_hint") && !j.at("banded_hint").is_null()) {
    int bw = 0;
    read(j, "banded_hint", bw, w);
    c.banded_hint = bw;
  }
  c.gcm_sided = sided_from_string(sided);
  return c;
}

Json to_json(const TestConfig& c) {
  Json j{{"alpha", c.alpha},
         {"b_tpcm", c.b_tpcm},
         {"b_hrt", c.b_hrt},
         {"train_proportion_tpcm_hrt", c.train_proportion_tpcm_hrt},
         {"train_proportion_pcm", c.train_proportion_pcm},
         {"gcm_sided", to_string(c.gcm_sided)},
         {"cross_fit_folds", c.cross_fit_folds},
         {"b_gcm", c.b_gcm},
         {"threads", c.threads}};
  j["banded_hint"] = c.banded_hint ? Json(*c.banded_hint) : Json(nullptr);
  return j;
}

void RunConfig::validate() const {
  learner.validate();
  gaussian.validate();
  test.validate();
}

RunConfig run_config_from_json(const Json& j) {
  return as_config_error([&] { return parse_run_config(j); });
}

static RunConfig parse_run_config(const Json& j) {
  check_keys(j, {"seed", "learner", "gaussian", "test", "structure_hint", "io"}, "run config");
  RunConfig c;
  read(j, "seed", c.seed, "run config");
  if (j.contains("learner")) c.learner = learner_from_json(j.at("learner"));
  if (j.contains("gaussian")) c.gaussian = gaussian_from_json(j.at("gaussian"));
  if (j.contains("test")) c.test = test_config_from_json(j.at("test"));
  if (j.contains("structure_hint") && !j.at("structure_hint").is_null()) {
    check_keys(j.at("structure_hint"), {"banded"}, "structure_hint");
    int bw = 0;
    read(j.at("structure_hint"), "banded", bw, "structure_hint");
    c.test.banded_hint = bw;
  }
  if (j.contains("io")) {
    check_keys(j.at("io"), {"data", "out"}, "io");
    read(j.at("io"), "data", c.io.data, "io");
    read(j.at("io"), "out", c.io.out, "io");
  }
  c.test.seed = c.seed;
  c.gaussian.cv_seed = c.seed;
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

Json to_json(const RunConfig& c) {
  return Json{{"seed", c.seed},
              {"learner", to_json(c.learner)},
              {"gaussian", to_json(c.gaussian)},
              {"test", to_json(c.test)},
              {"io", Json{{"data", c.io.data}, {"out", c.io.out}}}};
}

RunConfig load_run_config(const std::string& path) { return run_config_from_json(read_json(path)); }

// ---------------------------------------------------------------------------

SimConfig sim_config_from_json(const Json& j) {
  const std::string w = "base";
  check_keys(j, {"n", "p", "s", "rho", "theta", "alpha", "replicates", "methods", "seed", "nonnull_seed"}, w);
  SimConfig c;
  read(j, "n", c.n, w);
  read(j, "p", c.p, w);
  read(j, "s", c.s, w);
  read(j, "rho", c.rho, w);
  read(j, "theta", c.theta, w);
  read(j, "alpha", c.alpha, w);
  read(j, "replicates", c.replicates, w);
  read(j, "seed", c.seed, w);
  if (j.contains("methods")) {
    std::vector<std::string> names;
    read(j, "methods", names, w);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(method_from_string(n));
  }
  if (j.contains("nonnull_seed") && !j.at("nonnull_seed").is_null()) {
    std::uint64_t s = 0;
    read(j, "nonnull_seed", s, w);
    c.nonnull_seed = s;
  }
  return c;
}

Json to_json(const SimConfig& c) {
  std::vector<std::string> names;
  for (Method m : c.methods) names.push_back(to_string(m));
  Json j{{"n", c.n},         {"p", c.p},         {"s", c.s},
         {"rho", c.rho},     {"theta", c.theta}, {"alpha", c.alpha},
         {"replicates", c.replicates}, {"methods", names}, {"seed", c.seed}};
  j["nonnull_seed"] = c.nonnull_seed ? Json(*c.nonnull_seed) : Json(nullptr);
  return j;
}

void SimulationPlan::validate() const {
  base.validate();
  if (reps < 1) throw ConfigError("simulation: reps must be >= 1");
  if (workers < 1) throw ConfigError("simulation: workers must be >= 1");
  for (const auto& g : grids) {
    get_parameter(base, g.vary);
    if (g.values.empty()) throw ConfigError("simulation: grid '" + g.vary + "' has no values");
    for (double v : g.values) {
      SimConfig c = base;
      set_parameter(c, g.vary, v);
      c.validate();
    }
  }
  learners.learner.validate();
  learners.gaussian.validate();
  test.validate();
}

SimulationPlan default_grid_plan() {
  SimulationPlan plan;
  plan.grids = {{"n", {800, 1000, 1200, 1400, 1600}},
                {"p", {30, 40, 50, 60, 70}},
                {"s", {4, 8, 12, 16, 20}},
                {"rho", {0.2, 0.35, 0.5, 0.65, 0.8}},
                {"theta", {0.15, 0.2, 0.25, 0.3, 0.35}}};
  plan.learners.gaussian.estimator = GaussianEstimator::banded;
  plan.learners.gaussian.bandwidth = 1;
  plan.test.banded_hint = 1;
  return plan;
}

SimulationPlan simulation_plan_from_json(const Json& j) {
  return as_config_error([&] { return parse_simulation_plan(j); });
}

static SimulationPlan parse_simulation_plan(const Json& j) {
  const std::string w = "simulation";
  check_keys(j, {"seed", "base", "grids", "reps", "hrt_everywhere", "workers", "learner", "gaussian", "test"}, w);
  SimulationPlan plan;
  plan.grids.clear();
  if (j.contains("base")) plan.base = sim_config_from_json(j.at("base"));
  read(j, "seed", plan.base.seed, w);
  read(j, "reps", plan.reps, w);
  read(j, "hrt_everywhere", plan.hrt_everywhere, w);
  read(j, "workers", plan.workers, w);
  if (j.contains("grids")) {
    if (!j.at("grids").is_array()) throw ConfigError("simulation: 'grids' must be an array");
    for (const auto& g : j.at("grids")) {
      check_keys(g, {"vary", "values"}, "grid");
      GridSpec spec;
      read(g, "vary", spec.vary, "grid");
      read(g, "values", spec.values, "grid");
      plan.grids.push_back(spec);
    }
  }
  if (j.contains("learner")) plan.learners.learner = learner_from_json(j.at("learner"));
  if (j.contains("gaussian")) plan.learners.gaussian = gaussian_from_json(j.at("gaussian"));
  if (j.contains("test")) plan.test = test_config_from_json(j.at("test"));
  plan.base.replicates = plan.reps;
  try {
    plan.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return plan;
}

Json to_json(const SimulationPlan& plan) {
  Json grids = Json::array();
  for (const auto& g : plan.grids) grids.push_back(Json{{"vary", g.vary}, {"values", g.values}});
  Json base = to_json(plan.base);
  base.erase("seed");
  return Json{{"seed", plan.base.seed},
              {"base", base},
              {"grids", grids},
              {"reps", plan.reps},
              {"hrt_everywhere", plan.hrt_everywhere},
              {"workers", plan.workers},
              {"learner", to_json(plan.learners.learner)},
              {"gaussian", to_json(plan.learners.gaussian)},
              {"test", to_json(plan.test)}};
}

SimulationPlan load_simulation_plan(const std::string& path) {
  return simulation_plan_from_json(read_json(path));
}

// ---------------------------------------------------------------------------

std::string config_hash(const Json& j) {
  const std::string text = j.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("config hash: digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i)
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

Json make_manifest(const std::string& command, const Json& config, std::uint64_t seed) {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  std::ostringstream boost;
  boost << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000 << '.' << BOOST_VERSION % 100;
  return Json{{"command", command},
              {"config", config},
              {"config_hash", config_hash(config)},
              {"seed", seed},
              {"versions",
               Json{{"citlab", kVersion}, {"compiler", __VERSION__}, {"eigen", eigen.str()},
                    {"boost", boost.str()}}}};
}

void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw InvalidInput("failed writing '" + path + "'");
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

int workers_from_env(int fallback) {
  const char* v = std::getenv("CITLAB_WORKERS");
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("CITLAB_WORKERS must be a positive integer");
  return static_cast<int>(n);
}

}  // namespace citlab
