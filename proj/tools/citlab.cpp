#include "citlab/config.hpp"
#include "citlab/dataset_io.hpp"
#include "citlab/equivalence.hpp"
#include "citlab/report.hpp"
#include "citlab/simbench.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace citlab;

namespace {

enum ExitCode { ok = 0, failure = 1, config_error = 2, data_error = 3, no_results = 4 };

class NoResults : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<Method> parse_methods(const std::string& spec) {
  if (spec == "all") return {Method::tpcm, Method::hrt, Method::vpcm, Method::tgcm};
  std::vector<Method> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(method_from_string(item));
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("no methods given");
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& spec, const char* what) {
  std::vector<T> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

std::string counters_line(const CounterSnapshot& c) {
  std::ostringstream s;
  s << "ML(Y|X)=" << c.ml_y_given_x << " ML(X)=" << c.ml_x << " ML(Xj|X-j)=" << c.ml_xj_given_rest
    << " P(Xj|X-j)=" << c.predict_xj_given_rest << " P(Y|X)=" << c.predict_y_given_x;
  return s.str();
}

Json args_json(int argc, char** argv) {
  Json a = Json::array();
  for (int i = 0; i < argc; ++i) a.push_back(argv[i]);
  return a;
}

// ---------------------------------------------------------------------------

struct TestArgs {
  std::string data, config, out, method = "tpcm", response = "y", learner, gaussian, manifest;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<int> b_tpcm, b_hrt, banded, threads;
  bool dry_run = false;
};

int cmd_test(const TestArgs& a, const Json& argv) {
  Json j = a.config.empty() ? Json::object() : read_json(a.config);
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  auto section = [&](const char* name) -> Json& {
    if (!j.contains(name) || j[name].is_null()) j[name] = Json::object();
    return j[name];
  };
  if (a.alpha) section("test")["alpha"] = *a.alpha;
  if (a.seed) j["seed"] = *a.seed;
  if (a.b_tpcm) section("test")["b_tpcm"] = *a.b_tpcm;
  if (a.b_hrt) section("test")["b_hrt"] = *a.b_hrt;
  if (a.banded) section("test")["banded_hint"] = *a.banded;
  if (a.threads) section("test")["threads"] = *a.threads;
  if (!a.learner.empty()) section("learner")["kind"] = a.learner;
  if (!a.gaussian.empty()) section("gaussian")["estimator"] = a.gaussian;
  if (!a.data.empty()) section("io")["data"] = a.data;
  if (!a.out.empty()) section("io")["out"] = a.out;
  RunConfig cfg = run_config_from_json(j);
  cfg.test.threads = workers_from_env(cfg.test.threads);
  if (cfg.io.data.empty()) throw ConfigError("no data file (use --data or io.data)");
  if (cfg.io.out.empty()) cfg.io.out = "results.csv";

  const std::vector<Method> methods = parse_methods(a.method);
  for (Method m : methods)
    if (m == Method::gcm || m == Method::oracle_gcm)
      throw ConfigError("method '" + to_string(m) + "' needs the true nuisances and is simulation-only");

  const Dataset data = read_dataset_csv(cfg.io.data, a.response);
  std::cout << "data: " << cfg.io.data << " (n=" << data.rows() << ", p=" << data.cols() << ")\n";

  if (a.dry_run) {
    for (Method m : methods)
      std::cout << "plan " << to_string(m) << ": " << counters_line(predicted_counters(m, data.cols(), cfg.test))
                << '\n';
    return ok;
  }

  const bool tpcm = std::count(methods.begin(), methods.end(), Method::tpcm) > 0;
  const bool hrt = std::count(methods.begin(), methods.end(), Method::hrt) > 0;
  std::optional<SplitFits> fits;
  if (tpcm || hrt)
    fits = fit_split(data, split_data(data, cfg.test.train_proportion_tpcm_hrt, cfg.seed), cfg.learner,
                     cfg.gaussian);

  std::vector<TestRun> runs;
  for (Method m : methods) {
    switch (m) {
      case Method::tpcm: runs.push_back(tpcm_from_fits(*fits, cfg.test)); break;
      case Method::hrt: runs.push_back(hrt_from_fits(*fits, cfg.test)); break;
      case Method::vpcm:
        runs.push_back(vpcm_test(data, split_data(data, cfg.test.train_proportion_pcm, cfg.seed), cfg.learner,
                                 cfg.test));
        break;
      case Method::tgcm: runs.push_back(tgcm_test(data, cfg.learner, cfg.gaussian, cfg.test)); break;
      default: break;
    }
  }

  const auto names = data.column_names.empty() ? default_column_names(data.cols()) : data.column_names;
  for (const TestRun& run : runs) {
    const auto selected = bonferroni_select(run.pvalues(), cfg.test.alpha);
    std::cout << "[" << to_string(run.method) << "] " << std::fixed << std::setprecision(3) << run.wall_time
              << " s" << std::defaultfloat << (tpcm && hrt && (run.method == Method::tpcm || run.method == Method::hrt)
                                                   ? " (shared fits)"
                                                   : "")
              << "\n  counters: " << counters_line(run.counters) << "\n  selected at alpha=" << cfg.test.alpha
              << " (Bonferroni):";
    bool any = false;
    for (std::size_t k = 0; k < selected.size(); ++k)
      if (selected[k]) {
        std::cout << ' ' << names[k];
        any = true;
      }
    std::cout << (any ? "" : " none") << '\n';
  }
  write_results_csv(runs, names, cfg.test.alpha, cfg.io.out);
  const std::string manifest = a.manifest.empty() ? cfg.io.out + ".manifest.json" : a.manifest;
  Json m = make_manifest("test", to_json(cfg), cfg.seed);
  m["argv"] = argv;
  m["methods"] = a.method;
  write_json(m, manifest);
  std::cout << "wrote " << cfg.io.out << " and " << manifest << '\n';
  return ok;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string grid, out, methods, timing_p;
  std::optional<int> reps, workers;
  std::optional<std::uint64_t> seed;
  Index timing_n = 2500;
  bool dry_run = false, hrt_everywhere = false, quiet = false;
};

std::vector<SettingInfo> plan_settings(const SimulationPlan& plan) {
  std::vector<SettingInfo> all;
  if (plan.grids.empty()) {
    SettingInfo s;
    s.vary = "none";
    s.config = plan.base;
    s.methods = plan.base.methods;
    all.push_back(s);
    return all;
  }
  for (const auto& g : plan.grids) {
    auto part = grid_settings(plan.base, g.vary, g.values, plan.hrt_everywhere, static_cast<int>(all.size()));
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

int cmd_simulate(const SimulateArgs& a, const Json& argv) {
  SimulationPlan plan = a.grid.empty() ? default_grid_plan() : load_simulation_plan(a.grid);
  if (a.reps) plan.reps = *a.reps;
  if (a.workers) plan.workers = *a.workers;
  if (a.seed) plan.base.seed = *a.seed;
  if (a.hrt_everywhere) plan.hrt_everywhere = true;
  if (!a.methods.empty()) plan.base.methods = parse_methods(a.methods);
  plan.workers = workers_from_env(plan.workers);
  try {
    plan.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }

  if (!a.timing_p.empty()) {
    const auto ps = parse_list<Index>(a.timing_p, "--timing-p");
    if (a.dry_run) {
      for (Index p : ps)
        std::cout << "timing n=" << a.timing_n << " p=" << p << " methods=" << plan.base.methods.size()
                  << " hrt resamples=" << hrt_sweep_resamples(p, plan.base.alpha) << '\n';
      return ok;
    }
    if (a.out.empty()) throw ConfigError("--out is required");
    fs::create_directories(a.out);
    const auto rows = timing_sweep(a.timing_n, ps, plan.base.methods, plan.test, plan.learners, plan.base);
    write_timing_csv(rows, (fs::path(a.out) / "timing.csv").string());
    Json cfg = to_json(plan);
    cfg["timing"] = Json{{"n", a.timing_n}, {"p", ps}};
    Json m = make_manifest("simulate", cfg, plan.base.seed);
    m["argv"] = argv;
    write_json(m, (fs::path(a.out) / "manifest.json").string());
    for (const auto& r : rows)
      std::cout << "p=" << r.p << ' ' << to_string(r.method) << ' ' << r.seconds << " s\n";
    return ok;
  }

  const auto settings = plan_settings(plan);
  if (a.dry_run) {
    std::size_t runs = 0;
    CounterSnapshot total;
    for (const auto& s : settings) {
      std::cout << "setting " << s.id << ": " << s.vary << '=' << s.value << " (n=" << s.config.n
                << ", p=" << s.config.p << ", s=" << s.config.s << ", rho=" << s.config.rho
                << ", theta=" << s.config.theta << ") x " << plan.reps << " reps\n";
      for (Method m : s.methods) {
        const CounterSnapshot c = predicted_counters(m, s.config.p, plan.test);
        std::cout << "  " << to_string(m) << " per replicate: " << counters_line(c) << '\n';
        for (int r = 0; r < plan.reps; ++r) total = total + c;
        runs += static_cast<std::size_t>(plan.reps);
      }
    }
    std::cout << settings.size() << " settings, " << plan.reps << " reps, " << runs
              << " method runs\ntotal: " << counters_line(total) << '\n';
    return ok;
  }
  if (a.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(a.out);

  GridOptions opt;
  opt.workers = plan.workers;
  opt.hrt_everywhere = plan.hrt_everywhere;
  const auto start = std::chrono::steady_clock::now();
  if (!a.quiet)
    opt.progress = [start](std::size_t done, std::size_t total) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::fprintf(stderr, "\r%zu/%zu replicates, %.0f s", done, total, secs);
      if (done == total) std::fputc('\n', stderr);
    };
  const ResultStore store = run_settings(settings, plan.reps, plan.test, plan.learners, opt);
  const auto rows = compute_metrics(store);
  const fs::path dir(a.out);
  write_summary_csv(rows, (dir / "summary.csv").string());
  write_json(to_json(rows), (dir / "summary.json").string());
  write_replicates_csv(store, (dir / "replicates.csv").string());
  Json m = make_manifest("simulate", to_json(plan), plan.base.seed);
  m["argv"] = argv;
  write_json(m, (dir / "manifest.json").string());
  std::size_t errors = 0;
  for (const auto& r : store.results) errors += !r.error.empty();
  std::cout << "wrote " << rows.size() << " summary rows to " << a.out << '\n';
  if (errors) std::cout << errors << " method runs failed (see replicates.csv)\n";
  return ok;
}

// ---------------------------------------------------------------------------

struct EquivalenceArgs {
  std::string suite = "linear", n = "500,2000", out;
  int reps = 500;
  std::optional<int> workers;
  std::uint64_t seed = 0;
  int b_tpcm = 25, b_hrt = 5000, b_diagnostics = 200;
  double beta = 0.0, alpha = 0.05;
  bool no_hrt = false, diagnostics = false;
};

int cmd_equivalence(const EquivalenceArgs& a, const Json& argv) {
  if (a.suite != "linear") throw ConfigError("unknown suite '" + a.suite + "' (expected linear)");
  LinearSuiteConfig cfg;
  cfg.n_grid = parse_list<Index>(a.n, "--n");
  cfg.reps = a.reps;
  cfg.seed = a.seed;
  cfg.b_tpcm = a.b_tpcm;
  cfg.b_hrt = a.b_hrt;
  cfg.b_diagnostics = a.b_diagnostics;
  cfg.beta = a.beta;
  cfg.alpha = a.alpha;
  cfg.with_hrt = !a.no_hrt;
  cfg.with_diagnostics = a.diagnostics;
  cfg.workers = workers_from_env(a.workers.value_or(1));
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  const auto reports = linear_model_suite(cfg);
  Json out = Json{{"suite", a.suite}, {"reports", Json::array()}};
  for (const auto& r : reports) {
    out["reports"].push_back(to_json(r));
    std::cout << "n=" << r.n << ": level " << r.level << " (se " << r.level_se << "), KS p " << r.ks_pvalue
              << ", agreement " << r.decision_agreement_rate << ", identity error " << r.identity_max_abs_error
              << '\n';
  }
  const std::string path = a.out.empty() ? "eq.json" : a.out;
  write_json(out, path);
  Json config = Json{{"suite", a.suite}, {"n", cfg.n_grid}, {"reps", cfg.reps}, {"beta", cfg.beta},
                     {"alpha", cfg.alpha}, {"b_tpcm", cfg.b_tpcm}, {"b_hrt", cfg.b_hrt},
                     {"with_hrt", cfg.with_hrt}, {"with_diagnostics", cfg.with_diagnostics},
                     {"b_diagnostics", cfg.b_diagnostics}, {"seed", cfg.seed}};
  Json m = make_manifest("equivalence", config, cfg.seed);
  m["argv"] = argv;
  write_json(m, path + ".manifest.json");
  std::cout << "wrote " << path << '\n';
  return ok;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string in, plot_dir;
  bool plots = false;
};

int cmd_report(const ReportArgs& a, const Json& argv) {
  const fs::path dir(a.in);
  const fs::path summary = dir / "summary.csv";
  if (!fs::is_directory(dir) || !fs::exists(summary))
    throw NoResults("no results in '" + a.in + "' (expected summary.csv from citlab simulate)");
  const auto rows = read_summary_csv(summary.string());
  if (rows.empty()) throw NoResults("no results in '" + summary.string() + "'");

  std::cout << std::left << std::setw(8) << "setting" << std::setw(8) << "vary" << std::setw(10) << "value"
            << std::setw(12) << "method" << std::setw(8) << "metric" << std::setw(14) << "estimate"
            << "mc_se\n";
  for (const auto& r : rows) {
    std::cout << std::setw(8) << r.setting << std::setw(8) << r.vary << std::setw(10) << r.value << std::setw(12)
              << r.method << std::setw(8) << r.metric << std::setw(14)
              << (r.estimate ? format_double(*r.estimate) : std::string("-"))
              << (r.mc_se ? format_double(*r.mc_se) : std::string("-")) << '\n';
  }
  Json config = Json{{"in", a.in}, {"plots", a.plots}};
  if (a.plots) {
    const std::string out = a.plot_dir.empty() ? (dir / "plots").string() : a.plot_dir;
    fs::create_directories(out);
    const auto paths = write_plots(rows, out);
    for (const auto& p : paths) std::cout << "wrote " << p << '\n';
    config["plot_dir"] = out;
  }
  Json m = make_manifest("report", config, 0);
  m["argv"] = argv;
  write_json(m, (dir / "report.manifest.json").string());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citlab: conditional independence tests with tower-based PCM"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Run CI tests on a CSV dataset");
  test->add_option("--data", ta.data, "CSV with a header row and a response column");
  test->add_option("--method", ta.method, "tpcm | vpcm | hrt | tgcm | all, or a comma list")->capture_default_str();
  test->add_option("--config", ta.config, "Run config JSON");
  test->add_option("--out", ta.out, "Results CSV (default results.csv)");
  test->add_option("--alpha", ta.alpha, "FWER level for Bonferroni selection (default 0.05)");
  test->add_option("--seed", ta.seed, "Seed (default 0)");
  test->add_option("--response", ta.response, "Name of the response column")->capture_default_str();
  test->add_option("--b-tpcm", ta.b_tpcm, "tPCM resamples (default 25)");
  test->add_option("--b-hrt", ta.b_hrt, "HRT resamples (default 5000)");
  test->add_option("--banded", ta.banded, "Banded precision hint for vPCM");
  test->add_option("--learner", ta.learner, "ols | ridge | additive_spline");
  test->add_option("--gaussian", ta.gaussian, "sample | banded | glasso");
  test->add_option("--threads", ta.threads, "Threads for per-variable loops (CITLAB_WORKERS overrides)");
  test->add_option("--manifest", ta.manifest, "Manifest path (default <out>.manifest.json)");
  test->add_flag("--dry-run", ta.dry_run, "Print the plan and predicted counters, then exit");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo grid over the additive-model setting");
  sim->add_option("--grid", sa.grid, "Simulation plan JSON (default: the built-in one-at-a-time grids)");
  sim->add_option("--reps", sa.reps, "Replicates per setting (default 400)");
  sim->add_option("--workers", sa.workers, "Worker threads (CITLAB_WORKERS overrides)");
  sim->add_option("--seed", sa.seed, "Base seed");
  sim->add_option("--methods", sa.methods, "Comma list overriding the plan's methods");
  sim->add_option("--out", sa.out, "Output directory");
  sim->add_flag("--hrt-everywhere", sa.hrt_everywhere, "Run HRT at every grid value");
  sim->add_option("--timing-p", sa.timing_p, "Timing sweep instead of the grid: comma list of p");
  sim->add_option("--timing-n", sa.timing_n, "Sample size of the timing sweep")->capture_default_str();
  sim->add_flag("--dry-run", sa.dry_run, "Print settings x reps x methods and predicted counters");
  sim->add_flag("--quiet", sa.quiet, "No progress output");

  EquivalenceArgs ea;
  auto* eq = app.add_subcommand("equivalence", "tPCM/HRT equivalence suite");
  eq->add_option("--suite", ea.suite, "Suite name")->capture_default_str();
  eq->add_option("--n", ea.n, "Comma list of sample sizes")->capture_default_str();
  eq->add_option("--reps", ea.reps, "Replicates per n")->capture_default_str();
  eq->add_option("--out", ea.out, "Report JSON (default eq.json)");
  eq->add_option("--seed", ea.seed, "Seed")->capture_default_str();
  eq->add_option("--workers", ea.workers, "Worker threads (CITLAB_WORKERS overrides)");
  eq->add_option("--b-tpcm", ea.b_tpcm, "tPCM resamples")->capture_default_str();
  eq->add_option("--b-hrt", ea.b_hrt, "HRT resamples")->capture_default_str();
  eq->add_option("--beta", ea.beta, "Effect of X0 on Y")->capture_default_str();
  eq->add_option("--alpha", ea.alpha, "Test level")->capture_default_str();
  eq->add_flag("--no-hrt", ea.no_hrt, "Skip HRT and the agreement fields");
  eq->add_flag("--diagnostics", ea.diagnostics, "Compute assumption diagnostics");
  eq->add_option("--b-diagnostics", ea.b_diagnostics, "Draws per row for diagnostics")->capture_default_str();

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Summarise a simulate output directory");
  rep->add_option("--in", ra.in, "Directory written by citlab simulate")->required();
  rep->add_flag("--plots", ra.plots, "Write SVG plots");
  rep->add_option("--plot-dir", ra.plot_dir, "Plot directory (default <in>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : config_error;
  }

  const Json av = args_json(argc, argv);
  try {
    if (*test) return cmd_test(ta, av);
    if (*sim) return cmd_simulate(sa, av);
    if (*eq) return cmd_equivalence(ea, av);
    if (*rep) return cmd_report(ra, av);
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid configuration: " << e.what() << '\n';
    return config_error;
  } catch (const CsvFormatError& e) {
    std::cerr << "error: malformed CSV: " << e.what() << '\n';
    return data_error;
  } catch (const CsvValueError& e) {
    std::cerr << "error: non-numeric CSV value: " << e.what() << '\n';
    return data_error;
  } catch (const NonFiniteColumnError& e) {
    std::cerr << "error: non-finite data: " << e.what() << '\n';
    return data_error;
  } catch (const NoResults& e) {
    std::cerr << "error: " << e.what() << '\n';
    return no_results;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}
