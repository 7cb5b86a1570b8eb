#include "citlab/simbench.hpp"

#include "citlab/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>

namespace citlab {

void SimConfig::validate() const {
  if (n < 8) throw InvalidInput("sim config: n must be >= 8");
  if (p < 2) throw InvalidInput("sim config: p must be >= 2");
  if (s < 0 || s > p) throw InvalidInput("sim config: need 0 <= s <= p");
  if (!(std::abs(rho) < 1.0)) throw InvalidInput("sim config: |rho| must be < 1");
  if (!std::isfinite(theta)) throw InvalidInput("sim config: theta must be finite");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("sim config: alpha must lie in (0, 1)");
  if (replicates < 1) throw InvalidInput("sim config: replicates must be >= 1");
  if (methods.empty()) throw InvalidInput("sim config: no methods");
}

double get_parameter(const SimConfig& c, const std::string& name) {
  if (name == "n") return static_cast<double>(c.n);
  if (name == "p") return static_cast<double>(c.p);
  if (name == "s") return static_cast<double>(c.s);
  if (name == "rho") return c.rho;
  if (name == "theta") return c.theta;
  throw InvalidInput("unknown grid parameter '" + name + "'");
}

void set_parameter(SimConfig& c, const std::string& name, double value) {
  auto as_index = [&](double v) {
    if (v != std::floor(v)) throw InvalidInput("grid parameter '" + name + "' must be an integer");
    return static_cast<Index>(v);
  };
  if (name == "n") c.n = as_index(value);
  else if (name == "p") c.p = as_index(value);
  else if (name == "s") c.s = as_index(value);
  else if (name == "rho") c.rho = value;
  else if (name == "theta") c.theta = value;
  else throw InvalidInput("unknown grid parameter '" + name + "'");
}

std::vector<bool> draw_nonnull_set(Index p, Index s, std::uint64_t seed) {
  if (s < 0 || s > p) throw InvalidInput("nonnull set: need 0 <= s <= p");
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  Engine engine = make_stream(seed, StreamPurpose::nonnull_set);
  for (Index i = 0; i < s; ++i) {
    const auto k = i + static_cast<Index>(uniform_below(engine, static_cast<std::uint64_t>(p - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(k)]);
  }
  std::vector<bool> mask(static_cast<std::size_t>(p), false);
  for (Index i = 0; i < s; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = true;
  return mask;
}

GamInstance generate_gam_dgp(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  const Index n = config.n;
  const Index p = config.p;
  const MatrixXd sigma = ar1_covariance(p, config.rho);
  const MatrixXd l = sigma.llt().matrixL();
  NormalSource xs(make_stream(seed, StreamPurpose::dgp, 0));
  NormalSource ys(make_stream(seed, StreamPurpose::dgp, 1));
  MatrixXd z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < p; ++k) z(i, k) = xs();

  GamInstance inst;
  inst.truth = draw_nonnull_set(p, config.s, config.nonnull_seed.value_or(seed));
  const double theta = config.theta;
  std::vector<AdditiveFunctionModel::Term> terms;
  for (Index k = 0; k < p; ++k) {
    if (!inst.truth[static_cast<std::size_t>(k)]) continue;
    if ((k + 1) % 2 == 1)
      terms.push_back({k, [theta](double x) { return theta * (x - 0.3) * (x - 0.3) / std::sqrt(2.0); }});
    else
      terms.push_back({k, [theta](double x) { return -theta * std::cos(x); }});
  }
  inst.true_mean = std::make_shared<AdditiveFunctionModel>(p, 0.0, std::move(terms));
  MatrixXd x = z * l.transpose();
  VectorXd y = inst.true_mean->predict(x);
  for (Index i = 0; i < n; ++i) y(i) += ys();
  inst.data = Dataset(std::move(x), std::move(y));
  inst.true_law = GaussianModel::from_covariance(VectorXd::Zero(p), sigma);
  return inst;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate) {
  return derive_seed(base_seed, StreamPurpose::replicate, static_cast<std::uint64_t>(replicate));
}

std::vector<ReplicateResult> run_replicate(const SimConfig& sim, const TestConfig& test,
                                           const SimLearners& learners,
                                           const std::vector<Method>& methods, std::uint64_t rseed,
                                           int setting, int replicate) {
  if (methods.empty()) throw InvalidInput("run_replicate: no methods");
  const GamInstance inst = generate_gam_dgp(sim, rseed);
  TestConfig cfg = test;
  cfg.alpha = sim.alpha;
  cfg.seed = rseed;
  cfg.validate();
  GaussianConfig gaussian = learners.gaussian;
  gaussian.cv_seed = rseed;
  if (gaussian.estimator == GaussianEstimator::oracle) gaussian.oracle = inst.true_law;

  const bool both = std::count(methods.begin(), methods.end(), Method::tpcm) > 0 &&
                    std::count(methods.begin(), methods.end(), Method::hrt) > 0;
  std::optional<SplitFits> shared;
  auto split_fits = [&]() -> const SplitFits& {
    if (!shared)
      shared = fit_split(inst.data, split_data(inst.data, cfg.train_proportion_tpcm_hrt, rseed),
                         learners.learner, gaussian);
    return *shared;
  };

  std::vector<ReplicateResult> out;
  for (Method m : methods) {
    ReplicateResult rr;
    rr.setting = setting;
    rr.replicate = replicate;
    rr.method = m;
    rr.truth = inst.truth;
    try {
      TestRun run;
      switch (m) {
        case Method::tpcm:
          run = tpcm_from_fits(split_fits(), cfg);
          rr.shared_fit = both;
          break;
        case Method::hrt:
          run = hrt_from_fits(split_fits(), cfg);
          rr.shared_fit = both;
          break;
        case Method::vpcm:
          run = vpcm_test(inst.data, split_data(inst.data, cfg.train_proportion_pcm, rseed),
                          learners.learner, cfg);
          break;
        case Method::oracle_gcm:
          run = oracle_gcm_test(inst.data, *inst.true_mean, inst.true_law, cfg);
          break;
        case Method::tgcm:
          run = tgcm_test(inst.data, learners.learner, gaussian, cfg);
          break;
        case Method::gcm:
          throw InvalidInput("simbench: plain gcm needs caller-supplied nuisance sources");
      }
      rr.pvalues = run.pvalues();
      rr.rejections = bonferroni_select(rr.pvalues, sim.alpha);
      rr.wall_time = run.wall_time;
      rr.counters = run.counters;
    } catch (const std::exception& e) {
      rr.error = e.what();
      rr.pvalues.assign(static_cast<std::size_t>(sim.p), 1.0);
      rr.rejections.assign(static_cast<std::size_t>(sim.p), false);
    }
    out.push_back(std::move(rr));
  }
  return out;
}

ResultStore run_settings(const std::vector<SettingInfo>& settings, int reps, const TestConfig& test,
                         const SimLearners& learners, const GridOptions& options) {
  if (reps < 1) throw InvalidInput("simulation: reps must be >= 1");
  for (const auto& s : settings) s.config.validate();
  TestConfig single = test;
  single.threads = 1;
  const std::size_t total = settings.size() * static_cast<std::size_t>(reps);
  std::vector<std::vector<ReplicateResult>> slots(total);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(static_cast<Index>(total), options.workers, [&](Index job) {
    const auto k = static_cast<std::size_t>(job);
    const SettingInfo& s = settings[k / static_cast<std::size_t>(reps)];
    const int r = static_cast<int>(k % static_cast<std::size_t>(reps));
    slots[k] = run_replicate(s.config, single, learners, s.methods, replicate_seed(s.config.seed, r),
                             s.id, r);
    const std::size_t finished = ++done;
    if (options.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      options.progress(finished, total);
    }
  });
  ResultStore store;
  store.settings = settings;
  for (auto& slot : slots)
    for (auto& r : slot) store.results.push_back(std::move(r));
  return store;
}

std::vector<SettingInfo> grid_settings(const SimConfig& base, const std::string& vary,
                                       const std::vector<double>& values, bool hrt_everywhere,
                                       int first_id) {
  base.validate();
  if (values.empty()) throw InvalidInput("grid: no values");
  const double default_value = get_parameter(base, vary);
  std::vector<SettingInfo> settings;
  for (double v : values) {
    SettingInfo s;
    s.id = first_id + static_cast<int>(settings.size());
    s.vary = vary;
    s.value = v;
    s.config = base;
    set_parameter(s.config, vary, v);
    s.config.validate();
    s.methods = base.methods;
    if (!hrt_everywhere && v != default_value)
      s.methods.erase(std::remove(s.methods.begin(), s.methods.end(), Method::hrt), s.methods.end());
    if (s.methods.empty()) continue;
    settings.push_back(std::move(s));
  }
  return settings;
}

ResultStore run_grid(const SimConfig& base, const std::string& vary, const std::vector<double>& values,
                     int reps, const TestConfig& test, const SimLearners& learners,
                     const GridOptions& options) {
  return run_settings(grid_settings(base, vary, values, options.hrt_everywhere), reps, test, learners,
                      options);
}

std::vector<SummaryRow> compute_metrics(const ResultStore& store) {
  if (store.results.empty()) throw InvalidInput("metrics: no results");
  std::vector<SummaryRow> rows;
  for (const auto& s : store.settings) {
    const bool global_null = s.config.theta == 0.0;
    for (Method m : s.methods) {
      std::vector<double> fwer;
      std::vector<double> power;
      std::vector<double> time;
      for (const auto& r : store.results) {
        if (r.setting != s.id || r.method != m || !r.error.empty()) continue;
        bool false_rejection = false;
        Index true_rejections = 0;
        for (std::size_t j = 0; j < r.rejections.size(); ++j) {
          const bool nonnull = !global_null && r.truth[j];
          if (r.rejections[j] && !nonnull) false_rejection = true;
          if (r.rejections[j] && nonnull) ++true_rejections;
        }
        fwer.push_back(false_rejection ? 1.0 : 0.0);
        if (!global_null && s.config.s > 0)
          power.push_back(static_cast<double>(true_rejections) / static_cast<double>(s.config.s));
        time.push_back(r.wall_time);
      }
      auto row = [&](const std::string& metric) {
        SummaryRow out;
        out.setting = s.id;
        out.vary = s.vary;
        out.value = s.value;
        out.method = to_string(m);
        out.metric = metric;
        return out;
      };
      const auto reps = static_cast<double>(fwer.size());
      SummaryRow f = row("fwer");
      SummaryRow pw = row("power");
      SummaryRow t = row("time");
      if (!fwer.empty()) {
        f.estimate = mean_of(fwer);
        f.mc_se = binomial_se(*f.estimate, static_cast<int>(fwer.size()));
        t.estimate = mean_of(time);
        t.mc_se = sd_of(time) / std::sqrt(reps);
      }
      if (!power.empty()) {
        pw.estimate = mean_of(power);
        pw.mc_se = sd_of(power) / std::sqrt(static_cast<double>(power.size()));
      }
      rows.push_back(f);
      rows.push_back(pw);
      rows.push_back(t);
    }
  }
  return rows;
}

int hrt_sweep_resamples(Index p, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("hrt resamples: alpha must lie in (0, 1)");
  return static_cast<int>(std::ceil(5.0 * static_cast<double>(p) / alpha - 1e-9));
}

std::vector<TimingRow> timing_sweep(Index n, const std::vector<Index>& p_values,
                                    const std::vector<Method>& methods, const TestConfig& test,
                                    const SimLearners& learners, const SimConfig& base) {
  std::vector<TimingRow> rows;
  for (Index p : p_values) {
    SimConfig cfg = base;
    cfg.n = n;
    cfg.p = p;
    cfg.s = std::min(base.s, p);
    const std::uint64_t seed = derive_seed(base.seed, StreamPurpose::misc, static_cast<std::uint64_t>(p));
    for (Method m : methods) {
      TestConfig t = test;
      t.threads = 1;
      if (m == Method::hrt) t.b_hrt = hrt_sweep_resamples(p, cfg.alpha);
      const auto res = run_replicate(cfg, t, learners, {m}, seed);
      if (!res.front().error.empty()) throw NumericalError("timing sweep: " + res.front().error);
      TimingRow row;
      row.p = p;
      row.method = m;
      row.seconds = res.front().wall_time;
      row.counters = res.front().counters;
      row.resamples = m == Method::hrt ? t.b_hrt : (m == Method::tpcm ? t.b_tpcm : 0);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace citlab
