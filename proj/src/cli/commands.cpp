#include "repden/cli/commands.hpp"

#include "repden/cli/csv.hpp"
#include "repden/cli/model_io.hpp"
#include "repden/error.hpp"
#include "repden/kernels.hpp"
#include "repden/metrics.hpp"
#include "repden/parallel.hpp"
#include "repden/simulation.hpp"
#include "repden/tailscale.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace repden::cli {

using nlohmann::json;

namespace {

void ensure_dir(const std::filesystem::path& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
}

void write_json(const std::filesystem::path& path, const json& j)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::filesystem::path& path, const std::string& header)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << header << '\n';
  return out;
}

// JSON has no NaN or infinity.
json num(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

json stats_json(const std::vector<double>& values)
{
  std::vector<std::pair<std::string, double>> finite;
  std::size_t bad = 0;
  for (double v : values) {
    if (std::isfinite(v))
      finite.emplace_back("", v);
    else
      ++bad;
  }
  json j = {{"n", finite.size()}, {"n_nonfinite", bad}};
  if (finite.empty()) {
    j["mean"] = j["median"] = j["sd"] = nullptr;
    return j;
  }
  const EvalReport r = summarize(std::move(finite));
  j["mean"] = r.mean;
  j["median"] = r.median;
  j["sd"] = r.sd;
  return j;
}

std::size_t check_k_max(const FamilyModel& model, std::optional<std::size_t> k,
                        std::optional<std::size_t> k_max, double fve)
{
  const std::size_t comps = model.components();
  if (k && (*k < 1 || *k > comps))
    throw UsageError("--k must lie in [1, " + std::to_string(comps) + "]");
  const std::size_t km = k_max.value_or(comps);
  if (km < 1 || km > comps)
    throw UsageError("--k-max must lie in [1, " + std::to_string(comps) + "]");
  if (!(fve > 0.0 && fve <= 1.0))
    throw UsageError("--fve must lie in (0, 1]");
  return std::min(km, components_for_fve(model.sys(), fve));
}

// Observations on the model scale; log-scale models clamp into the domain.
std::vector<double> model_scale(const ModelFile& mf, std::span<const double> obs,
                                std::size_t* clamped)
{
  if (obs.empty())
    throw std::invalid_argument("subpopulation has no observations");
  if (mf.log_scale)
    return to_log_scale(mf.model.domain(), obs, clamped);
  for (double v : obs)
    if (!mf.model.domain().contains(v))
      throw std::invalid_argument("observation " + format_double(v) +
                                  " lies outside the model domain");
  if (clamped)
    *clamped = 0;
  return {obs.begin(), obs.end()};
}

// One name per id, made unique after sanitizing.
std::vector<std::string> density_names(std::span<const SubpopSample> samples)
{
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::string name = "density_" + safe_filename(samples[i].id);
    if (!seen.insert(name).second) {
      name += "_" + std::to_string(i);
      seen.insert(name);
    }
    out.push_back(name + ".csv");
  }
  return out;
}

} // namespace

SizeRange parse_size_range(const std::string& s)
{
  const auto v = parse_list(s);
  if (v.empty() || v.size() > 2)
    throw UsageError("size range must be 'n' or 'lo,hi': " + s);
  for (double x : v)
    if (x < 1 || x != std::floor(x))
      throw UsageError("sizes must be positive integers: " + s);
  const SizeRange r{static_cast<std::size_t>(v.front()), static_cast<std::size_t>(v.back())};
  if (r.lo > r.hi)
    throw UsageError("size range has lo > hi: " + s);
  return r;
}

std::pair<double, double> parse_interval(const std::string& s)
{
  const auto v = parse_list(s);
  if (v.size() != 2 || !(v[0] < v[1]))
    throw UsageError("expected 'lo,hi' with lo < hi: " + s);
  return {v[0], v[1]};
}

std::vector<double> parse_list(const std::string& s)
{
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() ||
        !std::isfinite(v))
      throw UsageError("not a number list: " + s);
    out.push_back(v);
  }
  return out;
}

std::string stratum_label(std::size_t n, const std::vector<double>& breaks)
{
  if (breaks.empty())
    return "all";
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  double lo = 0.0;
  for (double b : breaks) {
    if (static_cast<double>(n) <= b)
      return "(" + fmt(lo) + "," + fmt(b) + "]";
    lo = b;
  }
  return "(" + fmt(lo) + ",inf)";
}

void configure_threads(int threads)
{
  if (threads > 0) {
    kernels::set_threads(threads);
    return;
  }
  if (const char* env = std::getenv("REPDEN_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0)
      kernels::set_threads(t);
  }
}

int run_guarded(const std::function<int()>& f, std::ostream& err)
{
  try {
    return f();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

int cmd_train(const TrainArgs& a, std::ostream& out)
{
  if (!a.log_scale && !a.domain)
    throw UsageError("--domain lo,hi is required unless --log-scale is given");
  if (a.grid < Domain::kMinGrid)
    throw UsageError("--grid must be at least " + std::to_string(Domain::kMinGrid));
  if (a.k_max < 1)
    throw UsageError("--k-max must be positive");
  if (a.bandwidth && !(*a.bandwidth > 0.0))
    throw UsageError("--bandwidth must be positive");
  if (a.log_scale && !(a.delta > 0.0))
    throw UsageError("--delta must be positive");

  const auto all = read_samples(a.input);
  const std::size_t min_size = std::max<std::size_t>(a.min_train_size, 2);
  std::vector<SubpopSample> used;
  std::vector<std::string> excluded;
  for (const auto& s : all) {
    if (s.size() >= min_size)
      used.push_back(s);
    else
      excluded.push_back(s.id);
  }
  if (used.size() < 2)
    throw IoError("fewer than 2 subpopulations with at least " + std::to_string(min_size) +
                  " observations");

  TrainOptions topts;
  topts.bandwidth = a.bandwidth;
  topts.k_max = a.k_max;

  std::optional<ModelFile> mf;
  if (a.log_scale) {
    ScaledModel sm = fit_scaled(used, a.delta, a.grid, topts);
    mf.emplace(ModelFile{std::move(sm.inner), true, a.delta, sm.generalized_lower, {}});
  } else {
    const Domain d(a.domain->first, a.domain->second, a.grid);
    for (const auto& s : used)
      for (double v : s.obs)
        if (!d.contains(v))
          throw IoError("subpopulation '" + s.id + "' has observation " + format_double(v) +
                        " outside the declared domain");
    mf.emplace(ModelFile{train_family(used, d, topts), false, a.delta, false, {}});
  }
  mf->provenance.excluded = excluded;
  mf->provenance.seed = a.seed;
  mf->provenance.timestamp = utc_timestamp();
  save_model(a.output, *mf);

  const auto& sys = mf->model.sys();
  std::vector<double> fve;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < sys.eigvals.size(); ++k) {
    acc += sys.eigvals[k];
    fve.push_back(acc / sys.eigvals.sum());
  }
  const Domain& d = mf->model.domain();
  json summary = {{"model", a.output.string()},
                  {"n_used", used.size()},
                  {"n_excluded", excluded.size()},
                  {"excluded", excluded},
                  {"bandwidth", mf->model.meta().bandwidth},
                  {"domain", {{"lo", d.lo()}, {"hi", d.hi()}, {"n_grid", d.size()}}},
                  {"log_scale", mf->log_scale},
                  {"components", sys.components()},
                  {"eigvals", std::vector<double>(sys.eigvals.data(),
                                                  sys.eigvals.data() + sys.eigvals.size())},
                  {"fve", fve}};
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_fit(const FitArgs& a, std::ostream& out)
{
  const ModelFile mf = load_model(a.model);
  const FamilyModel& model = mf.model;
  const std::size_t k_max = check_k_max(model, a.k, a.k_max, a.fve);
  const auto samples = read_samples(a.input);
  ensure_dir(a.output_dir);

  std::vector<ShrinkageStats> table;
  if (a.method == Method::blup)
    table = shrinkage_table(model, a.k ? *a.k : k_max);

  const auto names = density_names(samples);
  const auto n = samples.size();
  std::vector<json> items(n);
  std::vector<char> numerical(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const auto& s = samples[i];
    json item = {{"subpop_id", s.id}, {"n_obs", s.size()}};
    try {
      std::size_t clamped = 0;
      const auto x = model_scale(mf, s.obs, &clamped);
      const FitResult r = a.k ? fit(model, x, a.method, *a.k, &table)
                              : select_k_aic(model, x, a.method, k_max, &table);
      const GridFn px = density(model, r.theta);
      const std::filesystem::path file = a.output_dir / names[i];
      if (mf.log_scale) {
        const ScaledDensity py = density_original_scale(px);
        write_columns(file, "y,density", py.y, py.values);
      } else {
        const Eigen::VectorXd t = model.domain().points();
        write_columns(file, "x,density", std::span(t.data(), static_cast<std::size_t>(t.size())),
                      std::span(px.values().data(), px.size()));
      }
      json trace = json::array();
      for (const auto& e : r.aic_trace)
        trace.push_back({{"k", e.k}, {"aic", e.aic}});
      item["status"] = "ok";
      item["method"] = to_string(r.method);
      item["k"] = r.k;
      item["theta"] = std::vector<double>(r.theta.theta.data(),
                                          r.theta.theta.data() + r.theta.theta.size());
      item["xi"] = std::vector<double>(r.xi.xi.data(), r.xi.xi.data() + r.xi.xi.size());
      item["log_normalizer"] = r.log_normalizer;
      item["loglik"] = r.loglik;
      item["aic_trace"] = trace;
      item["clamped"] = clamped;
      item["density_file"] = names[i];
    } catch (const NumericalError& e) {
      item["status"] = "error";
      item["error"] = e.what();
      numerical[i] = 1;
    } catch (const std::exception& e) {
      item["status"] = "error";
      item["error"] = e.what();
    }
    items[i] = std::move(item);
  });

  std::size_t ok = 0;
  for (const auto& it : items)
    ok += it["status"] == "ok";
  json report = {{"model", a.model.string()},
                 {"method", to_string(a.method)},
                 {"k", a.k ? json(*a.k) : json("aic")},
                 {"k_max", k_max},
                 {"log_scale", mf.log_scale},
                 {"items", items}};
  write_json(a.output_dir / "fits.json", report);
  out << json{{"n_items", n}, {"n_ok", ok}, {"n_failed", n - ok}}.dump(2) << '\n';

  const bool all_numerical =
    n > 0 && ok == 0 && std::all_of(numerical.begin(), numerical.end(), [](char c) { return c; });
  return all_numerical ? kExitNumerical : kExitOk;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
  if (a.reps < 1)
    throw UsageError("--reps must be positive");
  if (a.grid < Domain::kMinGrid)
    throw UsageError("--grid must be at least " + std::to_string(Domain::kMinGrid));
  if (a.k_max < 1)
    throw UsageError("--k-max must be positive");
  if (!(a.fve > 0.0 && a.fve <= 1.0))
    throw UsageError("--fve must lie in (0, 1]");

  ScenarioSpec spec = ScenarioSpec::defaults(a.scenario);
  spec.seed = a.seed;
  spec.n_grid = a.grid;
  if (a.n_train)
    spec.n_train = *a.n_train;
  if (a.train_size)
    spec.train_size = *a.train_size;
  if (a.n_test)
    spec.n_test = *a.n_test;
  if (a.test_size)
    spec.test_size = *a.test_size;
  if (spec.n_train < 3)
    throw UsageError("--n-train must be at least 3");
  if (spec.n_test < 1)
    throw UsageError("--n-test must be positive");
  if (spec.train_size.lo < 2)
    throw UsageError("training samples need at least 2 observations");

  SimOptions so;
  so.k_max = a.k_max;
  so.fve = a.fve;
  so.fixed_k = a.k;
  ensure_dir(a.output_dir);

  auto mkl_csv = open_csv(a.output_dir / "mkl.csv", "rep,seed,method,mkl,mean_k,failed");
  std::map<std::string, std::vector<double>> mkls, ks;
  std::map<std::string, std::size_t> failed;
  std::vector<std::string> order;
  json per_rep = json::array();
  for (std::size_t r = 0; r < a.reps; ++r) {
    ScenarioSpec s = spec;
    s.seed = spec.seed + r;
    const ScenarioData data = generate(s);
    if (a.write_samples) {
      std::vector<SubpopSample> test;
      for (const auto& tc : data.test)
        test.push_back(tc.sample);
      const std::string stem = "rep" + std::to_string(r);
      write_samples(a.output_dir / (stem + "_train.csv"), data.train);
      write_samples(a.output_dir / (stem + "_test.csv"), test);
    }
    const RepOutcome rep = run_simulation_rep(data, so);
    json jr = {{"rep", r}, {"seed", s.seed}, {"bandwidth", rep.bandwidth},
               {"components", rep.components}};
    for (const auto& m : rep.methods) {
      if (r == 0)
        order.push_back(m.method);
      const double mkl = m.mkl();
      const double mk = m.mean_k();
      mkls[m.method].push_back(mkl);
      ks[m.method].push_back(mk);
      failed[m.method] += m.failed;
      mkl_csv << r << ',' << s.seed << ',' << m.method << ',' << format_double(mkl) << ','
              << format_double(mk) << ',' << m.failed << '\n';
      jr["methods"][m.method] = {{"mkl", num(mkl)}, {"mean_k", num(mk)}, {"failed", m.failed}};
    }
    per_rep.push_back(std::move(jr));
  }

  auto summary_csv =
    open_csv(a.output_dir / "summary.csv", "method,reps,mean_mkl,median_mkl,sd_mkl,mean_k,failed");
  json methods = json::object();
  bool any_fpca = false;
  for (const auto& name : order) {
    const json st = stats_json(mkls[name]);
    const json kst = stats_json(ks[name]);
    methods[name] = {{"mkl", st}, {"mean_k", kst["mean"]}, {"failed_fits", failed[name]}};
    if (name != "kde" && st["n"].get<std::size_t>() > 0)
      any_fpca = true;
    auto field = [](const json& v) {
      return v.is_null() ? std::string("nan") : format_double(v.get<double>());
    };
    summary_csv << name << ',' << a.reps << ',' << field(st["mean"]) << ','
                << field(st["median"]) << ',' << field(st["sd"]) << ',' << field(kst["mean"])
                << ',' << failed[name] << '\n';
  }
  json summary = {{"scenario", to_string(a.scenario)},
                  {"seed", a.seed},
                  {"reps", a.reps},
                  {"n_train", spec.n_train},
                  {"train_size", {spec.train_size.lo, spec.train_size.hi}},
                  {"n_test", spec.n_test},
                  {"test_size", {spec.test_size.lo, spec.test_size.hi}},
                  {"grid", spec.n_grid},
                  {"k", a.k ? json(*a.k) : json("aic")},
                  {"k_max", a.k_max},
                  {"fve", a.fve},
                  {"methods", methods},
                  {"per_rep", per_rep}};
  write_json(a.output_dir / "summary.json", summary);
  summary.erase("per_rep");
  out << summary.dump(2) << '\n';
  return any_fpca ? kExitOk : kExitNumerical;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out)
{
  static const std::set<std::string> known{"mle", "map", "blup", "kde", "uniform"};
  if (a.methods.empty())
    throw UsageError("--methods is empty");
  for (const auto& m : a.methods)
    if (!known.count(m))
      throw UsageError("unknown method '" + m + "' (mle, map, blup, kde, uniform)");
  if (!a.loo && a.return_levels.empty())
    throw UsageError("nothing to evaluate: pass --loo and/or --return-levels");
  for (double t : a.return_levels)
    if (!(t > 1.0))
      throw UsageError("return periods must exceed 1");
  if (!std::is_sorted(a.strata.begin(), a.strata.end()) ||
      std::adjacent_find(a.strata.begin(), a.strata.end()) != a.strata.end())
    throw UsageError("--strata breaks must be strictly increasing");

  const ModelFile mf = load_model(a.model);
  const FamilyModel& model = mf.model;
  const std::size_t k_max = check_k_max(model, a.k, a.k_max, a.fve);
  const auto samples = read_samples(a.input);
  ensure_dir(a.output_dir);

  const bool need_blup = std::find(a.methods.begin(), a.methods.end(), "blup") != a.methods.end();
  const auto table = need_blup ? shrinkage_table(model, a.k ? *a.k : k_max)
                               : std::vector<ShrinkageStats>{};
  const Domain& dom = model.domain();

  auto refit = [&](const std::string& m) -> RefitFn {
    if (m == "kde")
      return [&](std::span<const double> x) {
        return kde_baseline(x, dom, model.meta().bandwidth);
      };
    if (m == "uniform")
      return [&](std::span<const double>) { return GridFn::constant(dom, 1.0 / dom.length()); };
    const Method method = parse_method(m);
    return [&, method](std::span<const double> x) {
      const FitResult r = a.k ? fit(model, x, method, *a.k, &table)
                              : select_k_aic(model, x, method, k_max, &table);
      return density(model, r.theta);
    };
  };

  const auto n = samples.size();
  const auto nm = a.methods.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> ce(n, std::vector<double>(nm, nan));
  std::vector<std::vector<std::vector<double>>> levels(
    n, std::vector<std::vector<double>>(nm, std::vector<double>(a.return_levels.size(), nan)));
  std::vector<std::vector<std::string>> errors(n, std::vector<std::string>(nm));

  parallel_for(n, [&](std::size_t i) {
    std::vector<double> x;
    try {
      x = model_scale(mf, samples[i].obs, nullptr);
    } catch (const std::exception& e) {
      for (auto& err : errors[i])
        err = e.what();
      return;
    }
    for (std::size_t mi = 0; mi < nm; ++mi) {
      const RefitFn f = refit(a.methods[mi]);
      try {
        if (a.loo) {
          if (x.size() < 2)
            throw std::invalid_argument("leave-one-out needs at least 2 observations");
          ce[i][mi] = loo_cross_entropy(f, x);
        }
        if (!a.return_levels.empty()) {
          const GridFn p = f(x);
          for (std::size_t ti = 0; ti < a.return_levels.size(); ++ti) {
            const double t = a.return_levels[ti];
            levels[i][mi][ti] = mf.log_scale
                                  ? density_original_scale(p).quantile(1.0 - 1.0 / t)
                                  : return_level(p, t);
          }
        }
      } catch (const std::exception& e) {
        errors[i][mi] = e.what();
      }
    }
  });

  json errs = json::array();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t mi = 0; mi < nm; ++mi)
      if (!errors[i][mi].empty())
        errs.push_back({{"subpop_id", samples[i].id},
                        {"method", a.methods[mi]},
                        {"error", errors[i][mi]}});

  json summary = {{"model", a.model.string()},
                  {"log_scale", mf.log_scale},
                  {"n_subpops", n},
                  {"k", a.k ? json(*a.k) : json("aic")},
                  {"k_max", k_max}};
  if (a.loo) {
    auto csv = open_csv(a.output_dir / "loo.csv", "subpop_id,n,stratum,method,cross_entropy");
    json per_method = json::object();
    for (std::size_t mi = 0; mi < nm; ++mi) {
      std::vector<double> all;
      std::map<std::string, std::vector<double>> by_stratum;
      for (std::size_t i = 0; i < n; ++i) {
        const std::string label = stratum_label(samples[i].size(), a.strata);
        const double v = ce[i][mi];
        csv << samples[i].id << ',' << samples[i].size() << ",\"" << label << "\","
            << a.methods[mi] << ',' << (std::isnan(v) ? "nan" : format_double(v)) << '\n';
        all.push_back(v);
        by_stratum[label].push_back(v);
      }
      json strata = json::object();
      for (const auto& [label, vals] : by_stratum)
        strata[label] = stats_json(vals);
      per_method[a.methods[mi]] = {{"overall", stats_json(all)}, {"strata", strata}};
    }
    summary["loo_cross_entropy"] = per_method;
  }
  if (!a.return_levels.empty()) {
    auto csv = open_csv(a.output_dir / "return_levels.csv", "subpop_id,n,method,period,level");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t mi = 0; mi < nm; ++mi)
        for (std::size_t ti = 0; ti < a.return_levels.size(); ++ti) {
          const double v = levels[i][mi][ti];
          csv << samples[i].id << ',' << samples[i].size() << ',' << a.methods[mi] << ','
              << format_double(a.return_levels[ti]) << ','
              << (std::isnan(v) ? "nan" : format_double(v)) << '\n';
        }
    summary["return_periods"] = a.return_levels;
  }
  summary["errors"] = errs;
  write_json(a.output_dir / "summary.json", summary);
  out << summary.dump(2) << '\n';
  return kExitOk;
}

} // namespace repden::cli
