#include "repden/cli/commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

using namespace repden;
using namespace repden::cli;

namespace {

template <typename T>
std::optional<T> opt(bool set, T v)
{
  return set ? std::optional<T>(v) : std::nullopt;
}

std::optional<std::size_t> k_flag(const std::string& s)
{
  if (s == "aic")
    return std::nullopt;
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v < 1)
    throw UsageError("--k must be a positive integer or 'aic'");
  return static_cast<std::size_t>(v);
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Density estimation for many subpopulations via approximating exponential families"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default REPDEN_THREADS or all cores)");

  TrainArgs ta;
  std::string train_domain, train_bw = "auto";
  auto* train = app.add_subcommand("train", "Train the approximating families");
  train->add_option("--input", ta.input, "Training samples (subpop_id,value)")->required();
  train->add_option("--output", ta.output, "Model file to write")->required();
  train->add_option("--domain", train_domain, "Domain lo,hi");
  train->add_option("--grid", ta.grid, "Grid points")->capture_default_str();
  train->add_option("--k-max", ta.k_max, "Maximum retained components")->capture_default_str();
  train->add_option("--bandwidth", train_bw, "KDE bandwidth, or auto for the median rule")
    ->capture_default_str();
  train->add_option("--min-train-size", ta.min_train_size,
                    "Exclude subpopulations with fewer observations")
    ->capture_default_str();
  train->add_flag("--log-scale", ta.log_scale, "Train on log observations");
  train->add_option("--delta", ta.delta, "Upper padding of the log-scale domain")
    ->capture_default_str();
  train->add_option("--seed", ta.seed, "Recorded in the model provenance");
  train->add_option("--threads", threads, "Worker threads");

  FitArgs fa;
  std::string fit_method = "mle", fit_k = "aic";
  std::size_t fit_kmax = 0;
  auto* fitc = app.add_subcommand("fit", "Fit new subpopulations against a trained model");
  fitc->add_option("--model", fa.model)->required();
  fitc->add_option("--input", fa.input)->required();
  fitc->add_option("--output-dir", fa.output_dir)->required();
  fitc->add_option("--method", fit_method, "mle, map or blup")->capture_default_str();
  fitc->add_option("--k", fit_k, "Number of components, or aic")->capture_default_str();
  auto* fit_kmax_opt = fitc->add_option("--k-max", fit_kmax, "AIC sweep limit");
  fitc->add_option("--fve", fa.fve, "Variance-explained limit on the AIC sweep")
    ->capture_default_str();
  fitc->add_option("--threads", threads, "Worker threads");

  SimulateArgs sa;
  std::string sim_scenario, sim_train_size, sim_test_size, sim_k = "aic";
  std::size_t sim_n_train = 0, sim_n_test = 0;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo comparison on a synthetic scenario");
  sim->add_option("--scenario", sim_scenario,
                  "trunc_normal, bimodal, gauss_mixture, rand_intercept_normal, rand_intercept_t3")
    ->required();
  sim->add_option("--seed", sa.seed)->capture_default_str();
  sim->add_option("--reps", sa.reps)->capture_default_str();
  auto* o_ntrain = sim->add_option("--n-train", sim_n_train, "Training subpopulations");
  sim->add_option("--train-size", sim_train_size, "Training sample size n or lo,hi");
  auto* o_ntest = sim->add_option("--n-test", sim_n_test, "Test subpopulations");
  sim->add_option("--test-size", sim_test_size, "Test sample size n or lo,hi");
  sim->add_option("--grid", sa.grid)->capture_default_str();
  sim->add_option("--k-max", sa.k_max, "AIC sweep limit")->capture_default_str();
  sim->add_option("--fve", sa.fve, "Variance-explained limit on the AIC sweep")
    ->capture_default_str();
  sim->add_option("--k", sim_k, "Number of components, or aic")->capture_default_str();
  sim->add_option("--output-dir", sa.output_dir)->required();
  sim->add_flag("--write-samples", sa.write_samples, "Also write each rep's samples");
  sim->add_option("--threads", threads, "Worker threads");

  EvaluateArgs ea;
  std::string ev_methods = "mle,map,blup,kde", ev_levels, ev_strata, ev_k = "aic";
  std::size_t ev_kmax = 0;
  auto* eval = app.add_subcommand("evaluate", "Leave-one-out cross-entropy and return levels");
  eval->add_option("--model", ea.model)->required();
  eval->add_option("--input", ea.input)->required();
  eval->add_option("--output-dir", ea.output_dir)->required();
  eval->add_option("--methods", ev_methods, "Comma list of mle, map, blup, kde, uniform")
    ->capture_default_str();
  eval->add_flag("--loo", ea.loo, "Leave-one-out cross-entropy");
  eval->add_option("--return-levels", ev_levels, "Return periods, e.g. 5,10,20,30");
  eval->add_option("--strata", ev_strata, "Size breaks, e.g. 10,35,75");
  eval->add_option("--k", ev_k, "Number of components, or aic")->capture_default_str();
  auto* ev_kmax_opt = eval->add_option("--k-max", ev_kmax, "AIC sweep limit");
  eval->add_option("--fve", ea.fve, "Variance-explained limit on the AIC sweep")
    ->capture_default_str();
  eval->add_option("--threads", threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  return run_guarded(
    [&]() -> int {
      configure_threads(threads);
      if (*train) {
        if (!train_domain.empty())
          ta.domain = parse_interval(train_domain);
        if (train_bw != "auto") {
          const auto v = parse_list(train_bw);
          if (v.size() != 1)
            throw UsageError("--bandwidth takes a number or auto");
          ta.bandwidth = v.front();
        }
        return cmd_train(ta, std::cout);
      }
      if (*fitc) {
        try {
          fa.method = parse_method(fit_method);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
        fa.k = k_flag(fit_k);
        fa.k_max = opt(fit_kmax_opt->count() > 0, fit_kmax);
        return cmd_fit(fa, std::cout);
      }
      if (*sim) {
        try {
          sa.scenario = parse_scenario(sim_scenario);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
        sa.n_train = opt(o_ntrain->count() > 0, sim_n_train);
        sa.n_test = opt(o_ntest->count() > 0, sim_n_test);
        if (!sim_train_size.empty())
          sa.train_size = parse_size_range(sim_train_size);
        if (!sim_test_size.empty())
          sa.test_size = parse_size_range(sim_test_size);
        sa.k = k_flag(sim_k);
        return cmd_simulate(sa, std::cout);
      }
      ea.methods.clear();
      std::stringstream ss(ev_methods);
      for (std::string m; std::getline(ss, m, ',');)
        ea.methods.push_back(m);
      if (!ev_levels.empty())
        ea.return_levels = parse_list(ev_levels);
      if (!ev_strata.empty())
        ea.strata = parse_list(ev_strata);
      ea.k = k_flag(ev_k);
      ea.k_max = opt(ev_kmax_opt->count() > 0, ev_kmax);
      return cmd_evaluate(ea, std::cout);
    },
    std::cerr);
}
