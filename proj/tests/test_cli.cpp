#include "repden/cli/commands.hpp"
#include "repden/cli/csv.hpp"
#include "repden/cli/model_io.hpp"
#include "repden/error.hpp"
#include "repden/metrics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace repden;
using namespace repden::cli;
using namespace repden::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("repden_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p)
{
  return json::parse(slurp(p));
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p)
{
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"')
        quoted = !quoted;
      else if (c == ',' && !quoted) {
        cells.push_back(cell);
        cell.clear();
      } else
        cell += c;
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::vector<SubpopSample> uniform_subpops(std::initializer_list<std::size_t> sizes,
                                          std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SubpopSample> out;
  int i = 0;
  for (std::size_t n : sizes) {
    std::vector<double> x(n);
    for (double& v : x)
      v = u(rng);
    out.emplace_back("u" + std::to_string(i++), std::move(x));
  }
  return out;
}

std::vector<SubpopSample> scenario_train(std::uint64_t seed, std::size_t n, std::size_t size)
{
  ScenarioSpec spec = ScenarioSpec::defaults(ScenarioKind::trunc_normal);
  spec.n_train = n;
  spec.train_size = {size, size};
  spec.n_test = 1;
  spec.seed = seed;
  return generate(spec).train;
}

TrainArgs train_args(const fs::path& in, const fs::path& out, double lo, double hi)
{
  TrainArgs a;
  a.input = in;
  a.output = out;
  a.domain = std::pair{lo, hi};
  a.grid = 128;
  a.k_max = 6;
  return a;
}

} // namespace

TEST(Csv, ParsesSamplesInFirstAppearanceOrder)
{
  std::istringstream in("subpop_id,value\r\nb,0.5\r\na,1e-3\nb,-2\nc,\nwith,comma,3\n");
  const auto s = parse_samples(in);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].id, "b");
  EXPECT_EQ(s[0].obs, (std::vector<double>{-2.0, 0.5}));
  EXPECT_EQ(s[1].obs, std::vector<double>{1e-3});
  EXPECT_EQ(s[2].id, "c");
  EXPECT_TRUE(s[2].obs.empty());
  EXPECT_EQ(s[3].id, "with,comma");
}

TEST(Csv, RejectsMalformedInput)
{
  std::istringstream bad_header("id,value\na,1\n");
  EXPECT_THROW(parse_samples(bad_header), IoError);
  std::istringstream bad_value("subpop_id,value\na,1x\n");
  EXPECT_THROW(parse_samples(bad_value), IoError);
  std::istringstream no_comma("subpop_id,value\na\n");
  EXPECT_THROW(parse_samples(no_comma), IoError);
  EXPECT_THROW(read_samples("/nonexistent/file.csv"), IoError);
}

TEST(Csv, WriteReadRoundTripIsExact)
{
  const fs::path dir = scratch("csv");
  std::vector<SubpopSample> s = uniform_subpops({3, 4}, 5);
  s[0].obs[1] = 0.1 + 0.2;
  write_samples(dir / "s.csv", s);
  const auto back = read_samples(dir / "s.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].obs, s[0].obs);
  EXPECT_EQ(back[1].obs, s[1].obs);
  EXPECT_EQ(safe_filename("a/b c:1.x"), "a_b_c_1.x");
}

TEST(ModelIo, RoundTripIsBitExact)
{
  const fs::path dir = scratch("model");
  ModelFile mf{small_trained(), false, 0.5, false, {{"x1"}, 42, "2024-01-01T00:00:00Z"}};
  save_model(dir / "m.json", mf);
  const ModelFile back = load_model(dir / "m.json");
  const FamilyModel& a = mf.model;
  const FamilyModel& b = back.model;
  EXPECT_EQ(a.domain(), b.domain());
  EXPECT_EQ(a.sys().mu.values(), b.sys().mu.values());
  EXPECT_EQ(a.sys().eigvals, b.sys().eigvals);
  EXPECT_EQ(a.sys().eigfns, b.sys().eigfns);
  EXPECT_EQ(a.sys().scores, b.sys().scores);
  EXPECT_EQ(a.presmoothed(), b.presmoothed());
  EXPECT_EQ(a.meta().bandwidth, b.meta().bandwidth);
  EXPECT_EQ(a.meta().ids, b.meta().ids);
  EXPECT_EQ(a.meta().sizes, b.meta().sizes);
  EXPECT_EQ(back.provenance.seed, 42u);
  EXPECT_EQ(back.provenance.excluded, std::vector<std::string>{"x1"});
  EXPECT_EQ(model_to_json(mf).dump(), model_to_json(back).dump());
}

TEST(ModelIo, RejectsOtherVersionsAndMissingFields)
{
  ModelFile mf{small_trained(), false, 0.5, false, {}};
  json j = model_to_json(mf);
  j["format_version"] = 99;
  EXPECT_THROW(model_from_json(j), IoError);
  j = model_to_json(mf);
  j.erase("eigfns");
  EXPECT_THROW(model_from_json(j), IoError);
  j = model_to_json(mf);
  j["mu"].erase(0);
  EXPECT_THROW(model_from_json(j), IoError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
}

TEST(CmdTrain, TwoUniformSubpopsGiveSmallSpectrum)
{
  const fs::path dir = scratch("train_uniform");
  write_samples(dir / "in.csv", uniform_subpops({50, 50}, 3));
  std::ostringstream out;
  ASSERT_EQ(cmd_train(train_args(dir / "in.csv", dir / "m.json", 0.0, 1.0), out), kExitOk);
  const ModelFile mf = load_model(dir / "m.json");
  ASSERT_GE(mf.model.components(), 1u);
  EXPECT_LT(mf.model.sys().eigvals[0], 0.5);
  EXPECT_EQ(json::parse(out.str())["n_used"], 2);
}

TEST(CmdTrain, MinTrainSizeExcludesSmallSubpops)
{
  const fs::path dir = scratch("train_min");
  write_samples(dir / "in.csv", uniform_subpops({100, 20, 80, 74, 75, 10}, 4));
  TrainArgs a = train_args(dir / "in.csv", dir / "m.json", 0.0, 1.0);
  a.min_train_size = 75;
  std::ostringstream out;
  ASSERT_EQ(cmd_train(a, out), kExitOk);
  const json s = json::parse(out.str());
  EXPECT_EQ(s["n_excluded"], 3);
  EXPECT_EQ(s["n_used"], 3);
  EXPECT_EQ(load_model(dir / "m.json").provenance.excluded,
            (std::vector<std::string>{"u1", "u3", "u5"}));
}

TEST(CmdTrain, DeterministicExceptTimestamp)
{
  const fs::path dir = scratch("train_det");
  write_samples(dir / "in.csv", scenario_train(5, 12, 80));
  std::ostringstream out;
  ASSERT_EQ(cmd_train(train_args(dir / "in.csv", dir / "a.json", -3, 3), out), kExitOk);
  ASSERT_EQ(cmd_train(train_args(dir / "in.csv", dir / "b.json", -3, 3), out), kExitOk);
  json a = read_json(dir / "a.json"), b = read_json(dir / "b.json");
  a["provenance"].erase("timestamp");
  b["provenance"].erase("timestamp");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(CmdTrain, Errors)
{
  const fs::path dir = scratch("train_err");
  write_samples(dir / "in.csv", uniform_subpops({50, 1}, 3));
  std::ostringstream out, err;
  EXPECT_THROW(cmd_train(train_args(dir / "in.csv", dir / "m.json", 0, 1), out), IoError);
  write_samples(dir / "in2.csv", uniform_subpops({50, 50}, 3));
  EXPECT_THROW(cmd_train(train_args(dir / "in2.csv", dir / "m.json", 0, 0.5), out), IoError);
  TrainArgs no_domain = train_args(dir / "in2.csv", dir / "m.json", 0, 1);
  no_domain.domain.reset();
  EXPECT_EQ(run_guarded([&] { return cmd_train(no_domain, out); }, err), kExitUsage);
  EXPECT_EQ(run_guarded([&] { return cmd_train(train_args(dir / "none.csv", dir / "m.json", 0, 1), out); },
                        err),
            kExitIo);
}

TEST(CmdFit, RecordsPerItemErrorsWithoutAborting)
{
  const fs::path dir = scratch("fit_items");
  write_samples(dir / "train.csv", scenario_train(6, 15, 150));
  std::ostringstream out;
  ASSERT_EQ(cmd_train(train_args(dir / "train.csv", dir / "m.json", -3, 3), out), kExitOk);
  {
    std::ofstream f(dir / "new.csv");
    f << "subpop_id,value\na,0.1\na,0.7\na,-1.2\nempty,\nb,2.5\nb,-0.3\nb,1.1\n";
  }
  FitArgs a{dir / "m.json", dir / "new.csv", dir / "out", Method::mle, 2, std::nullopt};
  ASSERT_EQ(cmd_fit(a, out), kExitOk);
  const json fits = read_json(dir / "out" / "fits.json");
  ASSERT_EQ(fits["items"].size(), 3u);
  EXPECT_EQ(fits["items"][0]["status"], "ok");
  EXPECT_EQ(fits["items"][0]["k"], 2);
  EXPECT_EQ(fits["items"][0]["aic_trace"].size(), 1u);
  EXPECT_EQ(fits["items"][1]["subpop_id"], "empty");
  EXPECT_EQ(fits["items"][1]["status"], "error");
  EXPECT_EQ(fits["items"][2]["status"], "ok");
  const auto rows = read_rows(dir / "out" / "density_a.csv");
  EXPECT_EQ(rows.size(), 128u);

  a.k.reset();
  a.method = Method::blup;
  ASSERT_EQ(cmd_fit(a, out), kExitOk);
  const json aic = read_json(dir / "out" / "fits.json");
  EXPECT_EQ(aic["k"], "aic");
  EXPECT_GE(aic["items"][0]["aic_trace"].size(), 1u);
}

TEST(CmdFit, SelfFitIsCloserThanOtherSubpops)
{
  const fs::path dir = scratch("fit_self");
  const auto train = scenario_train(8, 12, 300);
  write_samples(dir / "train.csv", train);
  std::ostringstream out;
  ASSERT_EQ(cmd_train(train_args(dir / "train.csv", dir / "m.json", -3, 3), out), kExitOk);
  const ModelFile mf = load_model(dir / "m.json");
  const FamilyModel& m = mf.model;
  const std::size_t k = m.components();
  FitArgs a{dir / "m.json", dir / "train.csv", dir / "out", Method::mle, k, std::nullopt};
  ASSERT_EQ(cmd_fit(a, out), kExitOk);
  const json fits = read_json(dir / "out" / "fits.json");

  const auto n = static_cast<Eigen::Index>(m.n_train());
  const Domain& d = m.domain();
  std::vector<double> cross;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j)
        cross.push_back(kl_div(GridFn(d, m.presmoothed().row(i).transpose()),
                               GridFn(d, m.presmoothed().row(j).transpose())));
  std::sort(cross.begin(), cross.end());
  const double p90 = cross[static_cast<std::size_t>(0.9 * static_cast<double>(cross.size()))];
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& item = fits["items"][static_cast<std::size_t>(i)];
    ASSERT_EQ(item["status"], "ok");
    const auto th = item["theta"].get<std::vector<double>>();
    const GridFn fitted = density(m, NaturalParam(Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()))));
    EXPECT_LT(kl_div(GridFn(d, m.presmoothed().row(i).transpose()), fitted), p90) << "subpop " << i;
  }
}

TEST(CmdFit, DeterministicOutputs)
{
  const fs::path dir = scratch("fit_det");
  write_samples(dir / "train.csv", scenario_train(12, 10, 120));
  std::ostringstream out;
  ASSERT_EQ(cmd_train(train_args(dir / "train.csv", dir / "m.json", -3, 3), out), kExitOk);
  write_samples(dir / "new.csv", scenario_train(13, 6, 12));
  for (Method meth : {Method::mle, Method::map, Method::blup}) {
    FitArgs a{dir / "m.json", dir / "new.csv", dir / "a", meth, std::nullopt, std::nullopt};
    ASSERT_EQ(cmd_fit(a, out), kExitOk);
    a.output_dir = dir / "b";
    ASSERT_EQ(cmd_fit(a, out), kExitOk);
    for (const auto& e : fs::directory_iterator(dir / "a"))
      EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path();
  }
}

TEST(CmdEvaluate, DeterministicOutputs)
{
  const fs::path dir = scratch("evaluate_det");
  write_samples(dir / "train.csv", scenario_train(14, 10, 120));
  std::ostringstream out;
  ASSERT_EQ(cmd_train(train_args(dir / "train.csv", dir / "m.json", -3, 3), out), kExitOk);
  write_samples(dir / "new.csv", scenario_train(15, 4, 8));
  EvaluateArgs a;
  a.model = dir / "m.json";
  a.input = dir / "new.csv";
  a.loo = true;
  a.return_levels = {5, 10};
  a.k_max = 3;
  a.output_dir = dir / "a";
  ASSERT_EQ(cmd_evaluate(a, out), kExitOk);
  a.output_dir = dir / "b";
  ASSERT_EQ(cmd_evaluate(a, out), kExitOk);
  for (const char* f : {"loo.csv", "return_levels.csv", "summary.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(CmdSimulate, DeterministicWithOneRowPerRepAndMethod)
{
  const fs::path dir = scratch("simulate");
  SimulateArgs a;
  a.scenario = ScenarioKind::trunc_normal;
  a.seed = 7;
  a.reps = 2;
  a.n_train = 10;
  a.train_size = SizeRange{100, 100};
  a.n_test = 5;
  a.grid = 64;
  a.k_max = 3;
  a.output_dir = dir / "a";
  std::ostringstream out;
  ASSERT_EQ(cmd_simulate(a, out), kExitOk);
  a.output_dir = dir / "b";
  ASSERT_EQ(cmd_simulate(a, out), kExitOk);
  for (const char* f : {"mkl.csv", "summary.csv", "summary.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  const auto rows = read_rows(dir / "a" / "mkl.csv");
  ASSERT_EQ(rows.size(), 8u);
  std::map<std::string, int> per_method;
  for (const auto& r : rows)
    ++per_method[r[2]];
  EXPECT_EQ(per_method, (std::map<std::string, int>{
                          {"fpca_blup", 2}, {"fpca_map", 2}, {"fpca_mle", 2}, {"kde", 2}}));
  EXPECT_EQ(read_rows(dir / "a" / "summary.csv").size(), 4u);
}

TEST(CmdEvaluate, StrataUniformLooAndSummaryRecomputation)
{
  const fs::path dir = scratch("evaluate");
  write_samples(dir / "train.csv", scenario_train(9, 12, 150));
  std::ostringstream out;
  ASSERT_EQ(cmd_train(train_args(dir / "train.csv", dir / "m.json", -3, 3), out), kExitOk);

  ScenarioSpec spec = ScenarioSpec::defaults(ScenarioKind::trunc_normal);
  spec.seed = 10;
  spec.n_train = 2;
  spec.n_test = 1;
  std::vector<SubpopSample> test;
  int i = 0;
  for (std::size_t size : {5u, 10u, 11u, 30u, 35u, 60u, 80u}) {
    spec.test_size = {size, size};
    auto s = generate(spec).test.front().sample;
    s.id = "t" + std::to_string(i++);
    test.push_back(std::move(s));
  }
  write_samples(dir / "test.csv", test);

  EvaluateArgs a;
  a.model = dir / "m.json";
  a.input = dir / "test.csv";
  a.output_dir = dir / "out";
  a.methods = {"uniform", "map", "kde"};
  a.loo = true;
  a.strata = {0, 10, 35, 75};
  a.k = 2;
  ASSERT_EQ(cmd_evaluate(a, out), kExitOk);

  const auto rows = read_rows(dir / "out" / "loo.csv");
  ASSERT_EQ(rows.size(), 21u);
  const std::map<std::string, std::string> expected{{"t0", "(0,10]"},   {"t1", "(0,10]"},
                                                    {"t2", "(10,35]"},  {"t3", "(10,35]"},
                                                    {"t4", "(10,35]"},  {"t5", "(35,75]"},
                                                    {"t6", "(75,inf)"}};
  std::map<std::string, std::map<std::string, std::vector<double>>> by;
  for (const auto& r : rows) {
    EXPECT_EQ(r[2], expected.at(r[0]));
    if (r[3] == "uniform")
      EXPECT_NEAR(std::stod(r[4]), std::log(6.0), 1e-12);
    by[r[3]]["all"].push_back(std::stod(r[4]));
    by[r[3]][r[2]].push_back(std::stod(r[4]));
  }

  const json s = read_json(dir / "out" / "summary.json");
  for (const auto& [method, groups] : by)
    for (const auto& [group, v] : groups) {
      const json& st = group == "all" ? s["loo_cross_entropy"][method]["overall"]
                                      : s["loo_cross_entropy"][method]["strata"][group];
      std::vector<double> sorted = v;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = v.size();
      double mean = 0.0;
      for (double x : v)
        mean += x / static_cast<double>(n);
      double ss = 0.0;
      for (double x : v)
        ss += (x - mean) * (x - mean);
      const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
      EXPECT_EQ(st["n"], n);
      EXPECT_NEAR(st["mean"].get<double>(), mean, 1e-9) << method << ' ' << group;
      EXPECT_NEAR(st["median"].get<double>(), median, 1e-9);
      EXPECT_NEAR(st["sd"].get<double>(), n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0,
                  1e-9);
    }
}

TEST(CmdEvaluate, UsageErrors)
{
  std::ostringstream out, err;
  EvaluateArgs a;
  a.model = "/nonexistent/m.json";
  EXPECT_EQ(run_guarded([&] { return cmd_evaluate(a, out); }, err), kExitUsage);
  a.loo = true;
  EXPECT_EQ(run_guarded([&] { return cmd_evaluate(a, out); }, err), kExitIo);
  a.strata = {10, 5};
  EXPECT_EQ(run_guarded([&] { return cmd_evaluate(a, out); }, err), kExitUsage);
}

TEST(RunGuarded, MapsExceptionsToExitCodes)
{
  std::ostringstream err;
  EXPECT_EQ(run_guarded([] { return 0; }, err), kExitOk);
  EXPECT_EQ(run_guarded([]() -> int { throw UsageError("u"); }, err), kExitUsage);
  EXPECT_EQ(run_guarded([]() -> int { throw IoError("i"); }, err), kExitIo);
  EXPECT_EQ(run_guarded([]() -> int { throw ConvergenceError("c"); }, err), kExitNumerical);
  EXPECT_EQ(run_guarded([]() -> int { throw MomentRangeError("m"); }, err), kExitNumerical);
}

TEST(CliParsing, RangesListsAndStrata)
{
  const SizeRange r = parse_size_range("75,100");
  EXPECT_EQ(r.lo, 75u);
  EXPECT_EQ(r.hi, 100u);
  EXPECT_EQ(parse_size_range("10").hi, 10u);
  EXPECT_EQ(parse_interval("-3,3"), (std::pair{-3.0, 3.0}));
  EXPECT_EQ(parse_list("5,10,20,30"), (std::vector<double>{5, 10, 20, 30}));
  EXPECT_THROW(parse_size_range("9,3"), UsageError);
  EXPECT_THROW(parse_interval("1,1"), UsageError);
  EXPECT_EQ(stratum_label(7, {}), "all");
  EXPECT_EQ(stratum_label(10, {0, 10, 35}), "(0,10]");
  EXPECT_EQ(stratum_label(11, {0, 10, 35}), "(10,35]");
  EXPECT_EQ(stratum_label(36, {0, 10, 35}), "(35,inf)");
}
