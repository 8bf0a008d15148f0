#pragma once

#include "repden/estimators.hpp"
#include "repden/simgen.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace repden::cli {

enum ExitCode : int
{
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitNumerical = 3
};

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct TrainArgs
{
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::pair<double, double>> domain; // required unless log_scale
  std::size_t grid = Domain::kDefaultGrid;
  std::size_t k_max = 20;
  std::optional<double> bandwidth; // unset: median rule
  std::size_t min_train_size = 2;
  bool log_scale = false;
  double delta = 0.5;
  std::uint64_t seed = 0;
};

struct FitArgs
{
  std::filesystem::path model;
  std::filesystem::path input;
  std::filesystem::path output_dir;
  Method method = Method::mle;
  std::optional<std::size_t> k;     // unset: AIC
  std::optional<std::size_t> k_max; // AIC sweep limit, default all components
  double fve = 0.99;                // further caps the sweep by variance explained
};

struct SimulateArgs
{
  ScenarioKind scenario = ScenarioKind::trunc_normal;
  std::uint64_t seed = 1;
  std::size_t reps = 50;
  std::optional<std::size_t> n_train;
  std::optional<SizeRange> train_size;
  std::optional<std::size_t> n_test;
  std::optional<SizeRange> test_size;
  std::size_t grid = Domain::kDefaultGrid;
  std::size_t k_max = 10;
  double fve = 0.99;
  std::optional<std::size_t> k;
  std::filesystem::path output_dir;
  bool write_samples = false;
};

struct EvaluateArgs
{
  std::filesystem::path model;
  std::filesystem::path input;
  std::filesystem::path output_dir;
  std::vector<std::string> methods{"mle", "map", "blup", "kde"};
  bool loo = false;
  std::vector<double> return_levels;
  std::vector<double> strata; // increasing size breaks
  std::optional<std::size_t> k;
  std::optional<std::size_t> k_max;
  double fve = 0.99;
};

//! Each command returns an exit code. Exceptions escaping a command are mapped
//! to exit codes by run_guarded.
int cmd_train(const TrainArgs& a, std::ostream& out);
int cmd_fit(const FitArgs& a, std::ostream& out);
int cmd_simulate(const SimulateArgs& a, std::ostream& out);
int cmd_evaluate(const EvaluateArgs& a, std::ostream& out);

int run_guarded(const std::function<int()>& f, std::ostream& err);

//! "lo,hi" or a single value for both ends.
SizeRange parse_size_range(const std::string& s);
std::pair<double, double> parse_interval(const std::string& s);
std::vector<double> parse_list(const std::string& s);

//! Label of the size stratum (b_{i-1}, b_i] holding n; sizes above the last
//! break fall into (b_last, inf).
std::string stratum_label(std::size_t n, const std::vector<double>& breaks);

//! --threads when positive, else REPDEN_THREADS, else the OpenMP default.
void configure_threads(int threads);

} // namespace repden::cli
