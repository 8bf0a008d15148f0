#pragma once

#include "repden/grid.hpp"
#include "repden/presmooth.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace repden {

enum class ScenarioKind
{
  trunc_normal,
  bimodal,
  gauss_mixture,
  rand_intercept_normal,
  rand_intercept_t3
};

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view s);

//! Inclusive integer range; sizes are drawn uniformly from it.
struct SizeRange
{
  std::size_t lo;
  std::size_t hi;
};

struct ScenarioSpec
{
  ScenarioKind kind = ScenarioKind::trunc_normal;
  std::size_t n_train = 50;
  SizeRange train_size{200, 200};
  std::size_t n_test = 100;
  SizeRange test_size{10, 10};
  std::uint64_t seed = 0;
  std::size_t n_grid = Domain::kDefaultGrid;

  //! Sizes used by the published experiments for this scenario.
  static ScenarioSpec defaults(ScenarioKind kind);
};

Domain scenario_domain(ScenarioKind kind, std::size_t n_grid = Domain::kDefaultGrid);

//! Truncated N(mu, sigma^2) on the domain.
GridFn trunc_normal_density(const Domain& d, double mu, double sigma);
//! Density proportional to exp((4+theta)x - (26.5+theta)x^2 + 47x^3 - 25x^4).
GridFn bimodal_density(const Domain& d, double theta);

struct TestCase
{
  SubpopSample sample;
  GridFn truth;
};

struct ScenarioData
{
  Domain domain;
  std::vector<SubpopSample> train;
  std::vector<GridFn> train_truth;
  std::vector<TestCase> test;
};

//! Deterministic in spec. Each subpopulation draws its density and its
//! observations from separate substreams of the master seed, so changing the
//! test size keeps the test densities fixed.
ScenarioData generate(const ScenarioSpec& spec);

using Rng = std::mt19937_64;

//! Generator for substream (a, b, c) of a master seed.
Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

//! Inverse-CDF draws; the CDF is the cumulative trapezoid of p, linear
//! inside each cell.
std::vector<double> sample_from_density(const GridFn& p, std::size_t n, Rng& rng);
std::vector<double> sample_from_density(const GridFn& p, std::size_t n, std::uint64_t seed);

//! Standardized t with 3 degrees of freedom (unit variance), built as a
//! normal over sqrt(chi2_3 / 3).
double draw_t3_standardized(Rng& rng);

//! Synthetic annual-maximum records with heavy right tails: log Y follows a
//! station-specific two-component normal mixture.
struct Station
{
  std::string id;
  std::vector<double> y;
  double weight;
  double mean1, sd1, mean2, sd2;

  //! Exact quantile of Y.
  double quantile(double q) const;
  //! Fresh draws from the same station law.
  std::vector<double> draw(std::size_t n, Rng& rng) const;
};

struct StationSpec
{
  std::size_t n_train = 50;
  std::size_t train_years = 50;
  std::size_t n_test = 50;
  std::size_t test_years = 10;
  std::uint64_t seed = 0;
};

struct StationData
{
  std::vector<Station> train;
  std::vector<Station> test;
};

StationData generate_stations(const StationSpec& spec);

} // namespace repden
