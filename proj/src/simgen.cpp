#include "repden/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace repden {

std::string_view to_string(ScenarioKind kind)
{
  switch (kind) {
    case ScenarioKind::trunc_normal:
      return "trunc_normal";
    case ScenarioKind::bimodal:
      return "bimodal";
    case ScenarioKind::gauss_mixture:
      return "gauss_mixture";
    case ScenarioKind::rand_intercept_normal:
      return "rand_intercept_normal";
    case ScenarioKind::rand_intercept_t3:
      return "rand_intercept_t3";
  }
  return "?";
}

ScenarioKind parse_scenario(std::string_view s)
{
  for (auto k : {ScenarioKind::trunc_normal, ScenarioKind::bimodal, ScenarioKind::gauss_mixture,
                 ScenarioKind::rand_intercept_normal, ScenarioKind::rand_intercept_t3})
    if (to_string(k) == s)
      return k;
  throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

ScenarioSpec ScenarioSpec::defaults(ScenarioKind kind)
{
  ScenarioSpec s;
  s.kind = kind;
  switch (kind) {
    case ScenarioKind::trunc_normal:
    case ScenarioKind::bimodal:
      break;
    case ScenarioKind::gauss_mixture:
      s.train_size = {50, 50};
      s.test_size = {25, 25};
      break;
    case ScenarioKind::rand_intercept_normal:
    case ScenarioKind::rand_intercept_t3:
      s.n_train = 100;
      s.train_size = {75, 100};
      s.test_size = {10, 20};
      break;
  }
  return s;
}

Domain scenario_domain(ScenarioKind kind, std::size_t n_grid)
{
  switch (kind) {
    case ScenarioKind::trunc_normal:
    case ScenarioKind::gauss_mixture:
      return Domain(-3.0, 3.0, n_grid);
    case ScenarioKind::bimodal:
      return Domain(0.0, 1.0, n_grid);
    case ScenarioKind::rand_intercept_normal:
    case ScenarioKind::rand_intercept_t3:
      return Domain(-10.0, 10.0, n_grid);
  }
  throw std::invalid_argument("unknown scenario");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double uniform(Rng& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t draw_size(Rng& rng, SizeRange r)
{
  if (r.lo < 1 || r.hi < r.lo)
    throw std::invalid_argument("invalid sample size range");
  return std::uniform_int_distribution<std::size_t>(r.lo, r.hi)(rng);
}

GridFn normalized(const Domain& d, const Eigen::VectorXd& log_kernel)
{
  Eigen::VectorXd e = (log_kernel.array() - log_kernel.maxCoeff()).exp();
  return GridFn(d, e / d.weights().dot(e));
}

} // namespace

GridFn trunc_normal_density(const Domain& d, double mu, double sigma)
{
  const Eigen::VectorXd t = d.points();
  return normalized(d, -(t.array() - mu).square() / (2.0 * sigma * sigma));
}

GridFn bimodal_density(const Domain& d, double theta)
{
  const Eigen::ArrayXd x = d.points().array();
  return normalized(d, (4.0 + theta) * x - (26.5 + theta) * x.square() + 47.0 * x.cube() -
                         25.0 * x.square().square());
}

namespace {

// A random density from the scenario law, plus the random intercept when the
// scenario has one (observations are then drawn from the model directly).
struct Draw
{
  GridFn truth;
  double intercept = 0.0;
};

Draw draw_density(ScenarioKind kind, const Domain& d, Rng& rng)
{
  const Eigen::VectorXd t = d.points();
  Eigen::VectorXd lk(t.size());
  switch (kind) {
    case ScenarioKind::trunc_normal: {
      const double mu = uniform(rng, -2.0, 2.0);
      const double sigma = uniform(rng, 2.0, 4.0);
      return {trunc_normal_density(d, mu, sigma)};
    }
    case ScenarioKind::bimodal:
      return {bimodal_density(d, uniform(rng, 0.0, 10.0))};
    case ScenarioKind::gauss_mixture: {
      std::gamma_distribution<double> gamma(1.0 / 3.0, 1.0);
      double w[3], mu[3], sd[3];
      double total = 0.0;
      for (int l = 0; l < 3; ++l) {
        w[l] = gamma(rng);
        total += w[l];
      }
      for (int l = 0; l < 3; ++l) {
        w[l] /= total;
        mu[l] = uniform(rng, -5.0, 5.0);
        sd[l] = uniform(rng, 0.5, 5.0);
      }
      // Mixture of unscaled normal kernels, accumulated in log space so that
      // far-away components do not underflow the whole density.
      for (Eigen::Index j = 0; j < t.size(); ++j) {
        double terms[3];
        double top = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < 3; ++l) {
          const double u = (t[j] - mu[l]) / sd[l];
          terms[l] = std::log(std::max(w[l], 1e-300)) - 0.5 * u * u;
          top = std::max(top, terms[l]);
        }
        double s = 0.0;
        for (double v : terms)
          s += std::exp(v - top);
        lk[j] = top + std::log(s);
      }
      return {normalized(d, lk)};
    }
    case ScenarioKind::rand_intercept_normal: {
      const double a = std::normal_distribution<double>(0.0, 1.0)(rng);
      lk = -0.5 * (t.array() - a).square();
      return {normalized(d, lk), a};
    }
    case ScenarioKind::rand_intercept_t3: {
      const double a = std::normal_distribution<double>(0.0, 1.0)(rng);
      // density of t3 / sqrt(3) shifted by a
      lk = -2.0 * (1.0 + (t.array() - a).square()).log();
      return {normalized(d, lk), a};
    }
  }
  throw std::invalid_argument("unknown scenario");
}

std::vector<double> draw_obs(ScenarioKind kind, const Draw& draw, const Domain& d,
                             std::size_t n, Rng& rng)
{
  const bool normal = kind == ScenarioKind::rand_intercept_normal;
  if (!normal && kind != ScenarioKind::rand_intercept_t3)
    return sample_from_density(draw.truth, n, rng);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double x = draw.intercept + (normal ? z(rng) : draw_t3_standardized(rng));
    if (d.contains(x))
      out.push_back(x);
  }
  return out;
}

enum Role : std::uint64_t
{
  kTrain = 1,
  kTest = 2,
  kDensity = 0,
  kObs = 1,
  kSize = 2
};

} // namespace

Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return Rng(h);
}

double draw_t3_standardized(Rng& rng)
{
  std::normal_distribution<double> z(0.0, 1.0);
  const double num = z(rng);
  double chi2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double g = z(rng);
    chi2 += g * g;
  }
  return num / std::sqrt(chi2 / 3.0) / std::sqrt(3.0);
}

std::vector<double> sample_from_density(const GridFn& p, std::size_t n, Rng& rng)
{
  std::vector<double> out;
  if (n == 0)
    return out;
  const Eigen::VectorXd c = cumulative_integral(p);
  const double total = c[c.size() - 1];
  const Domain& d = p.domain();
  out.reserve(n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = u01(rng) * total;
    auto it = std::upper_bound(c.data(), c.data() + c.size(), u);
    auto j = static_cast<std::size_t>(it - c.data());
    j = std::clamp<std::size_t>(j, 1, static_cast<std::size_t>(c.size() - 1));
    const double c0 = c[static_cast<Eigen::Index>(j - 1)];
    const double c1 = c[static_cast<Eigen::Index>(j)];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    out.push_back(std::clamp(d.point(j - 1) + frac * d.step(), d.lo(), d.hi()));
  }
  return out;
}

std::vector<double> sample_from_density(const GridFn& p, std::size_t n, std::uint64_t seed)
{
  Rng rng = substream(seed, 0);
  return sample_from_density(p, n, rng);
}

ScenarioData generate(const ScenarioSpec& spec)
{
  if (spec.n_train < 1 || spec.n_test < 1)
    throw std::invalid_argument("scenario needs at least one training and one test sample");
  const Domain d = scenario_domain(spec.kind, spec.n_grid);
  ScenarioData out{d, {}, {}, {}};
  out.train.reserve(spec.n_train);
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    Rng dens = substream(spec.seed, kTrain, i, kDensity);
    Rng size = substream(spec.seed, kTrain, i, kSize);
    Rng obs = substream(spec.seed, kTrain, i, kObs);
    Draw draw = draw_density(spec.kind, d, dens);
    const std::size_t n = draw_size(size, spec.train_size);
    out.train.emplace_back("train_" + std::to_string(i), draw_obs(spec.kind, draw, d, n, obs));
    out.train_truth.push_back(std::move(draw.truth));
  }
  for (std::size_t i = 0; i < spec.n_test; ++i) {
    Rng dens = substream(spec.seed, kTest, i, kDensity);
    Rng size = substream(spec.seed, kTest, i, kSize);
    Rng obs = substream(spec.seed, kTest, i, kObs);
    Draw draw = draw_density(spec.kind, d, dens);
    const std::size_t n = draw_size(size, spec.test_size);
    out.test.push_back(TestCase{
      SubpopSample("test_" + std::to_string(i), draw_obs(spec.kind, draw, d, n, obs)),
      std::move(draw.truth)});
  }
  return out;
}

namespace {

double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

Station draw_station(std::string id, Rng& rng)
{
  Station s;
  s.id = std::move(id);
  s.mean1 = uniform(rng, 2.9, 3.5);
  s.sd1 = uniform(rng, 0.2, 0.3);
  s.weight = uniform(rng, 0.75, 0.9);
  s.mean2 = s.mean1 + uniform(rng, 0.4, 0.8);
  s.sd2 = s.sd1 * uniform(rng, 1.0, 1.5);
  return s;
}

} // namespace

double Station::quantile(double q) const
{
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("quantile level must lie in (0, 1)");
  auto cdf = [&](double x) {
    return weight * normal_cdf((x - mean1) / sd1) + (1.0 - weight) * normal_cdf((x - mean2) / sd2);
  };
  double lo = std::min(mean1, mean2) - 10.0 * std::max(sd1, sd2);
  double hi = std::max(mean1, mean2) + 10.0 * std::max(sd1, sd2);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < q ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

std::vector<double> Station::draw(std::size_t n, Rng& rng) const
{
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& y : out) {
    const bool first = u01(rng) < weight;
    y = std::exp(first ? mean1 + sd1 * z(rng) : mean2 + sd2 * z(rng));
  }
  return out;
}

StationData generate_stations(const StationSpec& spec)
{
  StationData out;
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    Rng law = substream(spec.seed, kTrain, i, kDensity);
    Rng obs = substream(spec.seed, kTrain, i, kObs);
    Station s = draw_station("station_" + std::to_string(i), law);
    s.y = s.draw(spec.train_years, obs);
    out.train.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < spec.n_test; ++i) {
    Rng law = substream(spec.seed, kTest, i, kDensity);
    Rng obs = substream(spec.seed, kTest, i, kObs);
    Station s = draw_station("site_" + std::to_string(i), law);
    s.y = s.draw(spec.test_years, obs);
    out.test.push_back(std::move(s));
  }
  return out;
}

} // namespace repden
