#include "repden/metrics.hpp"
#include "repden/tailscale.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace repden;
using namespace repden::testing;

namespace {

std::vector<SubpopSample> lognormal_train(std::uint64_t seed, double mean = 2.0)
{
  std::mt19937_64 rng(seed);
  std::vector<SubpopSample> out;
  for (int i = 0; i < 20; ++i) {
    std::normal_distribution<double> z(mean + 0.3 * i / 20.0, 0.4);
    std::vector<double> y(100);
    for (double& v : y)
      v = std::exp(z(rng));
    out.emplace_back("s" + std::to_string(i), std::move(y));
  }
  return out;
}

const ScaledModel& trained()
{
  static const ScaledModel m = fit_scaled(lognormal_train(1), 0.5, 256, TrainOptions{std::nullopt, 5});
  return m;
}

double skewness(const std::vector<double>& v)
{
  double m = 0.0;
  for (double x : v)
    m += x / static_cast<double>(v.size());
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    m2 += (x - m) * (x - m) / static_cast<double>(v.size());
    m3 += (x - m) * (x - m) * (x - m) / static_cast<double>(v.size());
  }
  return m3 / std::pow(m2, 1.5);
}

} // namespace

TEST(FitScaled, LogScaleReducesSkewness)
{
  std::vector<double> y, x;
  for (const auto& s : lognormal_train(3))
    for (double v : s.obs) {
      y.push_back(v);
      x.push_back(std::log(v));
    }
  ASSERT_GE(y.size(), 2000u);
  EXPECT_LT(skewness(x), skewness(y));
}

TEST(FitScaled, DomainUsesPadding)
{
  const auto train = lognormal_train(1);
  double top = 0.0;
  for (const auto& s : train)
    top = std::max(top, std::log(s.obs.back()));
  const ScaledModel& m = trained();
  EXPECT_EQ(m.inner.domain().hi(), top + 0.5);
  EXPECT_EQ(m.inner.domain().lo(), 0.0);
  EXPECT_FALSE(m.generalized_lower);
  EXPECT_EQ(m.delta, 0.5);
}

TEST(FitScaled, GeneralizesLowerEndBelowOne)
{
  bool gen = false;
  const auto train = lognormal_train(2, 0.0);
  const Domain d = log_domain(train, 0.25, 64, &gen);
  double bottom = 0.0;
  for (const auto& s : train)
    bottom = std::min(bottom, std::log(s.obs.front()));
  EXPECT_TRUE(gen);
  EXPECT_EQ(d.lo(), bottom - 0.25);
}

TEST(FitScaled, DeterministicAndRejectsNonPositive)
{
  const ScaledModel a = fit_scaled(lognormal_train(4), 0.5, 128);
  const ScaledModel b = fit_scaled(lognormal_train(4), 0.5, 128);
  EXPECT_EQ(a.inner.domain(), b.inner.domain());
  EXPECT_EQ(a.inner.sys().eigfns, b.inner.sys().eigfns);
  auto bad = lognormal_train(4);
  bad[3].obs[0] = 0.0;
  EXPECT_THROW(fit_scaled(bad, 0.5, 128), std::invalid_argument);
  EXPECT_THROW(log_domain(lognormal_train(4), 0.0, 64), std::invalid_argument);
}

TEST(DensityOriginalScale, UniformMapsToReciprocal)
{
  const Domain d(0.0, 1.0, 512);
  const ScaledDensity py = density_original_scale(GridFn::constant(d, 1.0));
  EXPECT_NEAR(py.y.front(), 1.0, 1e-15);
  EXPECT_NEAR(py.y.back(), std::exp(1.0), 1e-14);
  for (std::size_t j = 0; j < py.y.size(); ++j)
    EXPECT_NEAR(py.values[j], 1.0 / py.y[j], 1e-4);
  EXPECT_NEAR(py.integrate(), 1.0, 1e-12);
}

TEST(ToLogScale, ClampsOutsideTheDomain)
{
  const Domain d(0.0, 2.0, 64);
  std::size_t clamped = 0;
  const auto x = to_log_scale(d, std::vector<double>{0.5, 2.0, 100.0}, &clamped);
  EXPECT_EQ(clamped, 2u);
  EXPECT_GT(x[0], 0.0);
  EXPECT_NEAR(x[1], std::log(2.0), 1e-15);
  EXPECT_LT(x[2], 2.0);
  EXPECT_GT(x[2], 2.0 - 1e-6);
  EXPECT_THROW(to_log_scale(d, std::vector<double>{-1.0}), std::invalid_argument);
}

TEST(ParametersPreserved, SamePathBothWays)
{
  const ScaledModel& m = trained();
  const auto y = lognormal_train(7)[5].obs;
  for (Method meth : {Method::mle, Method::map, Method::blup}) {
    const PreservedCheck c = parameters_preserved(m, std::span(y).first(15), meth, 2);
    EXPECT_LT(c.max_abs_diff, 1e-10);
    const ScaledDensity a = density_original_scale(m, c.direct);
    const ScaledDensity b = density_original_scale(m, c.wrapped);
    double kl = 0.0;
    for (std::size_t j = 1; j < a.y.size(); ++j) {
      auto term = [&](std::size_t i) { return a.values[i] * std::log(a.values[i] / b.values[i]); };
      kl += 0.5 * (a.y[j] - a.y[j - 1]) * (term(j) + term(j - 1));
    }
    EXPECT_NEAR(kl, 0.0, 1e-10);
    for (double q : {0.5, 0.9, 0.99})
      EXPECT_DOUBLE_EQ(a.quantile(q), b.quantile(q));
  }
}

TEST(TailscaleProperty, JacobianNormalization)
{
  const ScaledModel& m = trained();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 2.0);
  const auto k = static_cast<Eigen::Index>(m.inner.components());
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd th(k);
    for (Eigen::Index i = 0; i < k; ++i)
      th[i] = z(rng);
    EXPECT_NEAR(density_original_scale(m, NaturalParam(th)).integrate(), 1.0, 1e-6);
  }
}

TEST(TailscaleProperty, QuantilesAreEquivariant)
{
  const ScaledModel& m = trained();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto k = static_cast<Eigen::Index>(m.inner.components());
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd th(k);
    for (Eigen::Index i = 0; i < k; ++i)
      th[i] = z(rng);
    const GridFn px = density(m.inner, NaturalParam(th));
    const ScaledDensity py = density_original_scale(px);
    for (double q : {0.5, 0.8, 0.9, 0.95, 1.0 - 1.0 / 30.0}) {
      const double want = std::exp(quantile_of_density(px, q));
      const double got = py.quantile(q);
      const auto j = static_cast<std::size_t>(
        std::upper_bound(py.y.begin(), py.y.end(), want) - py.y.begin());
      const double cell = py.y[std::min(j, py.y.size() - 1)] - py.y[std::min(j, py.y.size() - 1) - 1];
      EXPECT_NEAR(got, want, 2.0 * cell) << "q = " << q;
      EXPECT_NEAR(return_level(px, 1.0 / (1.0 - q)), std::log(want), 1e-12);
    }
  }
}
