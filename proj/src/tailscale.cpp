#include "repden/tailscale.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace repden {

double ScaledDensity::integrate() const
{
  double s = 0.0;
  for (std::size_t j = 1; j < y.size(); ++j)
    s += 0.5 * (y[j] - y[j - 1]) * (values[j] + values[j - 1]);
  return s;
}

double ScaledDensity::quantile(double q) const
{
  std::vector<double> c(y.size(), 0.0);
  for (std::size_t j = 1; j < y.size(); ++j)
    c[j] = c[j - 1] + 0.5 * (y[j] - y[j - 1]) * (values[j] + values[j - 1]);
  return quantile_on_grid(y, c, q);
}

Domain log_domain(std::span<const SubpopSample> train_y, double delta, std::size_t n_grid,
                  bool* generalized)
{
  if (!(delta > 0.0))
    throw std::invalid_argument("log-scale padding delta must be positive");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : train_y)
    for (double v : s.obs) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("log scaling needs positive observations");
      lo = std::min(lo, std::log(v));
      hi = std::max(hi, std::log(v));
    }
  if (!std::isfinite(hi))
    throw std::invalid_argument("log scaling needs observations");
  const bool gen = lo < 0.0;
  if (generalized)
    *generalized = gen;
  return Domain(gen ? lo - delta : 0.0, hi + delta, n_grid);
}

std::vector<double> to_log_scale(const Domain& domain, std::span<const double> y,
                                 std::size_t* clamped)
{
  const double eps = 1e-9 * domain.length();
  std::size_t count = 0;
  std::vector<double> x;
  x.reserve(y.size());
  for (double v : y) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("log scaling needs positive observations");
    double lx = std::log(v);
    if (lx > domain.hi()) {
      lx = domain.hi() - eps;
      ++count;
    } else if (lx < domain.lo()) {
      lx = domain.lo() + eps;
      ++count;
    }
    x.push_back(lx);
  }
  if (clamped)
    *clamped = count;
  return x;
}

ScaledModel fit_scaled(std::span<const SubpopSample> train_y, double delta, std::size_t n_grid,
                       const TrainOptions& opts)
{
  bool gen = false;
  const Domain d = log_domain(train_y, delta, n_grid, &gen);
  if (gen)
    std::clog << "warning: some observations are below 1; log-scale domain lower end set to "
              << d.lo() << " instead of 0\n";
  std::vector<SubpopSample> xs;
  xs.reserve(train_y.size());
  for (const auto& s : train_y)
    xs.emplace_back(s.id, to_log_scale(d, s.obs));
  return ScaledModel{train_family(xs, d, opts), delta, gen};
}

ScaledDensity density_original_scale(const GridFn& px)
{
  const Domain& d = px.domain();
  ScaledDensity out;
  out.y.resize(d.size());
  out.values.resize(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) {
    out.y[j] = std::exp(d.point(j));
    out.values[j] = px[j] / out.y[j];
  }
  const double mass = out.integrate();
  for (auto& v : out.values)
    v /= mass;
  return out;
}

ScaledDensity density_original_scale(const ScaledModel& m, const NaturalParam& theta)
{
  return density_original_scale(density(m.inner, theta));
}

ScaledFit fit_original_scale(const ScaledModel& m, std::span<const double> y, Method method,
                             std::size_t k, std::size_t k_max,
                             const std::vector<ShrinkageStats>* table)
{
  ScaledFit out{};
  const std::vector<double> x = to_log_scale(m.inner.domain(), y, &out.clamped);
  if (out.clamped > 0)
    std::clog << "warning: " << out.clamped
              << " observation(s) clamped into the trained log-scale domain\n";
  if (k == 0) {
    const std::size_t km = k_max == 0 ? m.inner.components() : k_max;
    out.fit = select_k_aic(m.inner, x, method, km, table);
  } else {
    out.fit = fit(m.inner, x, method, k, table);
  }
  out.density = density_original_scale(m, out.fit.theta);
  return out;
}

PreservedCheck parameters_preserved(const ScaledModel& m, std::span<const double> y,
                                    Method method, std::size_t k)
{
  std::vector<double> x;
  x.reserve(y.size());
  for (double v : y)
    x.push_back(std::log(v));
  FitResult direct = fit(m.inner, x, method, k);
  ScaledFit wrapped = fit_original_scale(m, y, method, k);
  const double diff = (direct.theta.theta - wrapped.fit.theta.theta).lpNorm<Eigen::Infinity>();
  return PreservedCheck{std::move(direct.theta), std::move(wrapped.fit.theta), diff};
}

} // namespace repden
