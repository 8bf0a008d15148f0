#include "repden/metrics.hpp"

#include "repden/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace repden {

EvalReport summarize(std::vector<std::pair<std::string, double>> values)
{
  EvalReport r;
  r.per_sample = std::move(values);
  const auto n = r.per_sample.size();
  if (n == 0)
    return r;
  std::vector<double> v;
  v.reserve(n);
  for (const auto& [id, x] : r.per_sample)
    v.push_back(x);
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  std::sort(v.begin(), v.end());
  r.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  if (n > 1) {
    double ss = 0.0;
    for (double x : v)
      ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return r;
}

double kl_div(const GridFn& p, const GridFn& q)
{
  if (!(p.domain() == q.domain()))
    throw std::invalid_argument("kl_div: densities on different grids");
  require_density(p);
  require_density(q);
  const Eigen::VectorXd w = p.domain().weights();
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double pj = p[j];
    if (pj < 1e-14)
      continue;
    if (!(q[j] > 0.0))
      throw std::domain_error("kl_div: infinite divergence (q vanishes where p > 0)");
    s += w[static_cast<Eigen::Index>(j)] * pj * std::log(pj / q[j]);
  }
  return s;
}

EvalReport mean_kl(std::span<const GridFn> truths, std::span<const GridFn> fits,
                   std::span<const std::string> ids)
{
  if (truths.size() != fits.size())
    throw std::invalid_argument("mean_kl: truths and fits differ in length");
  if (!ids.empty() && ids.size() != truths.size())
    throw std::invalid_argument("mean_kl: ids differ in length");
  std::vector<std::pair<std::string, double>> v(truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i)
    v[i] = {ids.empty() ? std::to_string(i) : ids[i], kl_div(truths[i], fits[i])};
  return summarize(std::move(v));
}

LooRefitError::LooRefitError(std::size_t index, const std::string& what)
  : std::runtime_error("leave-one-out refit " + std::to_string(index) + " failed: " + what)
  , index_(index)
{
}

double loo_cross_entropy(const RefitFn& fit_fn, std::span<const double> obs)
{
  const auto n = obs.size();
  if (n < 2)
    throw std::invalid_argument("loo_cross_entropy: need at least 2 observations");
  std::vector<double> logs(n);
  parallel_for(n, [&](std::size_t j) {
    std::vector<double> rest;
    rest.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      if (i != j)
        rest.push_back(obs[i]);
    double value = 0.0;
    try {
      value = fit_fn(rest).at(obs[j]);
    } catch (const std::exception& e) {
      throw LooRefitError(j, e.what());
    }
    logs[j] = value > 0.0 ? std::log(value) : -std::numeric_limits<double>::infinity();
  });
  double s = 0.0;
  for (double l : logs)
    s += l;
  return -s / static_cast<double>(n);
}

double return_level(const GridFn& p, double t_years)
{
  if (!(t_years > 1.0))
    throw std::invalid_argument("return period must exceed one year");
  return quantile_of_density(p, 1.0 - 1.0 / t_years);
}

} // namespace repden
