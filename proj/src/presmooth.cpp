#include "repden/presmooth.hpp"

#include "repden/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace repden {

SubpopSample::SubpopSample(std::string id_, std::vector<double> obs_)
  : id(std::move(id_))
  , obs(std::move(obs_))
{
  std::sort(obs.begin(), obs.end());
}

void require_inside(const SubpopSample& sample, const Domain& domain)
{
  if (sample.obs.empty())
    throw std::invalid_argument("subpopulation '" + sample.id + "' is empty");
  for (double x : sample.obs)
    if (!std::isfinite(x) || !domain.contains(x))
      throw std::invalid_argument("subpopulation '" + sample.id +
                                  "' has an observation outside the domain");
}

GridFn weighted_kde(std::span<const double> obs, double bandwidth,
                    const Domain& domain)
{
  if (obs.empty())
    throw std::invalid_argument("weighted_kde: empty sample");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw std::invalid_argument("weighted_kde: bandwidth must be positive");
  Eigen::VectorXd v = kernels::omp::weighted_kernel_sum(
    obs, bandwidth, domain.points(), domain.lo(), domain.hi());
  v = v.cwiseMax(kDensityFloor);
  const double mass = integrate(GridFn(domain, v));
  return GridFn(domain, v / mass);
}

GridFn weighted_kde(const SubpopSample& sample, const KdeConfig& cfg,
                    const Domain& domain)
{
  return weighted_kde(sample.obs, cfg.bandwidth, domain);
}

namespace {

// Type 7 sample quantile (linear interpolation between order statistics).
double sorted_quantile(const std::vector<double>& x, double q)
{
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

} // namespace

double silverman_bandwidth(std::span<const double> obs)
{
  const auto n = obs.size();
  if (n < 2)
    throw std::invalid_argument("silverman_bandwidth: need at least 2 observations");
  const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : obs)
    ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0))
    throw std::invalid_argument("silverman_bandwidth: sample has zero spread");
  std::vector<double> sorted(obs.begin(), obs.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double silverman_bandwidth(const SubpopSample& sample)
{
  return silverman_bandwidth(sample.obs);
}

double median_bandwidth(std::span<const SubpopSample> samples)
{
  std::vector<double> h;
  h.reserve(samples.size());
  for (const auto& s : samples) {
    try {
      h.push_back(silverman_bandwidth(s));
    } catch (const std::invalid_argument&) {
    }
  }
  if (h.empty())
    throw std::invalid_argument("median_bandwidth: no sample has a valid bandwidth");
  std::sort(h.begin(), h.end());
  const auto m = h.size();
  return m % 2 == 1 ? h[m / 2] : 0.5 * (h[m / 2 - 1] + h[m / 2]);
}

} // namespace repden
