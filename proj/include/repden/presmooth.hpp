#pragma once

#include "repden/grid.hpp"

#include <span>
#include <string>
#include <vector>

namespace repden {

//! Observations of one subpopulation, sorted ascending.
struct SubpopSample
{
  std::string id;
  std::vector<double> obs;

  SubpopSample() = default;
  SubpopSample(std::string id_, std::vector<double> obs_);

  std::size_t size() const { return obs.size(); }
};

//! Throws std::invalid_argument if the sample is empty or leaves the domain.
void require_inside(const SubpopSample& sample, const Domain& domain);

struct KdeConfig
{
  double bandwidth;
};

//! Pre-smoothed densities are floored here before any log transform.
inline constexpr double kDensityFloor = 1e-12;

//! Gaussian KDE divided by the kernel mass falling inside the domain, then
//! renormalized to integrate to one on the grid.
GridFn weighted_kde(const SubpopSample& sample, const KdeConfig& cfg,
                    const Domain& domain);
GridFn weighted_kde(std::span<const double> obs, double bandwidth,
                    const Domain& domain);

//! 0.9 min(sd, IQR/1.34) N^(-1/5). Falls back to sd when the IQR vanishes.
double silverman_bandwidth(std::span<const double> obs);
double silverman_bandwidth(const SubpopSample& sample);

//! Median of the per-sample Silverman bandwidths, skipping samples whose
//! bandwidth is undefined (size 1 or zero spread).
double median_bandwidth(std::span<const SubpopSample> samples);

} // namespace repden
