#include "repden/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace repden {

Domain::Domain(double lo, double hi, std::size_t n_grid)
  : lo_(lo)
  , hi_(hi)
  , n_(n_grid)
{
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
    throw std::invalid_argument("domain requires finite lo < hi");
  if (n_grid < kMinGrid)
    throw std::invalid_argument("domain requires at least " +
                                std::to_string(kMinGrid) + " grid points");
}

double Domain::point(std::size_t j) const
{
  // exact at both endpoints
  if (j + 1 == n_)
    return hi_;
  return lo_ + static_cast<double>(j) * step();
}

Eigen::VectorXd Domain::points() const
{
  Eigen::VectorXd t(n_);
  for (std::size_t j = 0; j < n_; ++j)
    t[static_cast<Eigen::Index>(j)] = point(j);
  return t;
}

Eigen::VectorXd Domain::weights() const
{
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_, step());
  w[0] *= 0.5;
  w[static_cast<Eigen::Index>(n_ - 1)] *= 0.5;
  return w;
}

GridFn::GridFn(Domain domain, Eigen::VectorXd values)
  : domain_(domain)
  , values_(std::move(values))
{
  if (static_cast<std::size_t>(values_.size()) != domain_.size())
    throw std::invalid_argument("grid function length does not match domain");
  if (!values_.allFinite())
    throw std::invalid_argument("grid function has non-finite values");
}

GridFn GridFn::constant(const Domain& domain, double value)
{
  return GridFn(domain, Eigen::VectorXd::Constant(domain.size(), value));
}

double GridFn::at(double t) const
{
  return interpolate(domain_, values_, t);
}

double interpolate(const Domain& domain,
                   const Eigen::Ref<const Eigen::VectorXd>& values,
                   double t)
{
  const auto n = static_cast<Eigen::Index>(domain.size());
  if (t <= domain.lo())
    return values[0];
  if (t >= domain.hi())
    return values[n - 1];
  const double u = (t - domain.lo()) / domain.step();
  auto j = static_cast<Eigen::Index>(std::floor(u));
  j = std::min(j, n - 2);
  const double frac = u - static_cast<double>(j);
  return (1.0 - frac) * values[j] + frac * values[j + 1];
}

double integrate(const GridFn& f)
{
  const auto& v = f.values();
  const auto n = v.size();
  return f.domain().step() * (v.sum() - 0.5 * (v[0] + v[n - 1]));
}

double inner(const GridFn& f, const GridFn& g)
{
  if (!(f.domain() == g.domain()))
    throw std::invalid_argument("inner product of functions on different domains");
  return f.domain().weights().dot(f.values().cwiseProduct(g.values()));
}

Eigen::VectorXd cumulative_integral(const GridFn& p)
{
  const auto& v = p.values();
  const double half = 0.5 * p.domain().step();
  Eigen::VectorXd c(v.size());
  c[0] = 0.0;
  for (Eigen::Index j = 1; j < v.size(); ++j)
    c[j] = c[j - 1] + half * (v[j - 1] + v[j]);
  return c;
}

void require_density(const GridFn& p, double tol)
{
  if (p.values().minCoeff() < 0.0)
    throw std::invalid_argument("density has negative values");
  const double mass = integrate(p);
  if (std::abs(mass - 1.0) > tol)
    throw std::invalid_argument("density is not normalized (mass " +
                                std::to_string(mass) + ")");
}

double quantile_on_grid(std::span<const double> t, std::span<const double> cdf,
                        double q)
{
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("quantile level must lie in (0, 1)");
  if (t.size() != cdf.size() || t.size() < 2)
    throw std::invalid_argument("quantile grid and cdf sizes differ");
  auto it = std::lower_bound(cdf.begin(), cdf.end(), q);
  if (it == cdf.end())
    return t.back();
  const auto j = static_cast<std::size_t>(it - cdf.begin());
  if (j == 0)
    return t.front();
  const double c0 = cdf[j - 1];
  const double c1 = cdf[j];
  const double frac = c1 > c0 ? (q - c0) / (c1 - c0) : 1.0;
  return t[j - 1] + frac * (t[j] - t[j - 1]);
}

double quantile_of_density(const GridFn& p, double q)
{
  require_density(p);
  const Eigen::VectorXd c = cumulative_integral(p);
  const Eigen::VectorXd t = p.domain().points();
  return quantile_on_grid({t.data(), static_cast<std::size_t>(t.size())},
                          {c.data(), static_cast<std::size_t>(c.size())}, q);
}

} // namespace repden
