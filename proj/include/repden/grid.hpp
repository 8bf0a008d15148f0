#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>

namespace repden {

//! Compact interval [lo, hi] discretized by n uniformly spaced points,
//! endpoints included.
class Domain
{
public:
  static constexpr std::size_t kMinGrid = 16;
  static constexpr std::size_t kDefaultGrid = 512;

  Domain(double lo, double hi, std::size_t n_grid = kDefaultGrid);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t size() const { return n_; }
  double length() const { return hi_ - lo_; }
  double step() const { return (hi_ - lo_) / static_cast<double>(n_ - 1); }
  double point(std::size_t j) const;
  bool contains(double t) const { return t >= lo_ && t <= hi_; }

  Eigen::VectorXd points() const;
  //! Trapezoid quadrature weights; sum to length().
  Eigen::VectorXd weights() const;

  friend bool operator==(const Domain&, const Domain&) = default;

private:
  double lo_;
  double hi_;
  std::size_t n_;
};

//! A real function sampled on a Domain grid.
class GridFn
{
public:
  GridFn(Domain domain, Eigen::VectorXd values);
  static GridFn constant(const Domain& domain, double value);
  template <typename F>
  static GridFn from(const Domain& domain, F&& f)
  {
    Eigen::VectorXd v(domain.size());
    for (std::size_t j = 0; j < domain.size(); ++j)
      v[static_cast<Eigen::Index>(j)] = f(domain.point(j));
    return GridFn(domain, std::move(v));
  }

  const Domain& domain() const { return domain_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](std::size_t j) const
  {
    return values_[static_cast<Eigen::Index>(j)];
  }
  std::size_t size() const { return domain_.size(); }

  //! Linear interpolation; t is clamped to the domain.
  double at(double t) const;

private:
  Domain domain_;
  Eigen::VectorXd values_;
};

double integrate(const GridFn& f);
double inner(const GridFn& f, const GridFn& g);

//! Linear interpolation of grid values at t (clamped to the domain).
double interpolate(const Domain& domain,
                   const Eigen::Ref<const Eigen::VectorXd>& values,
                   double t);

//! Cumulative trapezoid integral; first entry 0, last entry integrate(p).
Eigen::VectorXd cumulative_integral(const GridFn& p);

//! Throws std::invalid_argument unless p is nonnegative and integrates to one
//! within tol.
void require_density(const GridFn& p, double tol = 1e-6);

//! Smallest t with CDF(t) >= q, the CDF being the cumulative trapezoid of p
//! linearly interpolated inside each cell.
double quantile_of_density(const GridFn& p, double q);

//! Quantile on an arbitrary increasing grid; shared by the log-scale wrapper.
double quantile_on_grid(std::span<const double> t, std::span<const double> cdf,
                        double q);

} // namespace repden
