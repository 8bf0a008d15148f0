#include "repden/kernels.hpp"

#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace repden::kernels {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

inline double kernel_sum_at(std::span<const double> obs, double h, double t,
                            double lo, double hi)
{
  double s = 0.0;
  for (double x : obs) {
    const double u = (t - x) / h;
    s += std::exp(-0.5 * u * u);
  }
  const double mass = normal_cdf((t - lo) / h) - normal_cdf((t - hi) / h);
  return s * kInvSqrt2Pi / (h * mass);
}

inline double centered_dot(const Eigen::MatrixXd& c, const Eigen::VectorXd& w,
                           Eigen::Index i, Eigen::Index l)
{
  double s = 0.0;
  for (Eigen::Index t = 0; t < c.cols(); ++t)
    s += w[t] * c(i, t) * c(l, t);
  return s;
}

Eigen::MatrixXd center_rows(const Eigen::MatrixXd& rows)
{
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  return rows.rowwise() - mean;
}

} // namespace

namespace serial {

Eigen::VectorXd weighted_kernel_sum(std::span<const double> obs, double h,
                                    const Eigen::VectorXd& grid, double lo,
                                    double hi)
{
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    out[j] = kernel_sum_at(obs, h, grid[j], lo, hi);
  return out;
}

Eigen::MatrixXd centered_gram(const Eigen::MatrixXd& rows,
                              const Eigen::VectorXd& weights)
{
  const Eigen::MatrixXd c = center_rows(rows);
  const auto n = c.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = 0; l <= i; ++l)
      g(i, l) = g(l, i) = centered_dot(c, weights, i, l);
  return g;
}

Eigen::MatrixXd grid_covariance(const Eigen::MatrixXd& rows)
{
  const Eigen::MatrixXd c = center_rows(rows);
  const auto m = c.cols();
  const double inv_n = 1.0 / static_cast<double>(c.rows());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index s = 0; s < m; ++s)
    for (Eigen::Index t = 0; t <= s; ++t)
      g(s, t) = g(t, s) = inv_n * c.col(s).dot(c.col(t));
  return g;
}

} // namespace serial

namespace omp {

Eigen::VectorXd weighted_kernel_sum(std::span<const double> obs, double h,
                                    const Eigen::VectorXd& grid, double lo,
                                    double hi)
{
  Eigen::VectorXd out(grid.size());
  const Eigen::Index m = grid.size();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < m; ++j)
    out[j] = kernel_sum_at(obs, h, grid[j], lo, hi);
  return out;
}

Eigen::MatrixXd centered_gram(const Eigen::MatrixXd& rows,
                              const Eigen::VectorXd& weights)
{
  const Eigen::MatrixXd c = center_rows(rows);
  const Eigen::Index n = c.rows();
  Eigen::MatrixXd g(n, n);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = 0; l <= i; ++l)
      g(i, l) = g(l, i) = centered_dot(c, weights, i, l);
  return g;
}

Eigen::MatrixXd grid_covariance(const Eigen::MatrixXd& rows)
{
  const Eigen::MatrixXd c = center_rows(rows);
  const Eigen::Index m = c.cols();
  const double inv_n = 1.0 / static_cast<double>(c.rows());
  Eigen::MatrixXd g(m, m);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index s = 0; s < m; ++s)
    for (Eigen::Index t = 0; t <= s; ++t)
      g(s, t) = g(t, s) = inv_n * c.col(s).dot(c.col(t));
  return g;
}

} // namespace omp

int max_threads()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n)
{
#ifdef _OPENMP
  if (n > 0)
    omp_set_num_threads(n);
#else
  (void)n;
#endif
}

} // namespace repden::kernels
