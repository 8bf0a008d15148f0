#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// kernels::serial and an OpenMP version in kernels::omp with identical
// results; the library calls the OpenMP versions, tests compare the two and
// bench/ times them.

#include <Eigen/Core>

#include <span>

namespace repden::kernels {

namespace serial {

//! Boundary-weighted Gaussian kernel sum
//!   s(t) = sum_j phi((t - x_j)/h) / h * w(t, h)
//! at each grid point t, with w(t, h) the inverse kernel mass inside [lo, hi].
Eigen::VectorXd weighted_kernel_sum(std::span<const double> obs, double h,
                                    const Eigen::VectorXd& grid, double lo,
                                    double hi);

//! Weighted Gram matrix of centred rows: G(i, l) = sum_t w_t c_i(t) c_l(t),
//! where c_i = rows(i) - mean row.
Eigen::MatrixXd centered_gram(const Eigen::MatrixXd& rows,
                              const Eigen::VectorXd& weights);

//! Covariance operator on the grid: M(s, t) = n^-1 sum_i c_i(s) c_i(t).
Eigen::MatrixXd grid_covariance(const Eigen::MatrixXd& rows);

} // namespace serial

namespace omp {

Eigen::VectorXd weighted_kernel_sum(std::span<const double> obs, double h,
                                    const Eigen::VectorXd& grid, double lo,
                                    double hi);
Eigen::MatrixXd centered_gram(const Eigen::MatrixXd& rows,
                              const Eigen::VectorXd& weights);
Eigen::MatrixXd grid_covariance(const Eigen::MatrixXd& rows);

} // namespace omp

//! Number of threads the OpenMP kernels will use.
int max_threads();
void set_threads(int n);

} // namespace repden::kernels
