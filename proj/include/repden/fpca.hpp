#pragma once

#include "repden/grid.hpp"
#include "repden/logmap.hpp"

#include <span>

namespace repden {

//! Functional principal components of a set of centred log-densities.
//! Eigenfunctions are stored column-wise and are orthonormal under the
//! trapezoid inner product of the domain.
struct EigenSystem
{
  LogDensityFn mu;
  Eigen::VectorXd eigvals; // nonincreasing, all > 0
  Eigen::MatrixXd eigfns;  // n_grid x K
  Eigen::MatrixXd scores;  // n_train x K

  const Domain& domain() const { return mu.domain(); }
  std::size_t components() const { return static_cast<std::size_t>(eigvals.size()); }
  GridFn eigfn(std::size_t k) const;
};

//! Components whose eigenvalue falls below this fraction of the leading
//! eigenvalue are treated as numerically null.
inline constexpr double kNullEigenRatio = 1e-12;

//! Pointwise mean, covariance with divisor n, and eigenpairs of the
//! quadrature-weighted covariance operator. Keeps min(k_max, rank) components.
EigenSystem fit_fpca(std::span<const LogDensityFn> trajs, std::size_t k_max);

//! Inner products of f - mu against the first k eigenfunctions.
Eigen::VectorXd project_scores(const EigenSystem& sys, const LogDensityFn& f,
                               std::size_t k);

//! Smallest K whose leading eigenvalues explain at least the fraction fve of
//! the total retained variance.
std::size_t components_for_fve(const EigenSystem& sys, double fve);

//! Flips each column so its largest-magnitude entry is positive.
void align_signs(Eigen::MatrixXd& eigfns);

} // namespace repden
