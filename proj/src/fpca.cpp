#include "repden/fpca.hpp"

#include "repden/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace repden {

GridFn EigenSystem::eigfn(std::size_t k) const
{
  if (k >= components())
    throw std::out_of_range("eigenfunction index out of range");
  return GridFn(domain(), eigfns.col(static_cast<Eigen::Index>(k)));
}

void align_signs(Eigen::MatrixXd& eigfns)
{
  for (Eigen::Index k = 0; k < eigfns.cols(); ++k) {
    Eigen::Index arg = 0;
    eigfns.col(k).cwiseAbs().maxCoeff(&arg);
    if (eigfns(arg, k) < 0.0)
      eigfns.col(k) *= -1.0;
  }
}

namespace {

struct Spectrum
{
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd vectors; // n_grid x r, W-orthonormal
};

// n <= n_grid: eigen-solve the n x n weighted Gram matrix and map its
// eigenvectors back to the grid, phi = C^T u / sqrt(n lambda).
Spectrum solve_dual(const Eigen::MatrixXd& f, const Eigen::VectorXd& w)
{
  const auto n = static_cast<double>(f.rows());
  const Eigen::MatrixXd gram = kernels::omp::centered_gram(f, w) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("fpca: eigendecomposition failed");
  const Eigen::MatrixXd c = f.rowwise() - f.colwise().mean();
  const auto r = gram.rows();
  Spectrum out{es.eigenvalues().reverse(), Eigen::MatrixXd(f.cols(), r)};
  for (Eigen::Index k = 0; k < r; ++k) {
    const double lambda = out.values[k];
    const Eigen::VectorXd u = es.eigenvectors().col(r - 1 - k);
    if (lambda > 0.0)
      out.vectors.col(k) = c.transpose() * u / std::sqrt(n * lambda);
    else
      out.vectors.col(k).setZero();
  }
  return out;
}

// n > n_grid: eigen-solve W^1/2 G W^1/2 directly.
Spectrum solve_primal(const Eigen::MatrixXd& f, const Eigen::VectorXd& w)
{
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd g = kernels::omp::grid_covariance(f);
  const Eigen::MatrixXd op = sw.asDiagonal() * g * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("fpca: eigendecomposition failed");
  const auto r = op.rows();
  Spectrum out{es.eigenvalues().reverse(), Eigen::MatrixXd(f.cols(), r)};
  for (Eigen::Index k = 0; k < r; ++k)
    out.vectors.col(k) = es.eigenvectors().col(r - 1 - k).cwiseQuotient(sw);
  return out;
}

} // namespace

EigenSystem fit_fpca(std::span<const LogDensityFn> trajs, std::size_t k_max)
{
  const auto n = trajs.size();
  if (n < 2)
    throw std::invalid_argument("fit_fpca: need at least 2 trajectories");
  if (k_max < 1 || k_max > n - 1)
    throw std::invalid_argument("fit_fpca: k_max must lie in [1, n-1]");
  const Domain domain = trajs.front().domain();
  const auto m = static_cast<Eigen::Index>(domain.size());
  Eigen::MatrixXd f(static_cast<Eigen::Index>(n), m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(trajs[i].domain() == domain))
      throw std::invalid_argument("fit_fpca: trajectories on different domains");
    f.row(static_cast<Eigen::Index>(i)) = trajs[i].values().transpose();
  }
  const Eigen::VectorXd w = domain.weights();
  const Eigen::VectorXd mean = f.colwise().mean().transpose();

  const Spectrum spec = f.rows() <= m ? solve_dual(f, w) : solve_primal(f, w);

  // Relative cut for rank noise, plus an absolute cut scaled by the size of
  // the data so that identical trajectories yield no components.
  const double scale = (f.array().square().matrix() * w).sum() / static_cast<double>(n);
  const double lead = spec.values.size() > 0 ? spec.values[0] : 0.0;
  const double cut = std::max(kNullEigenRatio * lead, 1e-24 * std::max(scale, 1.0));
  Eigen::Index keep = 0;
  while (keep < spec.values.size() && keep < static_cast<Eigen::Index>(k_max) &&
         spec.values[keep] > cut)
    ++keep;

  Eigen::MatrixXd phi = spec.vectors.leftCols(keep);
  align_signs(phi);
  const Eigen::MatrixXd c = f.rowwise() - mean.transpose();
  Eigen::MatrixXd scores = c * w.asDiagonal() * phi;

  return EigenSystem{LogDensityFn(GridFn(domain, mean)), spec.values.head(keep),
                     std::move(phi), std::move(scores)};
}

std::size_t components_for_fve(const EigenSystem& sys, double fve)
{
  if (!(fve > 0.0 && fve <= 1.0))
    throw std::invalid_argument("fraction of variance explained must lie in (0, 1]");
  const double total = sys.eigvals.sum();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < sys.eigvals.size(); ++k) {
    acc += sys.eigvals[k];
    if (acc >= fve * total)
      return static_cast<std::size_t>(k + 1);
  }
  return sys.components();
}

Eigen::VectorXd project_scores(const EigenSystem& sys, const LogDensityFn& f,
                               std::size_t k)
{
  if (k > sys.components())
    throw std::out_of_range("project_scores: k exceeds retained components");
  if (!(f.domain() == sys.domain()))
    throw std::invalid_argument("project_scores: domain mismatch");
  const Eigen::VectorXd w = sys.domain().weights();
  const Eigen::VectorXd d = (f.values() - sys.mu.values()).cwiseProduct(w);
  return sys.eigfns.leftCols(static_cast<Eigen::Index>(k)).transpose() * d;
}

} // namespace repden
