#pragma once

#include "repden/fpca.hpp"
#include "repden/grid.hpp"
#include "repden/presmooth.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace repden {

struct TrainingMeta
{
  std::vector<std::string> ids;
  std::vector<std::size_t> sizes;
  double bandwidth = 0.0;
};

//! The estimated exponential families P_K, K = 1..components(): base measure
//! exp(mu), sufficient statistics the leading eigenfunctions. Also keeps the
//! pre-smoothed training densities, which the BLUP within-subpopulation
//! covariance integrates against.
class FamilyModel
{
public:
  //! presmoothed holds one training density per row (n_train x n_grid). It may
  //! be empty, in which case shrinkage statistics are unavailable.
  FamilyModel(EigenSystem sys, Eigen::MatrixXd presmoothed, TrainingMeta meta = {});

  const EigenSystem& sys() const { return sys_; }
  const Domain& domain() const { return sys_.domain(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  std::size_t components() const { return sys_.components(); }
  std::size_t n_train() const { return static_cast<std::size_t>(sys_.scores.rows()); }
  const Eigen::MatrixXd& presmoothed() const { return presmoothed_; }
  const TrainingMeta& meta() const { return meta_; }

  //! First k eigenfunctions as grid columns.
  Eigen::Block<const Eigen::MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true> basis(std::size_t k) const;
  //! Grid minimum and maximum of each eigenfunction; the open box they span
  //! contains every attainable moment vector.
  const Eigen::VectorXd& stat_min() const { return stat_min_; }
  const Eigen::VectorXd& stat_max() const { return stat_max_; }

private:
  EigenSystem sys_;
  Eigen::MatrixXd presmoothed_;
  TrainingMeta meta_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd stat_min_;
  Eigen::VectorXd stat_max_;
};

struct NaturalParam
{
  Eigen::VectorXd theta;

  NaturalParam() = default;
  explicit NaturalParam(Eigen::VectorXd t);
  static NaturalParam zero(std::size_t k) { return NaturalParam(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k))); }
  std::size_t size() const { return static_cast<std::size_t>(theta.size()); }
};

struct MomentParam
{
  Eigen::VectorXd xi;
  std::size_t size() const { return static_cast<std::size_t>(xi.size()); }
};

struct TrainOptions
{
  std::optional<double> bandwidth; // unset: median Silverman bandwidth
  std::size_t k_max = 20;          // clipped to n_train - 1
};

//! Pre-smooths every training sample with the weighted KDE, maps the results
//! through the centred log transform and runs FPCA.
FamilyModel train_family(std::span<const SubpopSample> train, const Domain& domain,
                         const TrainOptions& opts = {});

//! mu + sum_k theta_k phi_k on the grid (unnormalized log-density).
Eigen::VectorXd log_kernel(const FamilyModel& model, const NaturalParam& theta);

double log_normalizer(const FamilyModel& model, const NaturalParam& theta);
GridFn density(const FamilyModel& model, const NaturalParam& theta);
//! Normalized log-density values on the grid.
Eigen::VectorXd log_density(const FamilyModel& model, const NaturalParam& theta);
MomentParam moment_map(const FamilyModel& model, const NaturalParam& theta);
Eigen::MatrixXd fisher_info(const FamilyModel& model, const NaturalParam& theta);

//! Per-component mean of phi_k over the observations (linear interpolation).
Eigen::VectorXd suffstat_average(const FamilyModel& model, std::span<const double> obs,
                                 std::size_t k);

//! Throws MomentRangeError unless stat_min_k < xi_k < stat_max_k for all k.
void require_in_moment_box(const FamilyModel& model, const Eigen::VectorXd& xi);
bool in_moment_box(const FamilyModel& model, const Eigen::VectorXd& xi, double margin = 0.0);

struct NewtonOptions
{
  int max_iter = 200;
  double grad_tol = 1e-9;
};

struct NewtonResult
{
  NaturalParam theta;
  int iterations = 0;
};

//! Damped Newton with Armijo backtracking for the strictly convex problem
//!   min_theta B(theta) - theta' target + 1/2 sum_k penalty_k theta_k^2.
//! Throws ConvergenceError when the gradient does not reach grad_tol.
NewtonResult solve_natural(const FamilyModel& model, const Eigen::VectorXd& target,
                           const Eigen::VectorXd& penalty, const NaturalParam& theta0,
                           const NewtonOptions& opts = {});

//! The natural parameter whose moment vector is xi.
NaturalParam natural_from_moment(const FamilyModel& model, const MomentParam& xi,
                                 const std::optional<NaturalParam>& theta0 = std::nullopt);

} // namespace repden
