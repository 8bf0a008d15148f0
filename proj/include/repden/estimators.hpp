#pragma once

#include "repden/expfam.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repden {

enum class Method
{
  mle,
  map,
  blup
};

std::string_view to_string(Method m);
//! Accepts "mle", "map" or "blup" (case-insensitive).
Method parse_method(std::string_view s);

//! Population-level summaries at truncation K used by MAP and BLUP.
struct ShrinkageStats
{
  Eigen::VectorXd tau_bar;      // mean training moment coordinates
  Eigen::MatrixXd sigma_tau;    // their covariance (divisor n - 1)
  Eigen::MatrixXd sigma_phibar; // mean within-subpopulation variance / fit_n
  Eigen::VectorXd score_vars;   // training score variances (divisor n - 1)
  std::size_t fit_n = 1;

  //! Same statistics for another new-sample size; only sigma_phibar changes.
  ShrinkageStats rescaled(std::size_t new_fit_n) const;
};

ShrinkageStats shrinkage_stats(const FamilyModel& model, std::size_t k, std::size_t fit_n);

//! shrinkage_stats for k = 1..k_max at fit_n = 1, for repeated fits against
//! one model.
std::vector<ShrinkageStats> shrinkage_table(const FamilyModel& model, std::size_t k_max);

struct AicEntry
{
  std::size_t k;
  double aic;
};

struct FitResult
{
  Method method;
  std::size_t k = 0;
  NaturalParam theta;
  MomentParam xi;
  double log_normalizer = 0.0;
  double loglik = 0.0; // sum_j log p(X_j)
  std::vector<AicEntry> aic_trace;
  std::size_t n_obs = 0;
};

//! Sum of log p_theta over the observations, interpolating the grid
//! log-density linearly.
double loglik(const FamilyModel& model, const NaturalParam& theta, std::span<const double> obs);
double aic(std::size_t k, double loglik);

FitResult fit_mle(const FamilyModel& model, std::span<const double> obs, std::size_t k);

//! prior_vars overrides the training score variances.
FitResult fit_map(const FamilyModel& model, std::span<const double> obs, std::size_t k,
                  const std::optional<Eigen::VectorXd>& prior_vars = std::nullopt);

FitResult fit_blup(const FamilyModel& model, std::span<const double> obs, std::size_t k);
//! BLUP with explicitly supplied statistics (their fit_n is used as given).
FitResult fit_blup(const FamilyModel& model, std::span<const double> obs,
                   const ShrinkageStats& stats);

//! BLUP moment estimate before any range projection.
Eigen::VectorXd blup_moment(const ShrinkageStats& stats, const Eigen::VectorXd& phibar);

FitResult fit(const FamilyModel& model, std::span<const double> obs, Method method,
              std::size_t k, const std::vector<ShrinkageStats>* table = nullptr);

//! Fits k = 1..k_max and returns the fit with the smallest AIC; k values whose
//! fit fails are left out of the trace.
FitResult select_k_aic(const FamilyModel& model, std::span<const double> obs, Method method,
                       std::size_t k_max, const std::vector<ShrinkageStats>* table = nullptr);

} // namespace repden
