#pragma once

#include "repden/estimators.hpp"
#include "repden/expfam.hpp"

#include <span>
#include <vector>

namespace repden {

//! Density on the image grid y_j = exp(x_j) of a log-scale domain.
struct ScaledDensity
{
  std::vector<double> y;
  std::vector<double> values;

  double integrate() const;
  double quantile(double q) const;
};

//! A family trained on X = log Y.
struct ScaledModel
{
  FamilyModel inner;
  double delta;
  //! True when the data forced a lower endpoint below zero.
  bool generalized_lower = false;
};

//! [0, max log Y + delta], or [min log Y - delta, max log Y + delta] when some
//! log Y is negative.
Domain log_domain(std::span<const SubpopSample> train_y, double delta, std::size_t n_grid,
                  bool* generalized = nullptr);

//! Log-transforms every observation (all must be positive) and trains the
//! family on the log scale.
ScaledModel fit_scaled(std::span<const SubpopSample> train_y, double delta,
                       std::size_t n_grid = Domain::kDefaultGrid, const TrainOptions& opts = {});

//! log of each observation, clamped into the model domain; the number of
//! clamped values goes to clamped.
std::vector<double> to_log_scale(const Domain& domain, std::span<const double> y,
                                 std::size_t* clamped = nullptr);

//! Change of variables p_Y(y) = p_X(log y) / y, renormalized by the
//! trapezoid rule on the y-grid.
ScaledDensity density_original_scale(const ScaledModel& m, const NaturalParam& theta);
ScaledDensity density_original_scale(const GridFn& px);

struct ScaledFit
{
  FitResult fit;
  ScaledDensity density;
  std::size_t clamped = 0;
};

//! Fits original-scale observations through the log-scale family. k = 0
//! selects K by AIC up to k_max.
ScaledFit fit_original_scale(const ScaledModel& m, std::span<const double> y, Method method,
                             std::size_t k, std::size_t k_max = 0,
                             const std::vector<ShrinkageStats>* table = nullptr);

struct PreservedCheck
{
  NaturalParam direct;  // fitted on log Y by hand
  NaturalParam wrapped; // fitted through fit_original_scale
  double max_abs_diff;
};

//! Fits one sample both ways and reports the shared natural parameter.
PreservedCheck parameters_preserved(const ScaledModel& m, std::span<const double> y,
                                    Method method, std::size_t k);

} // namespace repden
