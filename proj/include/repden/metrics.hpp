#pragma once

#include "repden/grid.hpp"

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace repden {

//! Per-sample values with their mean, median and sample standard deviation.
struct EvalReport
{
  std::vector<std::pair<std::string, double>> per_sample;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
};

//! Summary of raw values; sd uses divisor n - 1 and is 0 for a single value.
EvalReport summarize(std::vector<std::pair<std::string, double>> values);

//! KL divergence of q from p on the common grid. Grid points where p < 1e-14
//! contribute nothing; q must be positive wherever p is not.
double kl_div(const GridFn& p, const GridFn& q);

EvalReport mean_kl(std::span<const GridFn> truths, std::span<const GridFn> fits,
                   std::span<const std::string> ids = {});

using RefitFn = std::function<GridFn(std::span<const double>)>;

//! -N^-1 sum_j log p_{-j}(X_j), where p_{-j} is fit_fn applied to all but the
//! j-th observation. Returns +infinity when some p_{-j}(X_j) is not positive.
//! A failing refit is rethrown as LooRefitError.
double loo_cross_entropy(const RefitFn& fit_fn, std::span<const double> obs);

class LooRefitError : public std::runtime_error
{
public:
  LooRefitError(std::size_t index, const std::string& what);
  std::size_t index() const { return index_; }

private:
  std::size_t index_;
};

//! The 1 - 1/T quantile.
double return_level(const GridFn& p, double t_years);

} // namespace repden
