#pragma once

#include "repden/grid.hpp"

namespace repden {

//! A log-density centred to integrate to zero over its domain.
class LogDensityFn
{
public:
  //! Adopts f as-is; centring is the caller's responsibility (see centred()).
  explicit LogDensityFn(GridFn f)
    : inner_(std::move(f))
  {
  }
  //! Subtracts the domain average so the result integrates to zero.
  static LogDensityFn centred(GridFn f);

  const GridFn& fn() const { return inner_; }
  const Domain& domain() const { return inner_.domain(); }
  const Eigen::VectorXd& values() const { return inner_.values(); }

private:
  GridFn inner_;
};

//! Largest spread max f - min f that clog_inverse will exponentiate.
inline constexpr double kMaxLogSpread = 700.0;

//! log p minus its domain average. Values in [0, floor) are raised to the
//! density floor first; negative values are rejected.
LogDensityFn clog_transform(const GridFn& p);

//! Density proportional to exp(f), normalized on the grid.
GridFn clog_inverse(const LogDensityFn& f);

//! exp(v - max v) normalized by the trapezoid rule; the log normalizer
//! (including the shift) is written to log_norm when given.
Eigen::VectorXd normalized_exp(const Domain& domain, const Eigen::VectorXd& v,
                               double* log_norm = nullptr);

} // namespace repden
