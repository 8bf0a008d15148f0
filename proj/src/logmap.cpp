#include "repden/logmap.hpp"

#include "repden/error.hpp"
#include "repden/presmooth.hpp"

#include <cmath>
#include <stdexcept>

namespace repden {

LogDensityFn LogDensityFn::centred(GridFn f)
{
  const double avg = integrate(f) / f.domain().length();
  Eigen::VectorXd v = f.values().array() - avg;
  return LogDensityFn(GridFn(f.domain(), std::move(v)));
}

LogDensityFn clog_transform(const GridFn& p)
{
  if (p.values().minCoeff() < 0.0)
    throw std::invalid_argument("clog_transform: negative density value");
  const Eigen::VectorXd floored = p.values().cwiseMax(kDensityFloor);
  const double mass = integrate(GridFn(p.domain(), floored));
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument("clog_transform: density is not normalized");
  return LogDensityFn::centred(GridFn(p.domain(), floored.array().log().matrix()));
}

Eigen::VectorXd normalized_exp(const Domain& domain, const Eigen::VectorXd& v,
                               double* log_norm)
{
  const double top = v.maxCoeff();
  if (!std::isfinite(top) || !v.allFinite())
    throw NumericalError("non-finite log-density");
  Eigen::VectorXd e = (v.array() - top).exp();
  const double mass = domain.weights().dot(e);
  if (log_norm)
    *log_norm = top + std::log(mass);
  return e / mass;
}

GridFn clog_inverse(const LogDensityFn& f)
{
  if (f.values().maxCoeff() - f.values().minCoeff() > kMaxLogSpread)
    throw NumericalError("log-density spread too large to exponentiate");
  return GridFn(f.domain(), normalized_exp(f.domain(), f.values()));
}

} // namespace repden
