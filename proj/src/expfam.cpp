#include "repden/expfam.hpp"

#include "repden/error.hpp"
#include "repden/logmap.hpp"
#include "repden/parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace repden {

FamilyModel::FamilyModel(EigenSystem sys, Eigen::MatrixXd presmoothed,
                         TrainingMeta meta)
  : sys_(std::move(sys))
  , presmoothed_(std::move(presmoothed))
  , meta_(std::move(meta))
  , weights_(sys_.domain().weights())
{
  if (presmoothed_.size() > 0 &&
      (presmoothed_.rows() != sys_.scores.rows() ||
       presmoothed_.cols() != static_cast<Eigen::Index>(domain().size())))
    throw std::invalid_argument("pre-smoothed density matrix has the wrong shape");
  if (sys_.eigfns.rows() != static_cast<Eigen::Index>(domain().size()))
    throw std::invalid_argument("eigenfunction matrix has the wrong number of rows");
  stat_min_ = sys_.eigfns.colwise().minCoeff().transpose();
  stat_max_ = sys_.eigfns.colwise().maxCoeff().transpose();
}

Eigen::Block<const Eigen::MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true> FamilyModel::basis(std::size_t k) const
{
  if (k > components())
    throw std::out_of_range("requested " + std::to_string(k) +
                            " components but the family has " +
                            std::to_string(components()));
  return sys_.eigfns.leftCols(static_cast<Eigen::Index>(k));
}

NaturalParam::NaturalParam(Eigen::VectorXd t)
  : theta(std::move(t))
{
  if (!theta.allFinite())
    throw std::invalid_argument("natural parameter has non-finite entries");
}

FamilyModel train_family(std::span<const SubpopSample> train, const Domain& domain,
                         const TrainOptions& opts)
{
  if (train.size() < 2)
    throw std::invalid_argument("training needs at least 2 subpopulations");
  for (const auto& s : train)
    require_inside(s, domain);
  const double h = opts.bandwidth ? *opts.bandwidth : median_bandwidth(train);

  const auto n = train.size();
  Eigen::MatrixXd pre(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(domain.size()));
  std::vector<LogDensityFn> trajs(n, LogDensityFn(GridFn::constant(domain, 0.0)));
  parallel_for(n, [&](std::size_t i) {
    const GridFn p = weighted_kde(train[i].obs, h, domain);
    pre.row(static_cast<Eigen::Index>(i)) = p.values().transpose();
    trajs[i] = clog_transform(p);
  });

  TrainingMeta meta;
  meta.bandwidth = h;
  for (const auto& s : train) {
    meta.ids.push_back(s.id);
    meta.sizes.push_back(s.size());
  }
  const std::size_t k_max = std::min(std::max<std::size_t>(opts.k_max, 1), n - 1);
  return FamilyModel(fit_fpca(trajs, k_max), std::move(pre), std::move(meta));
}

Eigen::VectorXd log_kernel(const FamilyModel& model, const NaturalParam& theta)
{
  return model.sys().mu.values() + model.basis(theta.size()) * theta.theta;
}

double log_normalizer(const FamilyModel& model, const NaturalParam& theta)
{
  double b = 0.0;
  normalized_exp(model.domain(), log_kernel(model, theta), &b);
  if (!std::isfinite(b))
    throw NumericalError("log normalizer overflow");
  return b;
}

GridFn density(const FamilyModel& model, const NaturalParam& theta)
{
  return GridFn(model.domain(), normalized_exp(model.domain(), log_kernel(model, theta)));
}

Eigen::VectorXd log_density(const FamilyModel& model, const NaturalParam& theta)
{
  const Eigen::VectorXd v = log_kernel(model, theta);
  return v.array() - log_normalizer(model, theta);
}

namespace {

struct Moments
{
  double b;
  Eigen::VectorXd xi;
  Eigen::MatrixXd fisher;
};

// One pass over the grid for B, xi and (optionally) the Fisher matrix.
Moments moments(const FamilyModel& model, const Eigen::VectorXd& theta, bool with_fisher)
{
  const auto phi = model.basis(static_cast<std::size_t>(theta.size()));
  Moments m;
  const Eigen::VectorXd p = normalized_exp(
    model.domain(), model.sys().mu.values() + phi * theta, &m.b);
  const Eigen::VectorXd wp = p.cwiseProduct(model.weights());
  m.xi = phi.transpose() * wp;
  if (with_fisher)
    m.fisher = phi.transpose() * wp.asDiagonal() * phi - m.xi * m.xi.transpose();
  return m;
}

} // namespace

MomentParam moment_map(const FamilyModel& model, const NaturalParam& theta)
{
  return MomentParam{moments(model, theta.theta, false).xi};
}

Eigen::MatrixXd fisher_info(const FamilyModel& model, const NaturalParam& theta)
{
  return moments(model, theta.theta, true).fisher;
}

Eigen::VectorXd suffstat_average(const FamilyModel& model, std::span<const double> obs,
                                 std::size_t k)
{
  if (obs.empty())
    throw std::invalid_argument("suffstat_average: no observations");
  const auto phi = model.basis(k);
  const Domain& d = model.domain();
  const auto m = static_cast<Eigen::Index>(d.size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (double x : obs) {
    if (!std::isfinite(x) || !d.contains(x))
      throw std::invalid_argument("suffstat_average: observation outside the domain");
    const double u = (x - d.lo()) / d.step();
    auto j = std::min(static_cast<Eigen::Index>(std::floor(u)), m - 2);
    const double frac = u - static_cast<double>(j);
    acc += (1.0 - frac) * phi.row(j).transpose() + frac * phi.row(j + 1).transpose();
  }
  return acc / static_cast<double>(obs.size());
}

bool in_moment_box(const FamilyModel& model, const Eigen::VectorXd& xi, double margin)
{
  if (static_cast<std::size_t>(xi.size()) > model.components())
    return false;
  for (Eigen::Index k = 0; k < xi.size(); ++k)
    if (!(xi[k] > model.stat_min()[k] + margin && xi[k] < model.stat_max()[k] - margin))
      return false;
  return true;
}

void require_in_moment_box(const FamilyModel& model, const Eigen::VectorXd& xi)
{
  if (!in_moment_box(model, xi))
    throw MomentRangeError("moment vector is outside the range of the sufficient statistics");
}

NewtonResult solve_natural(const FamilyModel& model, const Eigen::VectorXd& target,
                           const Eigen::VectorXd& penalty, const NaturalParam& theta0,
                           const NewtonOptions& opts)
{
  const auto k = target.size();
  if (penalty.size() != k || theta0.theta.size() != k)
    throw std::invalid_argument("solve_natural: dimension mismatch");
  model.basis(static_cast<std::size_t>(k));

  auto objective = [&](const Eigen::VectorXd& th, Moments& mo, bool fisher) {
    mo = moments(model, th, fisher);
    return mo.b - th.dot(target) + 0.5 * th.dot(penalty.cwiseProduct(th));
  };

  Eigen::VectorXd theta = theta0.theta;
  Moments cur;
  double f = objective(theta, cur, true);
  for (int it = 0; it <= opts.max_iter; ++it) {
    const Eigen::VectorXd grad = cur.xi - target + penalty.cwiseProduct(theta);
    const double gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm < opts.grad_tol)
      return NewtonResult{NaturalParam(theta), it};
    if (it == opts.max_iter)
      break;

    Eigen::MatrixXd hess = cur.fisher;
    hess.diagonal() += penalty;
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
      hess.diagonal().array() += 1e-10 * std::max(hess.trace(), 1e-300);
      llt.compute(hess);
      if (llt.info() != Eigen::Success)
        throw ConvergenceError("Newton step: Hessian is not positive definite");
    }
    const Eigen::VectorXd dir = llt.solve(-grad);
    const double slope = grad.dot(dir);

    double step = 1.0;
    bool accepted = false;
    Moments trial;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const Eigen::VectorXd cand = theta + step * dir;
      double fc = std::numeric_limits<double>::infinity();
      try {
        fc = objective(cand, trial, true);
      } catch (const NumericalError&) {
        continue;
      }
      const bool armijo = fc <= f + 1e-4 * step * slope;
      // Near the optimum f changes at rounding level; accept on gradient decrease.
      const bool flat = fc <= f + 1e-13 * (1.0 + std::abs(f)) &&
                        (trial.xi - target + penalty.cwiseProduct(cand))
                            .lpNorm<Eigen::Infinity>() < gnorm;
      if (armijo || flat) {
        theta = cand;
        f = fc;
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw ConvergenceError("Newton line search failed (gradient " +
                             std::to_string(gnorm) + ")");
  }
  throw ConvergenceError("Newton did not converge in " + std::to_string(opts.max_iter) +
                         " iterations");
}

NaturalParam natural_from_moment(const FamilyModel& model, const MomentParam& xi,
                                 const std::optional<NaturalParam>& theta0)
{
  const auto k = xi.size();
  model.basis(k);
  require_in_moment_box(model, xi.xi);
  const NaturalParam start = theta0 ? *theta0 : NaturalParam::zero(k);
  return solve_natural(model, xi.xi, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)),
                       start)
    .theta;
}

} // namespace repden
