#include "repden/estimators.hpp"

#include "repden/error.hpp"
#include "repden/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace repden {

std::string_view to_string(Method m)
{
  switch (m) {
    case Method::mle:
      return "mle";
    case Method::map:
      return "map";
    case Method::blup:
      return "blup";
  }
  return "?";
}

Method parse_method(std::string_view s)
{
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mle")
    return Method::mle;
  if (lower == "map")
    return Method::map;
  if (lower == "blup")
    return Method::blup;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

ShrinkageStats ShrinkageStats::rescaled(std::size_t new_fit_n) const
{
  if (new_fit_n == 0)
    throw std::invalid_argument("fit sample size must be positive");
  ShrinkageStats out = *this;
  out.sigma_phibar *= static_cast<double>(fit_n) / static_cast<double>(new_fit_n);
  out.fit_n = new_fit_n;
  return out;
}

ShrinkageStats shrinkage_stats(const FamilyModel& model, std::size_t k, std::size_t fit_n)
{
  const auto n = model.n_train();
  if (n < 2)
    throw std::invalid_argument("shrinkage statistics need at least 2 training subpopulations");
  if (fit_n == 0)
    throw std::invalid_argument("fit sample size must be positive");
  if (k < 1)
    throw std::out_of_range("shrinkage statistics need k >= 1");
  const auto phi = model.basis(k);
  if (model.presmoothed().rows() != static_cast<Eigen::Index>(n))
    throw std::invalid_argument("model has no pre-smoothed training densities");

  const auto kk = static_cast<Eigen::Index>(k);
  const auto nn = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd scores = model.sys().scores.leftCols(kk);
  Eigen::MatrixXd tau(nn, kk);
  for (Eigen::Index i = 0; i < nn; ++i)
    tau.row(i) = moment_map(model, NaturalParam(scores.row(i).transpose())).xi.transpose();

  ShrinkageStats st;
  st.fit_n = fit_n;
  st.tau_bar = tau.colwise().mean().transpose();
  const Eigen::MatrixXd dt = tau.rowwise() - st.tau_bar.transpose();
  st.sigma_tau = dt.transpose() * dt / static_cast<double>(n - 1);

  // (1/(nN)) sum_i int (phi - tau_i)(phi - tau_i)' p_i, expanded as
  // int phi phi' p_i - tau_i m_i' - m_i tau_i' + tau_i tau_i' mass_i
  // with m_i = int phi p_i.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(kk, kk);
  const Eigen::VectorXd& w = model.weights();
  for (Eigen::Index i = 0; i < nn; ++i) {
    const Eigen::VectorXd wp = model.presmoothed().row(i).transpose().cwiseProduct(w);
    const Eigen::VectorXd m = phi.transpose() * wp;
    const Eigen::VectorXd ti = tau.row(i).transpose();
    acc += phi.transpose() * wp.asDiagonal() * phi - ti * m.transpose() - m * ti.transpose() +
           wp.sum() * ti * ti.transpose();
  }
  st.sigma_phibar = acc / (static_cast<double>(n) * static_cast<double>(fit_n));
  st.sigma_phibar = 0.5 * (st.sigma_phibar + st.sigma_phibar.transpose());

  const Eigen::RowVectorXd smean = scores.colwise().mean();
  st.score_vars = (scores.rowwise() - smean).colwise().squaredNorm().transpose() /
                  static_cast<double>(n - 1);
  return st;
}

std::vector<ShrinkageStats> shrinkage_table(const FamilyModel& model, std::size_t k_max)
{
  k_max = std::min(k_max, model.components());
  std::vector<ShrinkageStats> out(k_max);
  parallel_for(k_max, [&](std::size_t i) { out[i] = shrinkage_stats(model, i + 1, 1); });
  return out;
}

double loglik(const FamilyModel& model, const NaturalParam& theta, std::span<const double> obs)
{
  const Eigen::VectorXd ld = log_density(model, theta);
  double s = 0.0;
  for (double x : obs)
    s += interpolate(model.domain(), ld, x);
  return s;
}

double aic(std::size_t k, double ll)
{
  return 2.0 * static_cast<double>(k) - 2.0 * ll;
}

namespace {

void check_obs(const FamilyModel& model, std::span<const double> obs)
{
  if (obs.empty())
    throw std::invalid_argument("no observations to fit");
  for (double x : obs)
    if (!std::isfinite(x) || !model.domain().contains(x))
      throw std::invalid_argument("observation outside the model domain");
}

FitResult finish(const FamilyModel& model, Method method, NaturalParam theta,
                 std::span<const double> obs)
{
  FitResult r;
  r.method = method;
  r.k = theta.size();
  r.xi = moment_map(model, theta);
  r.log_normalizer = log_normalizer(model, theta);
  r.loglik = loglik(model, theta, obs);
  r.theta = std::move(theta);
  r.n_obs = obs.size();
  r.aic_trace = {{r.k, aic(r.k, r.loglik)}};
  return r;
}

} // namespace

FitResult fit_mle(const FamilyModel& model, std::span<const double> obs, std::size_t k)
{
  check_obs(model, obs);
  const Eigen::VectorXd phibar = suffstat_average(model, obs, k);
  NaturalParam theta = natural_from_moment(model, MomentParam{phibar});
  return finish(model, Method::mle, std::move(theta), obs);
}

FitResult fit_map(const FamilyModel& model, std::span<const double> obs, std::size_t k,
                  const std::optional<Eigen::VectorXd>& prior_vars)
{
  check_obs(model, obs);
  const Eigen::VectorXd phibar = suffstat_average(model, obs, k);
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::VectorXd vars;
  if (prior_vars) {
    if (prior_vars->size() != kk)
      throw std::invalid_argument("prior variance vector has the wrong length");
    vars = *prior_vars;
  } else {
    const Eigen::MatrixXd scores = model.sys().scores.leftCols(kk);
    if (scores.rows() < 2)
      throw std::invalid_argument("MAP needs at least 2 training subpopulations");
    const Eigen::RowVectorXd smean = scores.colwise().mean();
    vars = (scores.rowwise() - smean).colwise().squaredNorm().transpose() /
           static_cast<double>(scores.rows() - 1);
  }
  if (!(vars.array() > 0.0).all())
    throw std::invalid_argument("MAP prior variances must be positive");
  // N (theta' phibar - B) - 1/2 sum theta_k^2 / s_k^2, divided through by N.
  const Eigen::VectorXd penalty =
    (static_cast<double>(obs.size()) * vars.array()).inverse().matrix();
  NaturalParam theta = solve_natural(model, phibar, penalty, NaturalParam::zero(k)).theta;
  return finish(model, Method::map, std::move(theta), obs);
}

Eigen::VectorXd blup_moment(const ShrinkageStats& stats, const Eigen::VectorXd& phibar)
{
  Eigen::MatrixXd s = stats.sigma_phibar + stats.sigma_tau;
  s = 0.5 * (s + s.transpose());
  const auto k = s.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= 0.0 || hi / lo > 1e12)
    s.diagonal().array() += 1e-10 * std::max(s.trace(), 1e-300) / static_cast<double>(k);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("BLUP: covariance inversion failed");
  const Eigen::VectorXd gain = ldlt.solve(phibar - stats.tau_bar);
  if (!gain.allFinite())
    throw NumericalError("BLUP: covariance inversion failed");
  return stats.sigma_tau * gain + stats.tau_bar;
}

namespace {

constexpr double kBoxMargin = 1e-6;

// Largest s in [0, 1] keeping center + s (target - center) inside the box
// shrunk by the margin.
double feasible_fraction(const FamilyModel& model, const Eigen::VectorXd& center,
                         const Eigen::VectorXd& target)
{
  double s = 1.0;
  for (Eigen::Index k = 0; k < target.size(); ++k) {
    const double lo = model.stat_min()[k] + kBoxMargin;
    const double hi = model.stat_max()[k] - kBoxMargin;
    const double d = target[k] - center[k];
    if (target[k] > hi && d > 0.0)
      s = std::min(s, (hi - center[k]) / d);
    else if (target[k] < lo && d < 0.0)
      s = std::min(s, (lo - center[k]) / d);
  }
  return std::clamp(s, 0.0, 1.0);
}

} // namespace

FitResult fit_blup(const FamilyModel& model, std::span<const double> obs,
                   const ShrinkageStats& stats)
{
  check_obs(model, obs);
  const auto k = static_cast<std::size_t>(stats.tau_bar.size());
  const Eigen::VectorXd phibar = suffstat_average(model, obs, k);
  const Eigen::VectorXd xi = blup_moment(stats, phibar);

  // The box is only a necessary condition for a finite natural parameter, so
  // keep moving toward tau_bar if the inversion still fails.
  double s = in_moment_box(model, xi, kBoxMargin) ? 1.0
                                                   : feasible_fraction(model, stats.tau_bar, xi);
  for (int attempt = 0;; ++attempt) {
    const Eigen::VectorXd target = stats.tau_bar + s * (xi - stats.tau_bar);
    try {
      NaturalParam theta = natural_from_moment(model, MomentParam{target});
      return finish(model, Method::blup, std::move(theta), obs);
    } catch (const NumericalError&) {
      if (attempt >= 30)
        throw;
      s *= 0.5;
    }
  }
}

FitResult fit_blup(const FamilyModel& model, std::span<const double> obs, std::size_t k)
{
  check_obs(model, obs);
  return fit_blup(model, obs, shrinkage_stats(model, k, obs.size()));
}

FitResult fit(const FamilyModel& model, std::span<const double> obs, Method method,
              std::size_t k, const std::vector<ShrinkageStats>* table)
{
  switch (method) {
    case Method::mle:
      return fit_mle(model, obs, k);
    case Method::map:
      return fit_map(model, obs, k);
    case Method::blup:
      if (table && k >= 1 && k <= table->size()) {
        check_obs(model, obs);
        return fit_blup(model, obs, (*table)[k - 1].rescaled(obs.size()));
      }
      return fit_blup(model, obs, k);
  }
  throw std::invalid_argument("unknown method");
}

FitResult select_k_aic(const FamilyModel& model, std::span<const double> obs, Method method,
                       std::size_t k_max, const std::vector<ShrinkageStats>* table)
{
  if (k_max < 1 || k_max > model.components())
    throw std::out_of_range("k_max must lie in [1, retained components]");
  check_obs(model, obs);
  std::vector<std::optional<FitResult>> fits(k_max);
  std::vector<std::string> errors(k_max);
  parallel_for(k_max, [&](std::size_t i) {
    try {
      fits[i] = fit(model, obs, method, i + 1, table);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<AicEntry> trace;
  std::size_t best = k_max;
  for (std::size_t i = 0; i < k_max; ++i) {
    if (!fits[i])
      continue;
    trace.push_back(fits[i]->aic_trace.front());
    if (best == k_max || trace.back().aic < fits[best]->aic_trace.front().aic)
      best = i;
  }
  if (best == k_max)
    throw NumericalError("every truncation level failed to fit: " + errors.back());
  FitResult out = std::move(*fits[best]);
  out.aic_trace = std::move(trace);
  return out;
}

} // namespace repden
