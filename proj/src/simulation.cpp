#include "repden/simulation.hpp"

#include "repden/metrics.hpp"
#include "repden/parallel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace repden {

double MethodOutcome::mkl() const
{
  double s = 0.0;
  std::size_t n = 0;
  for (double v : kl)
    if (std::isfinite(v)) {
      s += v;
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double MethodOutcome::mean_k() const
{
  double s = 0.0;
  std::size_t n = 0;
  for (auto v : k)
    if (v > 0) {
      s += static_cast<double>(v);
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

const MethodOutcome& RepOutcome::get(const std::string& name) const
{
  for (const auto& m : methods)
    if (m.method == name)
      return m;
  throw std::out_of_range("no method named " + name);
}

GridFn kde_baseline(std::span<const double> obs, const Domain& domain, double fallback_h)
{
  double h = fallback_h;
  try {
    h = silverman_bandwidth(obs);
  } catch (const std::invalid_argument&) {
  }
  // Classical Gaussian KDE restricted to the domain and renormalized there.
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain.size()));
  const Eigen::VectorXd t = domain.points();
  for (double x : obs)
    v.array() += (-0.5 * ((t.array() - x) / h).square()).exp();
  v = v.cwiseMax(kDensityFloor * v.maxCoeff());
  return GridFn(domain, v / domain.weights().dot(v));
}

RepOutcome run_simulation_rep(const ScenarioData& data, const SimOptions& opts)
{
  TrainOptions topts;
  topts.bandwidth = opts.bandwidth;
  topts.k_max = opts.train_k_max;
  const FamilyModel model = train_family(data.train, data.domain, topts);
  const std::size_t k_max =
    std::min(opts.k_max, components_for_fve(model.sys(), opts.fve));
  const auto table = shrinkage_table(model, k_max);

  const auto n = data.test.size();
  RepOutcome out;
  out.bandwidth = model.meta().bandwidth;
  out.components = model.components();
  const Method methods[] = {Method::mle, Method::map, Method::blup};
  for (auto m : methods)
    out.methods.push_back({"fpca_" + std::string(to_string(m)),
                           std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()),
                           std::vector<std::size_t>(n, 0), std::vector<Eigen::VectorXd>(n), 0});
  out.methods.push_back({"kde", std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()),
                         std::vector<std::size_t>(n, 0), std::vector<Eigen::VectorXd>(n), 0});

  parallel_for(n, [&](std::size_t i) {
    const auto& tc = data.test[i];
    for (std::size_t mi = 0; mi < 3; ++mi) {
      try {
        const FitResult r =
          opts.fixed_k ? fit(model, tc.sample.obs, methods[mi], *opts.fixed_k, &table)
                       : select_k_aic(model, tc.sample.obs, methods[mi], k_max, &table);
        out.methods[mi].kl[i] = kl_div(tc.truth, density(model, r.theta));
        out.methods[mi].k[i] = r.k;
        out.methods[mi].theta[i] = r.theta.theta;
      } catch (const std::exception&) {
      }
    }
    try {
      out.methods[3].kl[i] =
        kl_div(tc.truth, kde_baseline(tc.sample.obs, data.domain, model.meta().bandwidth));
    } catch (const std::exception&) {
    }
  });
  for (auto& m : out.methods)
    for (double v : m.kl)
      if (!std::isfinite(v))
        ++m.failed;
  return out;
}

std::vector<RepOutcome> run_simulation(const ScenarioSpec& spec, std::size_t reps,
                                       const SimOptions& opts)
{
  std::vector<RepOutcome> out;
  out.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    ScenarioSpec s = spec;
    s.seed = spec.seed + r;
    out.push_back(run_simulation_rep(generate(s), opts));
  }
  return out;
}

} // namespace repden
