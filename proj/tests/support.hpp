#pragma once

#include "repden/expfam.hpp"
#include "repden/simgen.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace repden::testing {

// Cosine basis sqrt(2/L) cos(k pi (t - lo)/L), k = 1..K. Exactly orthonormal
// and centred under the trapezoid rule.
inline Eigen::MatrixXd cosine_basis(const Domain& d, std::size_t k)
{
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < d.size(); ++j)
    for (std::size_t c = 0; c < k; ++c)
      phi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) =
        std::sqrt(2.0 / d.length()) *
        std::cos(static_cast<double>(c + 1) * std::numbers::pi * (d.point(j) - d.lo()) / d.length());
  return phi;
}

// A family with the given mean and basis; scores are placeholders (two rows
// so that n_train >= 2), pre-smoothed densities omitted.
inline FamilyModel toy_model(const Domain& d, const Eigen::MatrixXd& phi,
                             const Eigen::VectorXd& mu)
{
  const auto k = phi.cols();
  EigenSystem sys{LogDensityFn(GridFn(d, mu)), Eigen::VectorXd::LinSpaced(k, 1.0, 0.5), phi,
                  Eigen::MatrixXd::Zero(2, k)};
  sys.scores.row(0).setConstant(1.0);
  sys.scores.row(1).setConstant(-1.0);
  return FamilyModel(std::move(sys), Eigen::MatrixXd());
}

inline FamilyModel toy_model(const Domain& d, const Eigen::MatrixXd& phi)
{
  return toy_model(d, phi, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size())));
}

// Linear basis sqrt(12)(t - 1/2) on [0, 1], normalized by the trapezoid rule.
inline Eigen::MatrixXd linear_basis(const Domain& d)
{
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(d.size()), 1);
  for (std::size_t j = 0; j < d.size(); ++j)
    phi(static_cast<Eigen::Index>(j), 0) = d.point(j) - 0.5 * (d.lo() + d.hi());
  phi /= std::sqrt(d.weights().dot(phi.col(0).cwiseAbs2()));
  return phi;
}

// A model trained on a small truncated-normal scenario.
inline FamilyModel small_trained(std::uint64_t seed = 11, std::size_t n_train = 20,
                                 std::size_t size = 150, std::size_t grid = 128)
{
  ScenarioSpec spec = ScenarioSpec::defaults(ScenarioKind::trunc_normal);
  spec.n_train = n_train;
  spec.train_size = {size, size};
  spec.n_test = 1;
  spec.seed = seed;
  spec.n_grid = grid;
  const auto data = generate(spec);
  return train_family(data.train, data.domain, TrainOptions{std::nullopt, 6});
}

inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000)
{
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i)
    s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

} // namespace repden::testing
