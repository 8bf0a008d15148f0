#pragma once

#include "repden/estimators.hpp"
#include "repden/simgen.hpp"

#include <optional>
#include <string>
#include <vector>

namespace repden {

//! One Monte Carlo repetition: train on the scenario's training samples, fit
//! every test sample with FPCA_MLE / FPCA_MAP / FPCA_BLUP and a KDE baseline,
//! and score each fit by KL divergence from the truth.
struct SimOptions
{
  std::size_t k_max = 10;              // AIC sweep limit
  double fve = 0.99;                   // further limit the sweep by variance explained
  std::optional<std::size_t> fixed_k;  // skip AIC and use this K
  std::optional<double> bandwidth;     // training bandwidth, default median rule
  std::size_t train_k_max = 20;
};

struct MethodOutcome
{
  std::string method;
  std::vector<double> kl;              // NaN where the fit failed
  std::vector<std::size_t> k;          // 0 for KDE or failures
  std::vector<Eigen::VectorXd> theta;  // empty for KDE or failures
  std::size_t failed = 0;

  //! Mean KL over successful fits.
  double mkl() const;
  double mean_k() const;
};

struct RepOutcome
{
  std::vector<MethodOutcome> methods; // fpca_mle, fpca_map, fpca_blup, kde
  double bandwidth = 0.0;
  std::size_t components = 0;

  const MethodOutcome& get(const std::string& name) const;
};

RepOutcome run_simulation_rep(const ScenarioData& data, const SimOptions& opts = {});

//! Repetitions r = 0..reps-1 of the scenario, rep r using seed spec.seed + r.
std::vector<RepOutcome> run_simulation(const ScenarioSpec& spec, std::size_t reps,
                                       const SimOptions& opts = {});

//! Classical Gaussian KDE with the sample's own Silverman bandwidth (fallback_h
//! when that is undefined), restricted to the domain and renormalized.
GridFn kde_baseline(std::span<const double> obs, const Domain& domain, double fallback_h);

} // namespace repden
