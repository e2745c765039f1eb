#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ambig/dataset.hpp"
#include "ambig/design.hpp"
#include "ambig/smooth.hpp"

namespace ambig {

struct AmSpec {
  std::string response;
  std::vector<std::pair<std::string, int>> smooths;  // (covariate, basis rank k)
  DesignSpec parametric;  // terms only; its intercept flag is ignored
  std::vector<std::string> random_intercepts;
  bool include_intercept = true;
};

struct AmSmoothBlock {
  std::string covariate;
  int k = 0;
  double lambda = 0.0;
  double edf = 0.0;
  SmoothEval eval;               // centered contribution, evaluable anywhere
  Eigen::VectorXd contribution;  // training-sample contribution, sums to ~0
};

struct AmRandomEffect {
  std::string factor;
  std::vector<std::string> levels;
  Eigen::VectorXd intercepts;  // predicted (BLUP) intercept per level
  double sigma_b2 = 0.0;
  double lambda = 0.0;  // sigma2 / sigma_b2
  double edf = 0.0;
};

struct AmFit {
  AmSpec spec;
  std::vector<AmSmoothBlock> blocks;
  std::vector<std::string> parametric_names;  // includes "(Intercept)" when present
  Eigen::VectorXd parametric_coefficients;
  Eigen::VectorXd parametric_se;
  Eigen::VectorXd parametric_t;
  std::vector<AmRandomEffect> random_effects;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double sigma2 = 0.0;  // residual variance (REML)
  double rss = 0.0;
  double r_squared = 0.0;
  double reml_score = 0.0;
  double edf_total = 0.0;
  bool converged = true;
  int outer_iterations = 0;
  std::vector<std::string> warnings;

  double coef(const std::string& name) const;
  double t_value(const std::string& name) const;
  const AmSmoothBlock& block(const std::string& covariate) const;
};

// Joint penalized least squares: global intercept + parametric terms
// (unpenalized) + centered smooth blocks (eigen-diagonal penalties, linear
// null column unpenalized) + random-intercept indicator blocks (ridge).
// All smoothing parameters and variance ratios chosen by coordinate-wise
// REML over log10(lambda) in [-8, 12].
AmFit fit_am(const AmSpec& spec, const Dataset& ds);

// Population-level + known-level prediction; unseen factor levels get 0.
Eigen::VectorXd predict(const AmFit& fit, const Dataset& ds_new);

}  // namespace ambig
