#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ambig/dataset.hpp"
#include "ambig/design.hpp"

namespace ambig {

// Ordinary least squares fit. Coefficient order matches DesignMatrix::names.
struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd t;        // beta / se
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  double sigma2_hat = 0.0;  // rss / (n - p)
  double r_squared = 0.0;   // 1 - rss / TSS about the mean
  long dof_residual = 0;    // n - p
  std::vector<std::string> names;

  double coef(const std::string& name) const;
  double t_value(const std::string& name) const;
};

// QR with column pivoting; throws Underdetermined when n <= p and
// SingularDesign when the numerical rank (threshold 1e-10) drops below p.
OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const std::vector<std::string>& names);

OlsFit fit_ols(const DesignSpec& spec, const Dataset& ds);

// Residuals of y after projecting out span(X).
Eigen::VectorXd residualize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Copy of ds with an added column `<target>_resid`: the OLS residuals of
// target regressed on the predictor design.
Dataset residualize(const Dataset& ds, const std::string& target,
                    const DesignSpec& predictors);

}  // namespace ambig
