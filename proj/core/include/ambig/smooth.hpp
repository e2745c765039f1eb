#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ambig {

// Collapsed kernel form of a fitted 1-D thin-plate smooth,
//   g(x) = sum_j delta_j eta(|x' - t_j|) + c1 x' + c0,
// where x' = (x - x_min)/(x_max - x_min) and eta(r) = r^3/12.
// Self-contained: enough to re-evaluate the smooth anywhere.
struct SmoothEval {
  std::string covariate;
  double x_min = 0.0, x_max = 1.0;
  Eigen::VectorXd knots;  // rescaled to [0,1], ascending
  Eigen::VectorXd delta;  // one kernel coefficient per knot
  double c1 = 0.0, c0 = 0.0;

  double operator()(double x) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
};

// Low-rank thin-plate basis: the cubic kernel on the (distinct) covariate
// values is projected orthogonal to {1, x}, eigendecomposed, and the leading
// k-2 eigenvectors are kept. Column order: k-2 penalized columns, then the
// unpenalized null-space pair (1, x'). Penalty is diagonal.
struct SmoothBasis {
  std::string covariate;
  Eigen::VectorXd x;  // training covariate, original scale
  double x_min = 0.0, x_max = 1.0;
  Eigen::VectorXd knots;          // q rescaled knots
  Eigen::MatrixXd basis_matrix;   // n x k
  Eigen::MatrixXd penalty_matrix; // k x k, diag(d, 0, 0)
  Eigen::VectorXd penalty_diag;   // k-2 eigenvalues, descending
  Eigen::MatrixXd PU;             // q x (k-2), projected eigenvectors
  Eigen::MatrixXd G;              // 2 x (k-2), polynomial correction
  int k = 0;
  int null_dim = 2;

  Eigen::Index n() const { return basis_matrix.rows(); }
  // Design rows for arbitrary covariate values (prediction); at the knots
  // these agree with the training rows.
  Eigen::MatrixXd eval_rows(const Eigen::VectorXd& x_new) const;
};

struct SmoothFit {
  SmoothBasis basis;
  double lambda = 0.0;
  Eigen::VectorXd alpha;  // k coefficients, basis column order
  Eigen::VectorXd fitted;
  double rss = 0.0;
  double edf = 0.0;
  double reml_score = 0.0;
  bool at_boundary = false;  // lambda search stopped at a bound

  SmoothEval eval_form() const;
};

SmoothBasis tps_basis(const Eigen::VectorXd& x, int k, const std::string& covariate = "x");

// Penalized solve at fixed lambda via the augmented system [B; sqrt(lambda S)].
SmoothFit fit_fixed_lambda(const SmoothBasis& basis, const Eigen::VectorXd& y, double lambda);

// REML selection of lambda over log10(lambda) in [-8, 12]: 21-point scan plus
// golden-section refinement to 1e-3.
SmoothFit select_lambda(const SmoothBasis& basis, const Eigen::VectorXd& y);

struct RankCheckStep {
  int k = 0;            // rank of the fit being checked
  double residual_edf = 0.0;
  double f_value = 0.0;
  bool significant = false;
};

struct RankCheckReport {
  bool sufficient = false;
  int k_initial = 0;
  int k_final = 0;
  int doublings = 0;
  std::vector<RankCheckStep> steps;
  SmoothFit final_fit;
  std::string note;
};

// Fits a rank-2k spline to the residuals; if it picks up significant
// structure, doubles k for the main fit and repeats (at most 4 doublings).
RankCheckReport rank_check(const SmoothBasis& basis, const SmoothFit& fit,
                           const Eigen::VectorXd& y);

}  // namespace ambig
