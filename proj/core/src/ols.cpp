#include "ambig/ols.hpp"

#include "ambig/errors.hpp"

namespace ambig {

OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const std::vector<std::string>& names) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw Error("fit_ols: y length does not match X rows");
  if (n <= p) throw Underdetermined(static_cast<long>(n), static_cast<long>(p));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw SingularDesign(static_cast<long>(qr.rank()), static_cast<long>(p));

  OlsFit fit;
  fit.names = names;
  fit.beta = qr.solve(y);
  fit.fitted = X * fit.beta;
  fit.residuals = y - fit.fitted;
  fit.rss = fit.residuals.squaredNorm();
  fit.dof_residual = static_cast<long>(n - p);
  fit.sigma2_hat = fit.rss / static_cast<double>(fit.dof_residual);

  // (X'X)^-1 diag through the pivoted R factor: X P = Q R so
  // (X'X)^-1 = P R^-1 R^-T P'.
  Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  Eigen::MatrixXd Rinv = R.inverse();
  Eigen::VectorXd diag_perm = (Rinv * Rinv.transpose()).diagonal();
  Eigen::VectorXd diag(p);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index j = 0; j < p; ++j) diag[perm[j]] = diag_perm[j];

  fit.se = (fit.sigma2_hat * diag.array()).sqrt().matrix();
  fit.t = fit.beta.cwiseQuotient(fit.se);

  double tss = (y.array() - y.mean()).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - fit.rss / tss : 0.0;
  return fit;
}

OlsFit fit_ols(const DesignSpec& spec, const Dataset& ds) {
  DesignMatrix dm = build_design(spec, ds);
  if (!ds.response_name()) throw Error("dataset has no response column");
  const Eigen::VectorXd& y = ds.numeric(*ds.response_name()).values;
  return fit_ols(dm.X, y, dm.names);
}

Eigen::VectorXd residualize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.cols() == 0) return y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  return y - X * qr.solve(y);
}

Dataset residualize(const Dataset& ds, const std::string& target,
                    const DesignSpec& predictors) {
  if (!ds.has_column(target)) throw MissingColumn(target);
  if (!ds.is_numeric(target)) throw NotNumeric(target);
  DesignMatrix dm = build_design(predictors, ds);
  const Eigen::VectorXd& y = ds.numeric(target).values;
  OlsFit fit = fit_ols(dm.X, y, dm.names);

  Dataset out = ds;
  out.add_numeric(target + "_resid", fit.residuals);
  return out;
}

double OlsFit::coef(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return beta[static_cast<Eigen::Index>(j)];
  throw Error("no coefficient named " + name);
}

double OlsFit::t_value(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return t[static_cast<Eigen::Index>(j)];
  throw Error("no coefficient named " + name);
}

}  // namespace ambig
