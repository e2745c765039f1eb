#include "ambig/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ambig/errors.hpp"
#include "ambig/rng.hpp"
#include "internal/optim.hpp"

namespace ambig {

namespace {

inline double eta(double r) { return r * r * r * (1.0 / 12.0); }

constexpr int kMaxKnots = 1000;
constexpr double kLogLo = -8.0;
constexpr double kLogHi = 12.0;
constexpr double kLogTol = 1e-3;

// Leading m eigenpairs of a symmetric PSD matrix. Dense solve for small
// problems; deterministic subspace iteration (Gaussian sketch, 3 power
// steps) when the matrix is large and m is small relative to q.
void top_eigenpairs(const Eigen::MatrixXd& A, int m, Eigen::MatrixXd& U, Eigen::VectorXd& d) {
  const int q = static_cast<int>(A.rows());
  const int p = std::min(q, m + 15);
  if (q <= 400 || 3 * p >= q) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    U.resize(q, m);
    d.resize(m);
    for (int j = 0; j < m; ++j) {
      U.col(j) = es.eigenvectors().col(q - 1 - j);
      d[j] = es.eigenvalues()[q - 1 - j];
    }
    return;
  }
  SplitMix64 rng(mix64(0x545053u ^ (static_cast<uint64_t>(q) << 20) ^ static_cast<uint64_t>(m)));
  Eigen::MatrixXd Y(q, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < q; ++i) Y(i, j) = rng.next_normal();
  Y = A * Y;
  Eigen::MatrixXd Q;
  for (int it = 0; it < 3; ++it) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Q = qr.householderQ() * Eigen::MatrixXd::Identity(q, p);
    Y = A * Q;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
  Q = qr.householderQ() * Eigen::MatrixXd::Identity(q, p);
  Eigen::MatrixXd T = Q.transpose() * (A * Q);
  T = 0.5 * (T + T.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  U.resize(q, m);
  d.resize(m);
  for (int j = 0; j < m; ++j) {
    d[j] = es.eigenvalues()[p - 1 - j];
    U.col(j) = Q * es.eigenvectors().col(p - 1 - j);
  }
}

struct FixedCore {
  Eigen::VectorXd alpha;
  double rss = 0.0;
  double pen = 0.0;      // lambda * alpha'S alpha
  double logdet_a = 0.0; // log|B'B + lambda S|
  double edf = 0.0;
  bool ok = false;
};

FixedCore solve_fixed(const SmoothBasis& b, const Eigen::VectorXd& y, double lambda) {
  const Eigen::Index n = b.n();
  const int k = b.k;
  const int m = k - b.null_dim;
  Eigen::MatrixXd Baug = Eigen::MatrixXd::Zero(n + m, k);
  Baug.topRows(n) = b.basis_matrix;
  for (int j = 0; j < m; ++j) Baug(n + j, j) = std::sqrt(lambda * b.penalty_diag[j]);
  Eigen::VectorXd yaug = Eigen::VectorXd::Zero(n + m);
  yaug.head(n) = y;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Baug);
  qr.setThreshold(1e-10);
  FixedCore core;
  if (qr.rank() < k) return core;
  core.alpha = qr.solve(yaug);
  core.rss = (y - b.basis_matrix * core.alpha).squaredNorm();
  core.pen = 0.0;
  for (int j = 0; j < m; ++j)
    core.pen += lambda * b.penalty_diag[j] * core.alpha[j] * core.alpha[j];

  Eigen::MatrixXd R =
      qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  core.logdet_a = 0.0;
  for (int j = 0; j < k; ++j) core.logdet_a += 2.0 * std::log(std::abs(R(j, j)));

  if (lambda == 0.0) {
    core.edf = static_cast<double>(k);
  } else {
    Eigen::MatrixXd Rinv = R.inverse();
    Eigen::VectorXd diag_perm = (Rinv * Rinv.transpose()).diagonal();
    const auto& perm = qr.colsPermutation().indices();
    Eigen::VectorXd ainv_diag(k);
    for (int j = 0; j < k; ++j) ainv_diag[perm[j]] = diag_perm[j];
    double tr = 0.0;
    for (int j = 0; j < m; ++j) tr += b.penalty_diag[j] * ainv_diag[j];
    core.edf = static_cast<double>(k) - lambda * tr;
  }
  core.ok = true;
  return core;
}

double reml_of(const FixedCore& core, const SmoothBasis& b, Eigen::Index n, double lambda) {
  const int m = b.k - b.null_dim;
  const double nm = static_cast<double>(n - b.null_dim);
  double sigma2 = (core.rss + core.pen) / nm;
  sigma2 = std::max(sigma2, 1e-30);  // zero-residual responses stay scoreable
  double logdet_s = 0.0;
  for (int j = 0; j < m; ++j) logdet_s += std::log(lambda * b.penalty_diag[j]);
  return 0.5 * nm * (std::log(2.0 * M_PI * sigma2) + 1.0) +
         0.5 * (core.logdet_a - logdet_s);
}

}  // namespace

double SmoothEval::operator()(double xv) const {
  double xt = (xv - x_min) / (x_max - x_min);
  double s = c0 + c1 * xt;
  for (Eigen::Index j = 0; j < knots.size(); ++j) s += delta[j] * eta(std::abs(xt - knots[j]));
  return s;
}

Eigen::VectorXd SmoothEval::eval(const Eigen::VectorXd& xs) const {
  Eigen::VectorXd out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = (*this)(xs[i]);
  return out;
}

Eigen::MatrixXd SmoothBasis::eval_rows(const Eigen::VectorXd& x_new) const {
  const Eigen::Index nn = x_new.size();
  const Eigen::Index q = knots.size();
  const int m = k - null_dim;
  Eigen::VectorXd xt = (x_new.array() - x_min) / (x_max - x_min);
  Eigen::MatrixXd K(nn, q);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 0; j < q; ++j) K(i, j) = eta(std::abs(xt[i] - knots[j]));
  Eigen::MatrixXd rows(nn, k);
  rows.leftCols(m).noalias() = K * PU;
  rows.leftCols(m).noalias() -= Eigen::VectorXd::Ones(nn) * G.row(0);
  rows.leftCols(m).noalias() -= xt * G.row(1);
  rows.col(m).setOnes();
  rows.col(m + 1) = xt;
  return rows;
}

SmoothBasis tps_basis(const Eigen::VectorXd& x, int k, const std::string& covariate) {
  const Eigen::Index n = x.size();
  if (k < 3) throw RankTooSmall(k);

  SmoothBasis bs;
  bs.covariate = covariate;
  bs.x = x;
  bs.k = k;
  bs.x_min = x.minCoeff();
  bs.x_max = x.maxCoeff();
  const double range = bs.x_max - bs.x_min;
  if (!(range > 0.0)) throw TooFewDistinctValues(covariate, 1, k);

  Eigen::VectorXd xt = (x.array() - bs.x_min) / range;
  std::vector<double> vals(xt.data(), xt.data() + n);
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  const long q_all = static_cast<long>(vals.size());
  if (q_all < k) throw TooFewDistinctValues(covariate, q_all, k);

  std::vector<double> kn;
  if (q_all <= kMaxKnots) {
    kn = vals;
  } else {
    kn.reserve(kMaxKnots);
    for (int j = 0; j < kMaxKnots; ++j) {
      long idx = std::lround(static_cast<double>(j) * static_cast<double>(q_all - 1) /
                             static_cast<double>(kMaxKnots - 1));
      kn.push_back(vals[static_cast<std::size_t>(idx)]);
    }
  }
  const Eigen::Index q = static_cast<Eigen::Index>(kn.size());
  bs.knots = Eigen::Map<Eigen::VectorXd>(kn.data(), q);

  Eigen::MatrixXd E(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    E(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < q; ++j) {
      double v = eta(kn[static_cast<std::size_t>(j)] - kn[static_cast<std::size_t>(i)]);
      E(i, j) = v;
      E(j, i) = v;
    }
  }

  Eigen::MatrixXd T(q, 2);
  T.col(0).setOnes();
  T.col(1) = bs.knots;
  Eigen::HouseholderQR<Eigen::MatrixXd> tqr(T);
  Eigen::MatrixXd Q2 = tqr.householderQ() * Eigen::MatrixXd::Identity(q, 2);

  Eigen::MatrixXd EQ = E * Q2;
  Eigen::MatrixXd QtEQ = Q2.transpose() * EQ;
  Eigen::MatrixXd Etil = E - Q2 * EQ.transpose() - EQ * Q2.transpose() +
                         Q2 * QtEQ * Q2.transpose();
  Etil = 0.5 * (Etil + Etil.transpose()).eval();

  const int m = k - bs.null_dim;
  Eigen::MatrixXd U;
  Eigen::VectorXd d;
  top_eigenpairs(Etil, m, U, d);
  if (!(d[0] > 0.0)) throw NumericalFailure("thin-plate kernel eigenvalues are not positive");
  for (int j = 0; j < m; ++j) d[j] = std::max(d[j], 1e-12 * d[0]);
  U -= Q2 * (Q2.transpose() * U).eval();

  bs.PU = U;
  bs.penalty_diag = d;
  bs.G = tqr.solve(E * U);

  bs.penalty_matrix = Eigen::MatrixXd::Zero(k, k);
  bs.penalty_matrix.topLeftCorner(m, m) = d.asDiagonal();

  if (q == q_all) {
    Eigen::MatrixXd UD = U * d.asDiagonal();
    bs.basis_matrix.resize(n, k);
    const double* kb = kn.data();
    for (Eigen::Index i = 0; i < n; ++i) {
      auto it = std::lower_bound(kb, kb + q, xt[i]);
      bs.basis_matrix.row(i).head(m) = UD.row(it - kb);
    }
    bs.basis_matrix.col(m).setOnes();
    bs.basis_matrix.col(m + 1) = xt;
  } else {
    bs.basis_matrix = bs.eval_rows(x);
  }
  return bs;
}

SmoothEval SmoothFit::eval_form() const {
  const int m = basis.k - basis.null_dim;
  Eigen::VectorXd beta = alpha.head(m);
  SmoothEval ev;
  ev.covariate = basis.covariate;
  ev.x_min = basis.x_min;
  ev.x_max = basis.x_max;
  ev.knots = basis.knots;
  ev.delta = basis.PU * beta;
  Eigen::Vector2d gb = basis.G * beta;
  ev.c0 = alpha[m] - gb[0];
  ev.c1 = alpha[m + 1] - gb[1];
  return ev;
}

SmoothFit fit_fixed_lambda(const SmoothBasis& basis, const Eigen::VectorXd& y, double lambda) {
  if (y.size() != basis.n()) throw Error("fit_fixed_lambda: y length does not match basis");
  if (lambda < 0.0) throw Error("fit_fixed_lambda: lambda must be >= 0");
  FixedCore core = solve_fixed(basis, y, lambda);
  if (!core.ok) throw NumericalFailure("augmented spline system is rank deficient");
  SmoothFit fit;
  fit.basis = basis;
  fit.lambda = lambda;
  fit.alpha = core.alpha;
  fit.fitted = basis.basis_matrix * core.alpha;
  fit.rss = core.rss;
  fit.edf = core.edf;
  fit.reml_score = reml_of(core, basis, basis.n(), lambda);
  return fit;
}

SmoothFit select_lambda(const SmoothBasis& basis, const Eigen::VectorXd& y) {
  if (y.size() != basis.n()) throw Error("select_lambda: y length does not match basis");
  auto score = [&](double rho) -> double {
    FixedCore core = solve_fixed(basis, y, std::pow(10.0, rho));
    if (!core.ok) return std::numeric_limits<double>::infinity();
    return reml_of(core, basis, basis.n(), std::pow(10.0, rho));
  };
  detail::LineResult r = detail::scan_refine(score, kLogLo, kLogHi, 21, 1.0, kLogTol);
  SmoothFit fit = fit_fixed_lambda(basis, y, std::pow(10.0, r.x));
  fit.at_boundary = r.at_lower || r.at_upper;
  return fit;
}

RankCheckReport rank_check(const SmoothBasis& basis, const SmoothFit& fit,
                           const Eigen::VectorXd& y) {
  const Eigen::Index n = basis.n();
  if (2L * basis.k > n) throw CannotDouble(basis.k, static_cast<long>(n));

  RankCheckReport rep;
  rep.k_initial = basis.k;
  rep.final_fit = fit;
  int k = basis.k;

  for (;;) {
    if (2L * k > n) {
      rep.note = "CannotDouble: residual check at rank 2k exceeds sample size";
      break;
    }
    SmoothBasis rb;
    try {
      rb = tps_basis(basis.x, 2 * k, basis.covariate);
    } catch (const TooFewDistinctValues&) {
      rep.note = "CannotDouble: fewer than 2k distinct covariate values";
      break;
    }
    Eigen::VectorXd resid = y - rep.final_fit.fitted;
    SmoothFit rfit = select_lambda(rb, resid);

    // null comparison for the residual spline: the OLS line in x
    Eigen::MatrixXd X0 = rb.basis_matrix.rightCols(2);
    Eigen::VectorXd r0 = resid - X0 * X0.householderQr().solve(resid);
    double rss0 = r0.squaredNorm();
    double edf_excess = rfit.edf - rb.null_dim;
    double num_df = std::max(edf_excess, 1e-8);
    double f = ((rss0 - rfit.rss) / num_df) /
               (rfit.rss / (static_cast<double>(n) - rfit.edf));
    bool significant = edf_excess > 0.5 && f > 4.0;
    rep.steps.push_back({k, rfit.edf, f, significant});

    if (!significant) {
      rep.sufficient = true;
      break;
    }
    if (rep.doublings == 4) {
      rep.note = "residual spline still significant after 4 doublings";
      break;
    }
    k *= 2;
    rep.final_fit = select_lambda(rb, y);
    ++rep.doublings;
  }
  rep.k_final = k;
  return rep;
}

}  // namespace ambig
