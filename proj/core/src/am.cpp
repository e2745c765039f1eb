#include "ambig/am.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ambig/errors.hpp"
#include "internal/optim.hpp"

namespace ambig {

namespace {

constexpr double kLogLo = -8.0;
constexpr double kLogHi = 12.0;
constexpr double kLogTol = 1e-3;
constexpr int kMaxOuter = 50;

const double kInf = std::numeric_limits<double>::infinity();

struct PenBlock {
  std::string label;
  int offset = 0;  // first penalized coefficient
  int len = 0;     // penalized coefficients in the block
  int smooth_index = -1;
  int re_index = -1;
};

struct ReLayout {
  std::string factor;
  std::vector<std::string> levels;
  std::vector<int> codes;
  int offset = 0;
  int L = 0;
};

// Everything needed to evaluate the REML score at a set of block lambdas.
struct Assembly {
  Eigen::MatrixXd A0;   // X'X, full p x p
  Eigen::VectorXd Xty;  // X'y
  double yty = 0.0;
  Eigen::VectorXd pen_base;  // per-coefficient penalty weight (0 if unpenalized)
  std::vector<PenBlock> pblocks;
  long n = 0;
  int p = 0;
  int n_unpenalized = 0;  // M
  double logdet_base = 0.0;  // sum log pen_base over penalized coords
};

double eval_score(const Assembly& as, const Eigen::VectorXd& rho,
                  Eigen::LDLT<Eigen::MatrixXd>* ldlt_out = nullptr,
                  Eigen::VectorXd* beta_out = nullptr) {
  Eigen::MatrixXd A = as.A0;
  double m_log_lambda = 0.0;
  for (std::size_t b = 0; b < as.pblocks.size(); ++b) {
    const PenBlock& pb = as.pblocks[b];
    double lambda = std::pow(10.0, rho[static_cast<Eigen::Index>(b)]);
    for (int j = pb.offset; j < pb.offset + pb.len; ++j) A(j, j) += lambda * as.pen_base[j];
    m_log_lambda += pb.len * std::log(lambda);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) return kInf;
  const Eigen::VectorXd& D = ldlt.vectorD();
  double logdet_a = 0.0;
  for (Eigen::Index i = 0; i < D.size(); ++i) {
    if (!(D[i] > 0.0) || !std::isfinite(D[i])) return kInf;
    logdet_a += std::log(D[i]);
  }
  Eigen::VectorXd beta = ldlt.solve(as.Xty);
  double dev = as.yty - beta.dot(as.Xty);  // rss + penalty quadratic
  if (!std::isfinite(dev)) return kInf;
  // a zero-residual fit (constant or exactly representable response) is
  // degenerate but legal; keep the score finite so the search can proceed
  dev = std::max(dev, 1e-30 * (as.yty + 1.0));
  const double nm = static_cast<double>(as.n - as.n_unpenalized);
  double sigma2 = dev / nm;
  double score = 0.5 * nm * (std::log(2.0 * M_PI * sigma2) + 1.0) +
                 0.5 * (logdet_a - m_log_lambda - as.logdet_base);
  if (!std::isfinite(score)) return kInf;
  if (ldlt_out) *ldlt_out = std::move(ldlt);
  if (beta_out) *beta_out = std::move(beta);
  return score;
}

}  // namespace

double AmFit::coef(const std::string& name) const {
  for (std::size_t j = 0; j < parametric_names.size(); ++j)
    if (parametric_names[j] == name) return parametric_coefficients[static_cast<Eigen::Index>(j)];
  throw Error("no parametric coefficient named " + name);
}

double AmFit::t_value(const std::string& name) const {
  for (std::size_t j = 0; j < parametric_names.size(); ++j)
    if (parametric_names[j] == name) return parametric_t[static_cast<Eigen::Index>(j)];
  throw Error("no parametric coefficient named " + name);
}

const AmSmoothBlock& AmFit::block(const std::string& covariate) const {
  for (const auto& b : blocks)
    if (b.covariate == covariate) return b;
  throw Error("no smooth block for covariate " + covariate);
}

AmFit fit_am(const AmSpec& spec, const Dataset& ds) {
  if (spec.response.empty()) throw Error("fit_am: spec.response is empty");
  if (!ds.has_column(spec.response)) throw MissingColumn(spec.response);
  if (!ds.is_numeric(spec.response)) throw NotNumeric(spec.response);
  {
    std::set<std::string> seen;
    for (const auto& [cov, k] : spec.smooths)
      if (!seen.insert(cov).second) throw Error("duplicate smooth covariate: " + cov);
    std::set<std::string> res;
    for (const auto& f : spec.random_intercepts)
      if (!res.insert(f).second) throw Error("duplicate random-intercept factor: " + f);
  }

  const Eigen::VectorXd& y = ds.numeric(spec.response).values;
  const long n = static_cast<long>(ds.n());

  // dense (non-indicator) part: intercept | parametric | per-smooth [U m cols, linear]
  std::vector<Eigen::VectorXd> dense_cols;
  std::vector<double> dense_scale;        // applied scale: stored col = raw / scale
  std::vector<double> dense_center;       // applied centering offset on the raw col
  std::vector<int> unpenalized;           // dense column indices with no penalty
  std::vector<std::string> par_names;
  int n_par = 0;

  if (spec.include_intercept) {
    dense_cols.push_back(Eigen::VectorXd::Ones(n));
    dense_scale.push_back(1.0);
    dense_center.push_back(0.0);
    par_names.push_back("(Intercept)");
    ++n_par;
  }
  if (!spec.parametric.terms.empty()) {
    DesignSpec pspec = spec.parametric;
    pspec.intercept = false;
    DesignMatrix dm = build_design(pspec, ds);
    for (Eigen::Index j = 0; j < dm.X.cols(); ++j) {
      double s = std::sqrt(dm.X.col(j).squaredNorm() / static_cast<double>(n));
      if (!(s > 1e-300)) s = 1.0;
      dense_cols.push_back(dm.X.col(j) / s);
      dense_scale.push_back(s);
      dense_center.push_back(0.0);
      par_names.push_back(dm.names[static_cast<std::size_t>(j)]);
      ++n_par;
    }
  }
  for (int j = 0; j < n_par; ++j) unpenalized.push_back(j);

  // smooth blocks: orthonormal eigenvector columns with penalty 1/d
  struct SmoothLayout {
    SmoothBasis basis;
    int offset = 0;  // dense index of first penalized column
    int m = 0;
    double lin_scale = 1.0;
    double lin_center = 0.0;
    Eigen::VectorXd col_center;  // means of the m penalized columns
  };
  std::vector<SmoothLayout> slayouts;
  Assembly as;
  for (const auto& [cov, k] : spec.smooths) {
    if (!ds.has_column(cov)) throw UnknownCovariate(cov);
    if (!ds.is_numeric(cov)) throw NotNumeric(cov);
    SmoothLayout sl;
    sl.basis = tps_basis(ds.numeric(cov).values, k, cov);
    sl.m = k - sl.basis.null_dim;
    sl.offset = static_cast<int>(dense_cols.size());
    const Eigen::MatrixXd& B = sl.basis.basis_matrix;
    // penalized columns, rescaled from U*D to U (penalty d -> 1/d), centered
    sl.col_center.resize(sl.m);
    for (int j = 0; j < sl.m; ++j) {
      Eigen::VectorXd col = B.col(j) / sl.basis.penalty_diag[j];
      sl.col_center[j] = col.mean();
      dense_cols.push_back(col.array() - sl.col_center[j]);
      dense_scale.push_back(1.0);
      dense_center.push_back(sl.col_center[j]);
    }
    // unpenalized linear column, centered and unit-RMS scaled
    Eigen::VectorXd lin = B.col(sl.m + 1);
    sl.lin_center = lin.mean();
    lin.array() -= sl.lin_center;
    sl.lin_scale = std::sqrt(lin.squaredNorm() / static_cast<double>(n));
    if (!(sl.lin_scale > 1e-300)) sl.lin_scale = 1.0;
    unpenalized.push_back(static_cast<int>(dense_cols.size()));
    dense_cols.push_back(lin / sl.lin_scale);
    dense_scale.push_back(sl.lin_scale);
    dense_center.push_back(sl.lin_center);

    PenBlock pb;
    pb.label = "s(" + cov + ")";
    pb.offset = sl.offset;
    pb.len = sl.m;
    pb.smooth_index = static_cast<int>(slayouts.size());
    as.pblocks.push_back(pb);
    slayouts.push_back(std::move(sl));
  }

  const int p_dense = static_cast<int>(dense_cols.size());
  const int M = static_cast<int>(unpenalized.size());
  if (n <= M) throw Underdetermined(n, M);

  // random-effect indicator blocks
  std::vector<ReLayout> relayouts;
  int p = p_dense;
  for (const auto& f : spec.random_intercepts) {
    if (!ds.has_column(f)) throw UnknownCovariate(f);
    if (ds.is_numeric(f)) throw NotFactor(f);
    const FactorColumn& fc = ds.factor(f);
    if (fc.levels.size() < 2) throw DegenerateFactor(f);
    ReLayout rl;
    rl.factor = f;
    rl.levels = fc.levels;
    rl.codes = fc.codes;
    rl.offset = p;
    rl.L = static_cast<int>(fc.levels.size());
    PenBlock pb;
    pb.label = "re(" + f + ")";
    pb.offset = p;
    pb.len = rl.L;
    pb.re_index = static_cast<int>(relayouts.size());
    as.pblocks.push_back(pb);
    p += rl.L;
    relayouts.push_back(std::move(rl));
  }

  Eigen::MatrixXd Xd(n, p_dense);
  for (int j = 0; j < p_dense; ++j) Xd.col(j) = dense_cols[static_cast<std::size_t>(j)];

  {
    Eigen::MatrixXd Xu(n, M);
    for (int j = 0; j < M; ++j) Xu.col(j) = Xd.col(unpenalized[static_cast<std::size_t>(j)]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xu);
    qr.setThreshold(1e-10);
    if (qr.rank() < M) throw SingularDesign(static_cast<long>(qr.rank()), M);
  }

  // Gram assembly, done once
  as.n = n;
  as.p = p;
  as.n_unpenalized = M;
  as.A0 = Eigen::MatrixXd::Zero(p, p);
  as.Xty = Eigen::VectorXd::Zero(p);
  as.yty = y.squaredNorm();
  as.A0.topLeftCorner(p_dense, p_dense).noalias() = Xd.transpose() * Xd;
  as.Xty.head(p_dense).noalias() = Xd.transpose() * y;
  for (const auto& rl : relayouts) {
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p_dense, rl.L);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(rl.L);
    Eigen::VectorXd ysum = Eigen::VectorXd::Zero(rl.L);
    for (long i = 0; i < n; ++i) {
      int c = rl.codes[static_cast<std::size_t>(i)];
      cross.col(c) += Xd.row(i).transpose();
      counts[c] += 1.0;
      ysum[c] += y[i];
    }
    as.A0.block(0, rl.offset, p_dense, rl.L) = cross;
    as.A0.block(rl.offset, 0, rl.L, p_dense) = cross.transpose();
    as.A0.block(rl.offset, rl.offset, rl.L, rl.L).diagonal() = counts;
    as.Xty.segment(rl.offset, rl.L) = ysum;
  }
  for (std::size_t a = 0; a < relayouts.size(); ++a) {
    for (std::size_t b = a + 1; b < relayouts.size(); ++b) {
      const ReLayout& ra = relayouts[a];
      const ReLayout& rb = relayouts[b];
      Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(ra.L, rb.L);
      for (long i = 0; i < n; ++i)
        tab(ra.codes[static_cast<std::size_t>(i)], rb.codes[static_cast<std::size_t>(i)]) += 1.0;
      as.A0.block(ra.offset, rb.offset, ra.L, rb.L) = tab;
      as.A0.block(rb.offset, ra.offset, rb.L, ra.L) = tab.transpose();
    }
  }

  as.pen_base = Eigen::VectorXd::Zero(p);
  as.logdet_base = 0.0;
  for (const PenBlock& pb : as.pblocks) {
    if (pb.smooth_index >= 0) {
      const SmoothLayout& sl = slayouts[static_cast<std::size_t>(pb.smooth_index)];
      for (int j = 0; j < pb.len; ++j) {
        as.pen_base[pb.offset + j] = 1.0 / sl.basis.penalty_diag[j];
        as.logdet_base += std::log(as.pen_base[pb.offset + j]);
      }
    } else {
      for (int j = 0; j < pb.len; ++j) as.pen_base[pb.offset + j] = 1.0;
    }
  }

  AmFit fit;
  fit.spec = spec;
  const int nb = static_cast<int>(as.pblocks.size());
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(nb);
  double best = eval_score(as, rho);
  fit.converged = true;

  if (nb > 0) {
    fit.converged = false;
    for (int outer = 1; outer <= kMaxOuter; ++outer) {
      fit.outer_iterations = outer;
      double max_move = 0.0;
      for (int b = 0; b < nb; ++b) {
        auto fslice = [&](double r) {
          Eigen::VectorXd rr = rho;
          rr[b] = r;
          return eval_score(as, rr);
        };
        detail::LineResult lr;
        if (outer == 1) {
          lr = detail::scan_refine(fslice, kLogLo, kLogHi, 21, 1.0, kLogTol);
        } else {
          double a = std::max(kLogLo, rho[b] - 1.0);
          double c = std::min(kLogHi, rho[b] + 1.0);
          auto [x, s] = detail::golden_min(fslice, a, c, kLogTol);
          lr.x = x;
          lr.score = s;
          lr.at_lower = x <= kLogLo + 2.0 * kLogTol;
          lr.at_upper = x >= kLogHi - 2.0 * kLogTol;
        }
        if (lr.score < best - 1e-9 * (1.0 + std::abs(best))) {
          max_move = std::max(max_move, std::abs(lr.x - rho[b]));
          rho[b] = lr.x;
          best = lr.score;
        }
      }
      if (max_move < kLogTol) {
        fit.converged = true;
        break;
      }
    }
    if (!fit.converged)
      fit.warnings.push_back("NonConvergence: smoothing parameters still moving after " +
                             std::to_string(kMaxOuter) + " outer iterations; best fit returned");
    for (int b = 0; b < nb; ++b) {
      if (rho[b] <= kLogLo + 2.0 * kLogTol || rho[b] >= kLogHi - 2.0 * kLogTol)
        fit.warnings.push_back("BoundaryWarning: " + as.pblocks[static_cast<std::size_t>(b)].label +
                               " lambda search ended at a bound (log10 lambda = " +
                               std::to_string(rho[b]) + ")");
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  Eigen::VectorXd beta;
  double final_score = eval_score(as, rho, &ldlt, &beta);
  if (!std::isfinite(final_score)) throw NumericalFailure("additive model system is singular");
  fit.reml_score = final_score;

  Eigen::VectorXd ainv_diag = ldlt.solve(Eigen::MatrixXd::Identity(p, p)).diagonal();

  double dev = as.yty - beta.dot(as.Xty);
  fit.sigma2 = std::max(dev, 0.0) / static_cast<double>(n - M);

  // fitted values: dense part + random intercepts
  fit.fitted = Xd * beta.head(p_dense);
  for (const auto& rl : relayouts)
    for (long i = 0; i < n; ++i)
      fit.fitted[i] += beta[rl.offset + rl.codes[static_cast<std::size_t>(i)]];
  fit.residuals = y - fit.fitted;
  fit.rss = fit.residuals.squaredNorm();
  double tss = (y.array() - y.mean()).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - fit.rss / tss : 0.0;

  Eigen::VectorXd edf_coord = Eigen::VectorXd::Ones(p);
  for (const PenBlock& pb : as.pblocks) {
    double lambda = std::pow(10.0, rho[&pb - as.pblocks.data()]);
    for (int j = pb.offset; j < pb.offset + pb.len; ++j)
      edf_coord[j] = 1.0 - lambda * as.pen_base[j] * ainv_diag[j];
  }
  fit.edf_total = edf_coord.sum();

  // parametric summaries, mapped back to the raw column scale
  fit.parametric_names = par_names;
  fit.parametric_coefficients.resize(n_par);
  fit.parametric_se.resize(n_par);
  fit.parametric_t.resize(n_par);
  for (int j = 0; j < n_par; ++j) {
    double s = dense_scale[static_cast<std::size_t>(j)];
    fit.parametric_coefficients[j] = beta[j] / s;
    fit.parametric_se[j] = std::sqrt(std::max(fit.sigma2 * ainv_diag[j], 0.0)) / s;
    fit.parametric_t[j] = fit.parametric_se[j] > 0.0
                              ? fit.parametric_coefficients[j] / fit.parametric_se[j]
                              : 0.0;
  }

  for (const PenBlock& pb : as.pblocks) {
    double lambda = std::pow(10.0, rho[&pb - as.pblocks.data()]);
    if (pb.smooth_index >= 0) {
      const SmoothLayout& sl = slayouts[static_cast<std::size_t>(pb.smooth_index)];
      AmSmoothBlock blk;
      blk.covariate = sl.basis.covariate;
      blk.k = sl.basis.k;
      blk.lambda = lambda;
      int lin_index = sl.offset + sl.m;
      blk.edf = edf_coord.segment(sl.offset, sl.m).sum() + edf_coord[lin_index];

      // back to the kernel parametrization: beta_ud = beta_u / d
      Eigen::VectorXd beta_ud(sl.m);
      for (int j = 0; j < sl.m; ++j) beta_ud[j] = beta[sl.offset + j] / sl.basis.penalty_diag[j];
      double gamma = beta[lin_index] / sl.lin_scale;
      SmoothEval ev;
      ev.covariate = sl.basis.covariate;
      ev.x_min = sl.basis.x_min;
      ev.x_max = sl.basis.x_max;
      ev.knots = sl.basis.knots;
      ev.delta = sl.basis.PU * beta_ud;
      Eigen::Vector2d gb = sl.basis.G * beta_ud;
      double const_shift = sl.col_center.dot(beta.segment(sl.offset, sl.m)) +
                           sl.lin_center * gamma;
      ev.c1 = gamma - gb[1];
      ev.c0 = -gb[0] - const_shift;
      blk.eval = std::move(ev);
      blk.contribution = Xd.middleCols(sl.offset, sl.m) * beta.segment(sl.offset, sl.m) +
                         Xd.col(lin_index) * beta[lin_index];
      fit.blocks.push_back(std::move(blk));
    } else {
      const ReLayout& rl = relayouts[static_cast<std::size_t>(pb.re_index)];
      AmRandomEffect re;
      re.factor = rl.factor;
      re.levels = rl.levels;
      re.intercepts = beta.segment(rl.offset, rl.L);
      re.lambda = lambda;
      re.sigma_b2 = fit.sigma2 / lambda;
      re.edf = edf_coord.segment(rl.offset, rl.L).sum();
      fit.random_effects.push_back(std::move(re));
    }
  }
  return fit;
}

Eigen::VectorXd predict(const AmFit& fit, const Dataset& ds_new) {
  const long n = static_cast<long>(ds_new.n());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);

  std::size_t par_idx = 0;
  if (fit.spec.include_intercept) {
    out.array() += fit.parametric_coefficients[0];
    par_idx = 1;
  }
  if (!fit.spec.parametric.terms.empty()) {
    DesignSpec pspec = fit.spec.parametric;
    pspec.intercept = false;
    DesignMatrix dm;
    try {
      dm = build_design(pspec, ds_new);
    } catch (const UnknownCovariate& e) {
      throw MissingCovariate(e.covariate);
    }
    for (Eigen::Index j = 0; j < dm.X.cols(); ++j)
      out += dm.X.col(j) * fit.parametric_coefficients[static_cast<Eigen::Index>(par_idx) + j];
  }
  for (const auto& blk : fit.blocks) {
    if (!ds_new.has_column(blk.covariate)) throw MissingCovariate(blk.covariate);
    out += blk.eval.eval(ds_new.numeric(blk.covariate).values);
  }
  for (const auto& re : fit.random_effects) {
    if (!ds_new.has_column(re.factor)) throw MissingCovariate(re.factor);
    const FactorColumn& fc = ds_new.factor(re.factor);
    std::map<std::string, int> level_of;
    for (std::size_t l = 0; l < re.levels.size(); ++l)
      level_of[re.levels[l]] = static_cast<int>(l);
    for (long i = 0; i < n; ++i) {
      auto it = level_of.find(fc.levels[static_cast<std::size_t>(fc.codes[static_cast<std::size_t>(i)])]);
      if (it != level_of.end()) out[i] += re.intercepts[it->second];
    }
  }
  return out;
}

}  // namespace ambig
