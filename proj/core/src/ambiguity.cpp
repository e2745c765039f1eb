#include "ambig/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ambig/errors.hpp"

namespace ambig {

namespace {

// product columns from mean-centered covariates
Eigen::MatrixXd centered_products(const std::vector<Product>& interactions, const Dataset& ds,
                                  std::vector<std::string>& names) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.n());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(interactions.size()));
  names.clear();
  for (std::size_t t = 0; t < interactions.size(); ++t) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(n);
    for (const Power& pw : interactions[t].factors) {
      if (!ds.has_column(pw.covariate)) throw UnknownCovariate(pw.covariate);
      if (!ds.is_numeric(pw.covariate)) throw NotNumeric(pw.covariate);
      Eigen::VectorXd v = ds.numeric(pw.covariate).values;
      v.array() -= v.mean();
      for (int d = 0; d < pw.degree; ++d) col = col.cwiseProduct(v);
    }
    col.array() -= col.mean();  // keeps the step-2 intercept at zero
    X.col(static_cast<Eigen::Index>(t)) = col;
    names.push_back(term_name(Term{interactions[t]}));
  }
  return X;
}

std::set<std::string> covered_covariates(const AmSpec& spec) {
  std::set<std::string> cov;
  for (const auto& [c, k] : spec.smooths) cov.insert(c);
  for (const Term& t : spec.parametric.terms) {
    if (const auto* p = std::get_if<Power>(&t)) cov.insert(p->covariate);
    if (const auto* prod = std::get_if<Product>(&t))
      for (const Power& pw : prod->factors) cov.insert(pw.covariate);
  }
  return cov;
}

// reference terms: linear mains for the smooths, the user's parametric
// terms, then the interactions; duplicates collapse by name
std::vector<Term> reference_terms(const AmSpec& spec, const std::vector<Product>& interactions) {
  std::vector<Term> terms;
  std::set<std::string> seen;
  auto push = [&](Term t) {
    if (seen.insert(term_name(t)).second) terms.push_back(std::move(t));
  };
  for (const auto& [c, k] : spec.smooths) push(Power{c, 1});
  for (const Term& t : spec.parametric.terms) push(t);
  for (const Product& p : interactions) push(Term{p});
  return terms;
}

}  // namespace

std::string classify_interaction(double t_parametric, double t_step2, double threshold) {
  if (std::abs(t_step2) > threshold) return "Robust";
  if (std::abs(t_parametric) > threshold) return "Ambiguous";
  return "AbsentInBoth";
}

AmbiguityReport two_step_test(const AmSpec& spec, const std::vector<Product>& interactions,
                              const Dataset& ds) {
  if (interactions.empty()) throw Error("two_step_test: no interaction terms given");
  std::set<std::string> covered = covered_covariates(spec);
  for (const Product& p : interactions)
    for (const Power& pw : p.factors)
      if (!covered.count(pw.covariate)) throw InteractionNotCovered(pw.covariate);

  AmbiguityReport rep;
  rep.step1 = fit_am(spec, ds);

  const Eigen::Index n = static_cast<Eigen::Index>(ds.n());
  std::vector<std::string> pnames;
  Eigen::MatrixXd P = centered_products(interactions, ds, pnames);
  Eigen::MatrixXd X2(n, P.cols() + 1);
  X2.col(0).setOnes();
  X2.rightCols(P.cols()) = P;
  std::vector<std::string> names2{"(Intercept)"};
  names2.insert(names2.end(), pnames.begin(), pnames.end());
  rep.step2 = fit_ols(X2, rep.step1.residuals, names2);
  rep.step2_terms = pnames;

  // parametric reference on the same data
  std::vector<Term> rterms = reference_terms(spec, interactions);
  std::vector<Term> non_interaction = rterms;
  non_interaction.resize(rterms.size() - interactions.size());
  // interaction columns are the centered products; the rest enter raw
  if (spec.random_intercepts.empty()) {
    DesignSpec rspec;
    rspec.terms = non_interaction;
    DesignMatrix dm = build_design(rspec, ds);
    Eigen::MatrixXd X(n, dm.X.cols() + P.cols());
    X.leftCols(dm.X.cols()) = dm.X;
    X.rightCols(P.cols()) = P;
    std::vector<std::string> names = dm.names;
    names.insert(names.end(), pnames.begin(), pnames.end());
    OlsFit f = fit_ols(X, ds.numeric(spec.response).values, names);
    rep.parametric.mixed = false;
    rep.parametric.r_squared = f.r_squared;
    for (std::size_t j = 0; j < f.names.size(); ++j)
      rep.parametric.coefficients.push_back(
          {f.names[j], f.beta[static_cast<Eigen::Index>(j)], f.se[static_cast<Eigen::Index>(j)],
           f.t[static_cast<Eigen::Index>(j)]});
  } else {
    // mixed reference: same fixed effects plus the step-1 random intercepts
    Dataset work = ds;
    std::vector<Term> amm_terms = non_interaction;
    for (std::size_t t = 0; t < interactions.size(); ++t) {
      std::string cname = "interaction_" + std::to_string(t);
      work.add_numeric(cname, P.col(static_cast<Eigen::Index>(t)));
      amm_terms.push_back(Power{cname, 1});
    }
    AmSpec rspec;
    rspec.response = spec.response;
    rspec.parametric.terms = amm_terms;
    rspec.random_intercepts = spec.random_intercepts;
    AmFit f = fit_am(rspec, work);
    rep.parametric.mixed = true;
    rep.parametric.r_squared = f.r_squared;
    for (std::size_t j = 0; j < f.parametric_names.size(); ++j) {
      std::string name = f.parametric_names[j];
      for (std::size_t t = 0; t < interactions.size(); ++t)
        if (name == "interaction_" + std::to_string(t)) name = pnames[t];
      rep.parametric.coefficients.push_back({name,
                                             f.parametric_coefficients[static_cast<Eigen::Index>(j)],
                                             f.parametric_se[static_cast<Eigen::Index>(j)],
                                             f.parametric_t[static_cast<Eigen::Index>(j)]});
    }
  }

  for (std::size_t t = 0; t < interactions.size(); ++t) {
    InteractionClassification cl;
    cl.term = pnames[t];
    cl.t_step2 = rep.step2.t_value(cl.term);
    for (const CoefSummary& c : rep.parametric.coefficients)
      if (c.name == cl.term) cl.t_parametric = c.t;
    cl.label = classify_interaction(cl.t_parametric, cl.t_step2, rep.threshold);
    rep.classification.push_back(std::move(cl));
  }
  return rep;
}

ModelComparison compare_models(const Dataset& ds, const DesignSpec& parametric,
                               const AmSpec& spec, const std::vector<Product>& interactions) {
  ModelComparison cmp;
  cmp.report = two_step_test(spec, interactions, ds);
  cmp.r2_step2 = cmp.report.step2.r_squared;

  std::vector<CoefSummary> pc;
  if (spec.random_intercepts.empty()) {
    OlsFit f = fit_ols(parametric, ds);
    cmp.r2_parametric = f.r_squared;
    for (std::size_t j = 0; j < f.names.size(); ++j)
      pc.push_back({f.names[j], f.beta[static_cast<Eigen::Index>(j)],
                    f.se[static_cast<Eigen::Index>(j)], f.t[static_cast<Eigen::Index>(j)]});
  } else {
    AmSpec pspec;
    pspec.response = spec.response;
    pspec.parametric = parametric;
    pspec.include_intercept = parametric.intercept;
    pspec.random_intercepts = spec.random_intercepts;
    AmFit f = fit_am(pspec, ds);
    cmp.r2_parametric = f.r_squared;
    for (std::size_t j = 0; j < f.parametric_names.size(); ++j)
      pc.push_back({f.parametric_names[j],
                    f.parametric_coefficients[static_cast<Eigen::Index>(j)],
                    f.parametric_se[static_cast<Eigen::Index>(j)],
                    f.parametric_t[static_cast<Eigen::Index>(j)]});
  }

  for (const CoefSummary& c : pc) {
    ComparisonRow row;
    row.term = c.name;
    row.est_parametric = c.estimate;
    row.se_parametric = c.se;
    row.t_parametric = c.t;
    for (std::size_t j = 0; j < cmp.report.step2_terms.size(); ++j) {
      if (cmp.report.step2_terms[j] == c.name) {
        row.in_step2 = true;
        row.est_step2 = cmp.report.step2.coef(c.name);
        row.se_step2 = cmp.report.step2.se[static_cast<Eigen::Index>(j) + 1];
        row.t_step2 = cmp.report.step2.t_value(c.name);
      }
    }
    cmp.rows.push_back(std::move(row));
  }
  return cmp;
}

}  // namespace ambig
