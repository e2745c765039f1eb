#pragma once

#include <string>
#include <vector>

#include "ambig/am.hpp"
#include "ambig/dataset.hpp"
#include "ambig/design.hpp"
#include "ambig/ols.hpp"

namespace ambig {

struct CoefSummary {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
};

// The comparison model: linear mains for every smooth covariate, the user's
// parametric terms, and the interaction products, fitted jointly (as an AMM
// when the step-1 spec carries random intercepts).
struct ParametricSummary {
  std::vector<CoefSummary> coefficients;
  double r_squared = 0.0;
  bool mixed = false;
};

struct InteractionClassification {
  std::string term;
  double t_step2 = 0.0;
  double t_parametric = 0.0;
  std::string label;  // Robust | Ambiguous | AbsentInBoth
};

struct AmbiguityReport {
  AmFit step1;
  OlsFit step2;  // interactions (+ intercept) on step-1 residuals, naive dof
  std::vector<std::string> step2_terms;
  ParametricSummary parametric;
  std::vector<InteractionClassification> classification;
  double threshold = 2.0;
};

// Pure classification rule: Robust iff |t_step2| > thr; Ambiguous iff
// |t_parametric| > thr and |t_step2| <= thr; AbsentInBoth otherwise.
std::string classify_interaction(double t_parametric, double t_step2, double threshold = 2.0);

// The paper's two-step procedure: fit the main-effects AM, then regress the
// centered interaction products on its residuals; a parametric reference fit
// of the same interactions is reported alongside.
AmbiguityReport two_step_test(const AmSpec& spec, const std::vector<Product>& interactions,
                              const Dataset& ds);

struct ComparisonRow {
  std::string term;
  double est_parametric = 0.0, se_parametric = 0.0, t_parametric = 0.0;
  bool in_step2 = false;
  double est_step2 = 0.0, se_step2 = 0.0, t_step2 = 0.0;
};

struct ModelComparison {
  std::vector<ComparisonRow> rows;
  double r2_parametric = 0.0;
  double r2_step2 = 0.0;
  AmbiguityReport report;
};

// Side-by-side table of a user-specified parametric model (fitted as given,
// on the raw covariates) against the two-step residual model.
ModelComparison compare_models(const Dataset& ds, const DesignSpec& parametric,
                               const AmSpec& spec, const std::vector<Product>& interactions);

}  // namespace ambig
