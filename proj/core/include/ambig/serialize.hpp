#pragma once

#include <string>
#include <vector>

#include "ambig/am.hpp"
#include "ambig/ambiguity.hpp"
#include "ambig/anova.hpp"
#include "ambig/dataset.hpp"
#include "ambig/ols.hpp"
#include "ambig/simulate.hpp"
#include "ambig/smooth.hpp"

namespace ambig {

// JSON report writers. Numbers use the shortest round-trip representation,
// so reruns with the same seed produce byte-identical files; NaN becomes
// null. Overloads taking a Dataset append a "data" block with the rows
// dropped at load time and any stored centering means.
std::string to_json(const OlsFit& fit);
std::string to_json(const AnovaTable& table);
std::string to_json(const SmoothFit& fit);
std::string to_json(const AmFit& fit);
std::string to_json(const AmFit& fit, const Dataset& ds);
std::string to_json(const AmbiguityReport& report);
std::string to_json(const AmbiguityReport& report, const Dataset& ds);
std::string to_json(const StudySummary& summary);

// Flat per-iteration table: scenario,iteration,seed,t,coefficient,r2.
std::string iteration_csv(const StudySummary& summary);

// The evaluable part of a stored fit, as read back from a JSON report.
struct StoredSmooth {
  std::string covariate;
  int k = 0;
  double lambda = 0.0;
  double edf = 0.0;
  SmoothEval eval;
};

struct StoredFit {
  std::vector<StoredSmooth> smooths;
};

// Reads the smooth blocks back out of a to_json(AmFit) or to_json(SmoothFit)
// report. Throws Error on malformed input, UnknownCovariate never (that is
// the caller's lookup problem).
StoredFit load_fit_json(const std::string& text);

}  // namespace ambig
