#pragma once

#include <string>
#include <vector>

#include "ambig/dataset.hpp"

namespace ambig {

struct AnovaRow {
  std::string name;
  double sum_sq = 0.0;
  long dof = 0;
  double mean_sq = 0.0;
  double f_value = 0.0;  // NaN on the residual row
};

struct AnovaTable {
  std::vector<AnovaRow> rows;  // fx, fz, fx:fz, Residuals
  const AnovaRow& row(const std::string& name) const;
};

// Two-way ANOVA with Type-II sums of squares: each main effect adjusted for
// the other main, interaction adjusted for both mains, residual from the
// full cell-means model. Handles unbalanced cells.
AnovaTable anova_two_way(const Dataset& ds, const std::string& y,
                         const std::string& fx, const std::string& fz);

}  // namespace ambig
