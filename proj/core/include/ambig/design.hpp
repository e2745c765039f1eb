#ifndef AMBIG_DESIGN_HPP
#define AMBIG_DESIGN_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ambig/dataset.hpp"

namespace ambig {

// Parametric model terms. A Product of a single Power degenerates to a
// polynomial main effect, so "a^2:lw" and "x" both parse to terms.
struct Power {
  std::string covariate;
  int degree = 1;
};

struct Product {
  std::vector<Power> factors;  // distinct covariates
};

struct FactorMain {
  std::string factor;
};

struct FactorInteraction {
  std::string left;
  std::string right;
};

using Term = std::variant<Power, Product, FactorMain, FactorInteraction>;

std::string term_name(const Term& term);

struct DesignSpec {
  bool intercept = true;
  std::vector<Term> terms;
};

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> names;      // one per column
  std::optional<std::string> rank_warning;  // set when numerical rank < p
};

// Realize a DesignSpec on a Dataset. Powers are elementwise; factors use
// sum-to-zero coding (first level -1, later levels +1 on their own column);
// interaction columns are products of the coded mains.
DesignMatrix build_design(const DesignSpec& spec, const Dataset& ds);

// Parse a comma-separated term list: "x, x^2, x:z, a^2:lw". Factor columns
// named bare become FactorMain; "f*g" becomes a FactorInteraction.
// The dataset resolves whether a name is numeric or a factor.
std::vector<Term> parse_terms(const std::string& text, const Dataset& ds);

}  // namespace ambig

#endif
