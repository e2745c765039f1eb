#ifndef AMBIG_ERRORS_HPP
#define AMBIG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ambig {

// Base for all library errors. Subclasses carry the contract name of the
// failure so callers can match on type rather than message text.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class MissingColumn : public Error {
public:
  explicit MissingColumn(const std::string& name)
      : Error("missing column: " + name), column(name) {}
  std::string column;
};

class ParseError : public Error {
public:
  ParseError(std::size_t row, const std::string& column_name)
      : Error("cannot parse row " + std::to_string(row) + ", column '" + column_name + "'"),
        row(row), column(column_name) {}
  std::size_t row;
  std::string column;
};

class EmptyDataset : public Error {
public:
  EmptyDataset() : Error("no rows survived loading") {}
};

class NotNumeric : public Error {
public:
  explicit NotNumeric(const std::string& name)
      : Error("column is not numeric: " + name), column(name) {}
  std::string column;
};

class DegenerateFactor : public Error {
public:
  explicit DegenerateFactor(const std::string& name)
      : Error("factor has a single level: " + name), column(name) {}
  std::string column;
};

class UnknownCovariate : public Error {
public:
  explicit UnknownCovariate(const std::string& name)
      : Error("unknown covariate: " + name), covariate(name) {}
  std::string covariate;
};

class Underdetermined : public Error {
public:
  Underdetermined(std::size_t n, std::size_t p)
      : Error("n = " + std::to_string(n) + " observations cannot identify p = " +
              std::to_string(p) + " coefficients") {}
};

class SingularDesign : public Error {
public:
  explicit SingularDesign(const std::string& detail)
      : Error("design matrix is rank deficient: " + detail) {}
  SingularDesign(long rank, long p)
      : Error("design matrix is rank deficient: numerical rank " + std::to_string(rank) +
              " < p = " + std::to_string(p)) {}
};

class NotFactor : public Error {
public:
  explicit NotFactor(const std::string& name)
      : Error("column is not a factor: " + name), column(name) {}
  std::string column;
};

class EmptyCell : public Error {
public:
  EmptyCell(const std::string& fx, const std::string& fz)
      : Error("empty cell in two-way layout: " + fx + " x " + fz) {}
};

class TooFewDistinctValues : public Error {
public:
  TooFewDistinctValues(const std::string& covariate, std::size_t distinct, int k)
      : Error("covariate '" + covariate + "' has " + std::to_string(distinct) +
              " distinct values, need at least k = " + std::to_string(k)) {}
};

class RankTooSmall : public Error {
public:
  explicit RankTooSmall(int k) : Error("spline rank k = " + std::to_string(k) + " < 3") {}
};

class NumericalFailure : public Error {
public:
  explicit NumericalFailure(const std::string& detail) : Error(detail) {}
};

class CannotDouble : public Error {
public:
  CannotDouble(int k, std::size_t n)
      : Error("cannot double rank: 2k = " + std::to_string(2 * k) + " exceeds n = " +
              std::to_string(n)) {}
};

class MissingCovariate : public Error {
public:
  explicit MissingCovariate(const std::string& name)
      : Error("prediction data lacks covariate: " + name), covariate(name) {}
  std::string covariate;
};

class InteractionNotCovered : public Error {
public:
  explicit InteractionNotCovered(const std::string& name)
      : Error("interaction references covariate '" + name +
              "' absent from the step-1 model"),
        covariate(name) {}
  std::string covariate;
};

class EmptyStudy : public Error {
public:
  EmptyStudy() : Error("a study needs at least one iteration") {}
};

}  // namespace ambig

#endif
