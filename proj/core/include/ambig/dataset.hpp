#ifndef AMBIG_DATASET_HPP
#define AMBIG_DATASET_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ambig {

// A numeric column holds finite doubles; a factor column holds integer level
// codes plus the level labels in first-appearance order.
struct NumericColumn {
  Eigen::VectorXd values;
};

struct FactorColumn {
  std::vector<int> codes;
  std::vector<std::string> levels;
};

enum class ColumnKind { Numeric, Factor };
enum class ColumnRole { Response, Covariate, Group };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  ColumnRole role = ColumnRole::Covariate;
};

// Immutable columnar table. Transformations (center, dichotomize, ...)
// return new Datasets; concurrent reads are safe.
class Dataset {
public:
  Dataset() = default;

  std::size_t n() const { return n_; }
  bool has_column(const std::string& name) const;
  bool is_numeric(const std::string& name) const;
  const NumericColumn& numeric(const std::string& name) const;
  const FactorColumn& factor(const std::string& name) const;
  const std::vector<std::string>& column_names() const { return names_; }

  const std::optional<std::string>& response_name() const { return response_name_; }

  // Load-time bookkeeping carried into downstream JSON reports.
  std::size_t rows_dropped = 0;
  std::map<std::string, double> centered_means;

  // Builders. add_* reject duplicate names, length mismatches and (for
  // numeric data) non-finite values.
  void add_numeric(const std::string& name, Eigen::VectorXd values);
  void add_factor(const std::string& name, std::vector<int> codes,
                  std::vector<std::string> levels);
  void set_response(const std::string& name);

private:
  std::size_t n_ = 0;
  bool empty_ = true;
  std::vector<std::string> names_;
  std::vector<std::variant<NumericColumn, FactorColumn>> columns_;
  std::map<std::string, std::size_t> index_;
  std::optional<std::string> response_name_;

  std::size_t index_of(const std::string& name) const;
};

// CSV ingestion (RFC-4180-style quoting, mandatory header, '.' decimals).
// Rows with a missing declared value ("", "NA", "NaN") are dropped listwise
// and counted in Dataset::rows_dropped.
Dataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema);

// Write every column with 17 significant digits so a load_csv round trip is
// bit exact.
void write_csv(const Dataset& ds, const std::string& path);

// Replace each named numeric column by value - mean; means accumulate in
// Dataset::centered_means for back-transformation.
Dataset center(const Dataset& ds, const std::vector<std::string>& names);

// Add factor column `<name>_f` with level "neg" where value < threshold and
// "pos" where value >= threshold.
Dataset dichotomize(const Dataset& ds, const std::string& name, double threshold);

}  // namespace ambig

#endif
