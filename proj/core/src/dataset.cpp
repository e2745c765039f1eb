#include "ambig/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ambig/errors.hpp"

namespace ambig {

namespace {

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan";
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out, std::chars_format::general);
  while (ptr < end && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
  return ec == std::errc{} && ptr == end;
}

// One CSV record, honoring quoted fields ("" escapes a quote). Returns false
// on end of stream. Quoted fields may span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (!any) return false;
  fields.push_back(field);
  return true;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

bool Dataset::has_column(const std::string& name) const { return index_.count(name) > 0; }

std::size_t Dataset::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw MissingColumn(name);
  return it->second;
}

bool Dataset::is_numeric(const std::string& name) const {
  return std::holds_alternative<NumericColumn>(columns_[index_of(name)]);
}

const NumericColumn& Dataset::numeric(const std::string& name) const {
  const auto& col = columns_[index_of(name)];
  if (!std::holds_alternative<NumericColumn>(col)) throw NotNumeric(name);
  return std::get<NumericColumn>(col);
}

const FactorColumn& Dataset::factor(const std::string& name) const {
  const auto& col = columns_[index_of(name)];
  if (!std::holds_alternative<FactorColumn>(col))
    throw Error("column is not a factor: " + name);
  return std::get<FactorColumn>(col);
}

void Dataset::add_numeric(const std::string& name, Eigen::VectorXd values) {
  if (name.empty()) throw Error("column name must be non-empty");
  if (index_.count(name)) throw Error("duplicate column name: " + name);
  if (!empty_ && static_cast<std::size_t>(values.size()) != n_)
    throw Error("column length mismatch for '" + name + "'");
  if (!values.allFinite()) throw Error("non-finite value in numeric column '" + name + "'");
  if (empty_) {
    n_ = static_cast<std::size_t>(values.size());
    empty_ = false;
  }
  index_[name] = columns_.size();
  names_.push_back(name);
  columns_.emplace_back(NumericColumn{std::move(values)});
}

void Dataset::add_factor(const std::string& name, std::vector<int> codes,
                         std::vector<std::string> levels) {
  if (name.empty()) throw Error("column name must be non-empty");
  if (index_.count(name)) throw Error("duplicate column name: " + name);
  if (!empty_ && codes.size() != n_) throw Error("column length mismatch for '" + name + "'");
  for (int c : codes)
    if (c < 0 || static_cast<std::size_t>(c) >= levels.size())
      throw Error("factor code out of range in '" + name + "'");
  if (empty_) {
    n_ = codes.size();
    empty_ = false;
  }
  index_[name] = columns_.size();
  names_.push_back(name);
  columns_.emplace_back(FactorColumn{std::move(codes), std::move(levels)});
}

void Dataset::set_response(const std::string& name) {
  index_of(name);
  response_name_ = name;
}

Dataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);

  {
    int responses = 0;
    for (const auto& s : schema)
      if (s.role == ColumnRole::Response) ++responses;
    if (responses > 1) throw Error("schema declares more than one response column");
  }

  std::vector<std::string> header;
  if (!read_record(in, header)) throw Error("empty file: " + path);

  std::vector<std::size_t> col_index(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    auto it = std::find(header.begin(), header.end(), schema[j].name);
    if (it == header.end()) throw MissingColumn(schema[j].name);
    col_index[j] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> numeric_data(schema.size());
  std::vector<std::vector<int>> factor_data(schema.size());
  std::vector<std::vector<std::string>> factor_levels(schema.size());
  std::vector<std::map<std::string, int>> factor_lookup(schema.size());

  std::vector<std::string> fields;
  std::size_t row = 0;        // 1-based data row number, for error messages
  std::size_t dropped = 0;
  while (read_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) {  // blank line
      --row;
      continue;
    }
    bool missing = false;
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (col_index[j] >= fields.size() || is_missing_token(fields[col_index[j]])) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    // parse numerics first so a ParseError leaves no partial row appended
    std::vector<double> parsed(schema.size(), 0.0);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema[j].kind != ColumnKind::Numeric) continue;
      double v;
      if (!parse_double(fields[col_index[j]], v) || !std::isfinite(v))
        throw ParseError(row, schema[j].name);
      parsed[j] = v;
    }
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema[j].kind == ColumnKind::Numeric) {
        numeric_data[j].push_back(parsed[j]);
      } else {
        const std::string& label = fields[col_index[j]];
        auto [it, inserted] =
            factor_lookup[j].try_emplace(label, static_cast<int>(factor_levels[j].size()));
        if (inserted) factor_levels[j].push_back(label);
        factor_data[j].push_back(it->second);
      }
    }
  }

  if (schema.empty()) throw Error("schema must declare at least one column");
  const std::size_t kept =
      schema[0].kind == ColumnKind::Numeric ? numeric_data[0].size() : factor_data[0].size();
  if (kept == 0) throw EmptyDataset();

  Dataset ds;
  ds.rows_dropped = dropped;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind == ColumnKind::Numeric) {
      ds.add_numeric(schema[j].name,
                     Eigen::Map<Eigen::VectorXd>(numeric_data[j].data(),
                                                 static_cast<Eigen::Index>(kept)));
    } else {
      ds.add_factor(schema[j].name, std::move(factor_data[j]), std::move(factor_levels[j]));
    }
    if (schema[j].role == ColumnRole::Response) ds.set_response(schema[j].name);
  }
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open file for writing: " + path);
  const auto& names = ds.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out << ',';
    out << quote_if_needed(names[j]);
  }
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (j) out << ',';
      if (ds.is_numeric(names[j])) {
        std::snprintf(buf, sizeof(buf), "%.17g", ds.numeric(names[j]).values[i]);
        out << buf;
      } else {
        const auto& f = ds.factor(names[j]);
        out << quote_if_needed(f.levels[f.codes[i]]);
      }
    }
    out << '\n';
  }
}

Dataset center(const Dataset& ds, const std::vector<std::string>& names) {
  Dataset out = ds;
  for (const auto& name : names) {
    if (!out.has_column(name)) throw MissingColumn(name);
    if (!out.is_numeric(name)) throw NotNumeric(name);
  }
  // rebuild with centered columns, preserving order
  Dataset result;
  result.rows_dropped = ds.rows_dropped;
  result.centered_means = ds.centered_means;
  for (const auto& col : ds.column_names()) {
    bool hit = std::find(names.begin(), names.end(), col) != names.end();
    if (ds.is_numeric(col)) {
      Eigen::VectorXd v = ds.numeric(col).values;
      if (hit) {
        double mean = v.size() ? v.mean() : 0.0;
        v.array() -= mean;
        result.centered_means[col] += mean;
      }
      result.add_numeric(col, std::move(v));
    } else {
      auto f = ds.factor(col);
      result.add_factor(col, f.codes, f.levels);
    }
  }
  if (ds.response_name()) result.set_response(*ds.response_name());
  return result;
}

Dataset dichotomize(const Dataset& ds, const std::string& name, double threshold) {
  const auto& col = ds.numeric(name);
  std::vector<int> codes(ds.n());
  std::size_t negs = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    codes[i] = col.values[i] < threshold ? 0 : 1;
    negs += codes[i] == 0;
  }
  if (negs == 0 || negs == ds.n()) throw DegenerateFactor(name + "_f");
  Dataset out = ds;
  out.add_factor(name + "_f", std::move(codes), {"neg", "pos"});
  return out;
}

}  // namespace ambig
