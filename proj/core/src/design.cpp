#include "ambig/design.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ambig/errors.hpp"

namespace ambig {

namespace {

std::string power_name(const Power& p) {
  if (p.degree == 1) return p.covariate;
  return p.covariate + "^" + std::to_string(p.degree);
}

Eigen::VectorXd power_column(const Power& p, const Dataset& ds) {
  if (!ds.has_column(p.covariate)) throw UnknownCovariate(p.covariate);
  if (!ds.is_numeric(p.covariate)) throw NotNumeric(p.covariate);
  Eigen::VectorXd v = ds.numeric(p.covariate).values;
  if (p.degree == 1) return v;
  return v.array().pow(p.degree).matrix();
}

// Sum-to-zero coding: L-1 columns; the first level codes -1 everywhere,
// level j >= 1 codes +1 on column j-1. For two levels this is the single
// -1/+1 column whose product with another coded factor matches the
// continuous product term.
Eigen::MatrixXd factor_coding(const FactorColumn& f, Eigen::Index n) {
  const int levels = static_cast<int>(f.levels.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, levels - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    int code = f.codes[static_cast<std::size_t>(i)];
    if (code == 0) {
      C.row(i).setConstant(-1.0);
    } else {
      C(i, code - 1) = 1.0;
    }
  }
  return C;
}

}  // namespace

std::string term_name(const Term& term) {
  if (const auto* p = std::get_if<Power>(&term)) return power_name(*p);
  if (const auto* prod = std::get_if<Product>(&term)) {
    std::string name;
    for (std::size_t i = 0; i < prod->factors.size(); ++i) {
      if (i) name += ":";
      name += power_name(prod->factors[i]);
    }
    return name;
  }
  if (const auto* fm = std::get_if<FactorMain>(&term)) return fm->factor;
  const auto& fi = std::get<FactorInteraction>(term);
  return fi.left + ":" + fi.right;
}

DesignMatrix build_design(const DesignSpec& spec, const Dataset& ds) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.n());

  {
    std::set<std::string> seen;
    for (const auto& t : spec.terms)
      if (!seen.insert(term_name(t)).second)
        throw Error("duplicate term in design: " + term_name(t));
  }

  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> names;
  if (spec.intercept) {
    cols.push_back(Eigen::VectorXd::Ones(n));
    names.push_back("(Intercept)");
  }

  for (const auto& term : spec.terms) {
    if (const auto* p = std::get_if<Power>(&term)) {
      cols.push_back(power_column(*p, ds));
      names.push_back(power_name(*p));
    } else if (const auto* prod = std::get_if<Product>(&term)) {
      std::set<std::string> covs;
      for (const auto& f : prod->factors)
        if (!covs.insert(f.covariate).second)
          throw Error("product term repeats covariate: " + f.covariate);
      Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
      for (const auto& f : prod->factors) v = v.cwiseProduct(power_column(f, ds));
      cols.push_back(std::move(v));
      names.push_back(term_name(term));
    } else if (const auto* fm = std::get_if<FactorMain>(&term)) {
      if (!ds.has_column(fm->factor)) throw UnknownCovariate(fm->factor);
      const auto& f = ds.factor(fm->factor);
      if (f.levels.size() < 2) throw DegenerateFactor(fm->factor);
      Eigen::MatrixXd C = factor_coding(f, n);
      for (Eigen::Index j = 0; j < C.cols(); ++j) {
        cols.push_back(C.col(j));
        names.push_back(C.cols() == 1 ? fm->factor
                                      : fm->factor + "[" + f.levels[j + 1] + "]");
      }
    } else {
      const auto& fi = std::get<FactorInteraction>(term);
      if (!ds.has_column(fi.left)) throw UnknownCovariate(fi.left);
      if (!ds.has_column(fi.right)) throw UnknownCovariate(fi.right);
      const auto& fl = ds.factor(fi.left);
      const auto& fr = ds.factor(fi.right);
      Eigen::MatrixXd Cl = factor_coding(fl, n);
      Eigen::MatrixXd Cr = factor_coding(fr, n);
      for (Eigen::Index a = 0; a < Cl.cols(); ++a) {
        for (Eigen::Index b = 0; b < Cr.cols(); ++b) {
          cols.push_back(Cl.col(a).cwiseProduct(Cr.col(b)));
          std::string lname = Cl.cols() == 1 ? fi.left : fi.left + "[" + fl.levels[a + 1] + "]";
          std::string rname = Cr.cols() == 1 ? fi.right : fi.right + "[" + fr.levels[b + 1] + "]";
          names.push_back(lname + ":" + rname);
        }
      }
    }
  }

  DesignMatrix dm;
  dm.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) dm.X.col(static_cast<Eigen::Index>(j)) = cols[j];
  dm.names = std::move(names);

  if (dm.X.cols() > 0 && n >= dm.X.cols()) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dm.X);
    qr.setThreshold(1e-10);
    if (qr.rank() < dm.X.cols()) {
      dm.rank_warning = "numerical rank " + std::to_string(qr.rank()) + " < p = " +
                        std::to_string(dm.X.cols());
    }
  }
  return dm;
}

std::vector<Term> parse_terms(const std::string& text, const Dataset& ds) {
  std::vector<Term> terms;
  std::stringstream ss(text);
  std::string item;
  auto trim = [](std::string s) {
    auto issp = [](char c) { return c == ' ' || c == '\t'; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
  };
  auto parse_power = [&](const std::string& atom) -> Power {
    auto caret = atom.find('^');
    if (caret == std::string::npos) return Power{atom, 1};
    int deg = std::stoi(atom.substr(caret + 1));
    if (deg < 1) throw Error("power degree must be >= 1 in term '" + atom + "'");
    return Power{atom.substr(0, caret), deg};
  };
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto star = item.find('*');
    if (star != std::string::npos) {
      terms.push_back(FactorInteraction{trim(item.substr(0, star)), trim(item.substr(star + 1))});
      continue;
    }
    std::vector<std::string> atoms;
    std::stringstream ts(item);
    std::string atom;
    while (std::getline(ts, atom, ':')) atoms.push_back(trim(atom));
    if (atoms.size() == 1) {
      const std::string& a = atoms[0];
      if (a.find('^') == std::string::npos && ds.has_column(a) && !ds.is_numeric(a)) {
        terms.push_back(FactorMain{a});
      } else {
        terms.push_back(parse_power(a));
      }
    } else {
      Product prod;
      for (const auto& a : atoms) prod.factors.push_back(parse_power(a));
      terms.push_back(std::move(prod));
    }
  }
  return terms;
}

}  // namespace ambig
