#include "ambig/anova.hpp"

#include <cmath>
#include <map>

#include "ambig/design.hpp"
#include "ambig/errors.hpp"
#include "ambig/ols.hpp"

namespace ambig {

const AnovaRow& AnovaTable::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw Error("no ANOVA row named " + name);
}

namespace {

double rss_of(const Dataset& ds, const std::string& y, std::vector<Term> terms) {
  DesignSpec spec;
  spec.terms = std::move(terms);
  DesignMatrix dm = build_design(spec, ds);
  return fit_ols(dm.X, ds.numeric(y).values, dm.names).rss;
}

}  // namespace

AnovaTable anova_two_way(const Dataset& ds, const std::string& y,
                         const std::string& fx, const std::string& fz) {
  for (const auto& name : {fx, fz}) {
    if (!ds.has_column(name)) throw MissingColumn(name);
    if (ds.is_numeric(name)) throw NotFactor(name);
    if (ds.factor(name).levels.size() < 2) throw DegenerateFactor(name);
  }
  if (!ds.has_column(y)) throw MissingColumn(y);
  if (!ds.is_numeric(y)) throw NotNumeric(y);

  const auto& cx = ds.factor(fx);
  const auto& cz = ds.factor(fz);
  const long lx = static_cast<long>(cx.levels.size());
  const long lz = static_cast<long>(cz.levels.size());
  std::map<std::pair<int, int>, long> cell_counts;
  for (std::size_t i = 0; i < ds.n(); ++i) ++cell_counts[{cx.codes[i], cz.codes[i]}];
  for (int a = 0; a < lx; ++a)
    for (int b = 0; b < lz; ++b)
      if (!cell_counts.count({a, b})) throw EmptyCell(cx.levels[a], cz.levels[b]);

  double rss_x = rss_of(ds, y, {FactorMain{fx}});
  double rss_z = rss_of(ds, y, {FactorMain{fz}});
  double rss_xz = rss_of(ds, y, {FactorMain{fx}, FactorMain{fz}});
  double rss_full =
      rss_of(ds, y, {FactorMain{fx}, FactorMain{fz}, FactorInteraction{fx, fz}});

  const long n = static_cast<long>(ds.n());
  const long dof_resid = n - lx * lz;
  const double ms_resid = rss_full / static_cast<double>(dof_resid);

  auto make_row = [&](std::string name, double ss, long dof) {
    AnovaRow r;
    r.name = std::move(name);
    r.sum_sq = std::max(ss, 0.0);
    r.dof = dof;
    r.mean_sq = r.sum_sq / static_cast<double>(dof);
    r.f_value = r.mean_sq / ms_resid;
    return r;
  };

  AnovaTable table;
  table.rows.push_back(make_row(fx, rss_z - rss_xz, lx - 1));
  table.rows.push_back(make_row(fz, rss_x - rss_xz, lz - 1));
  table.rows.push_back(make_row(fx + ":" + fz, rss_xz - rss_full, (lx - 1) * (lz - 1)));
  AnovaRow resid = make_row("Residuals", rss_full, dof_resid);
  resid.f_value = std::numeric_limits<double>::quiet_NaN();
  table.rows.push_back(resid);
  return table;
}

}  // namespace ambig
