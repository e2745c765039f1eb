#include "ambig/serialize.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "ambig/errors.hpp"

namespace ambig {

namespace {

using njson = nlohmann::ordered_json;

njson vec_json(const Eigen::VectorXd& v) {
  njson a = njson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_parse(const njson& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (const auto& e : a) v[i++] = e.get<double>();
  return v;
}

njson named_map(const std::vector<std::string>& names, const Eigen::VectorXd& v) {
  njson m = njson::object();
  for (std::size_t j = 0; j < names.size(); ++j) m[names[j]] = v[static_cast<Eigen::Index>(j)];
  return m;
}

njson eval_json(const SmoothEval& ev) {
  njson j;
  j["x_min"] = ev.x_min;
  j["x_max"] = ev.x_max;
  j["knots"] = vec_json(ev.knots);
  j["alpha"] = {{"delta", vec_json(ev.delta)}, {"c1", ev.c1}, {"c0", ev.c0}};
  return j;
}

njson data_json(const Dataset& ds) {
  njson j;
  j["rows_dropped"] = ds.rows_dropped;
  njson means = njson::object();
  for (const auto& [name, mean] : ds.centered_means) means[name] = mean;
  j["centered_means"] = means;
  return j;
}

njson am_fit_json(const AmFit& fit) {
  njson j;
  j["response"] = fit.spec.response;
  j["n"] = fit.fitted.size();
  njson blocks = njson::array();
  for (const AmSmoothBlock& b : fit.blocks) {
    njson bj = eval_json(b.eval);
    bj["covariate"] = b.covariate;
    bj["k"] = b.k;
    bj["lambda"] = b.lambda;
    bj["edf"] = b.edf;
    blocks.push_back(std::move(bj));
  }
  j["blocks"] = blocks;
  j["parametric"] = {{"coefficients", named_map(fit.parametric_names, fit.parametric_coefficients)},
                     {"se", named_map(fit.parametric_names, fit.parametric_se)},
                     {"t", named_map(fit.parametric_names, fit.parametric_t)}};
  njson res = njson::array();
  for (const AmRandomEffect& re : fit.random_effects) {
    njson rj;
    rj["factor"] = re.factor;
    rj["sigma_b2"] = re.sigma_b2;
    rj["lambda"] = re.lambda;
    rj["edf"] = re.edf;
    rj["levels"] = re.levels;
    rj["intercepts"] = vec_json(re.intercepts);
    res.push_back(std::move(rj));
  }
  j["random_effects"] = res;
  j["sigma2"] = fit.sigma2;
  j["rss"] = fit.rss;
  j["r2"] = fit.r_squared;
  j["reml_score"] = fit.reml_score;
  j["edf_total"] = fit.edf_total;
  j["converged"] = fit.converged;
  j["outer_iterations"] = fit.outer_iterations;
  j["warnings"] = fit.warnings;
  return j;
}

njson coef_list_json(const std::vector<CoefSummary>& cs) {
  njson a = njson::array();
  for (const CoefSummary& c : cs)
    a.push_back({{"name", c.name}, {"estimate", c.estimate}, {"se", c.se}, {"t", c.t}});
  return a;
}

njson report_json(const AmbiguityReport& rep) {
  njson j;
  j["step1"] = am_fit_json(rep.step1);
  njson terms = njson::array();
  for (const std::string& name : rep.step2_terms) {
    Eigen::Index idx = -1;
    for (std::size_t k = 0; k < rep.step2.names.size(); ++k)
      if (rep.step2.names[k] == name) idx = static_cast<Eigen::Index>(k);
    terms.push_back({{"name", name},
                     {"estimate", rep.step2.beta[idx]},
                     {"se", rep.step2.se[idx]},
                     {"t", rep.step2.t[idx]}});
  }
  j["step2"] = {{"terms", terms}, {"r2", rep.step2.r_squared}};
  j["parametric"] = {{"coefficients", coef_list_json(rep.parametric.coefficients)},
                     {"r2", rep.parametric.r_squared},
                     {"mixed", rep.parametric.mixed}};
  njson cls = njson::object();
  for (const InteractionClassification& c : rep.classification)
    cls[c.term] = {{"label", c.label}, {"t_step2", c.t_step2}, {"t_parametric", c.t_parametric}};
  j["classification"] = cls;
  j["thresholds"] = {{"t", rep.threshold}};
  return j;
}

std::string dump(const njson& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string to_json(const OlsFit& fit) {
  njson j;
  j["coefficients"] = named_map(fit.names, fit.beta);
  j["se"] = named_map(fit.names, fit.se);
  j["t"] = named_map(fit.names, fit.t);
  j["r2"] = fit.r_squared;
  j["n"] = fit.fitted.size();
  j["dof"] = fit.dof_residual;
  return dump(j);
}

std::string to_json(const AnovaTable& table) {
  njson sum_sq = njson::object(), dof = njson::object(), mean_sq = njson::object(),
        f = njson::object();
  for (const AnovaRow& r : table.rows) {
    sum_sq[r.name] = r.sum_sq;
    dof[r.name] = r.dof;
    mean_sq[r.name] = r.mean_sq;
    f[r.name] = r.f_value;
  }
  njson j;
  j["sum_sq"] = sum_sq;
  j["dof"] = dof;
  j["mean_sq"] = mean_sq;
  j["f"] = f;
  return dump(j);
}

std::string to_json(const SmoothFit& fit) {
  SmoothEval ev = fit.eval_form();
  njson j = eval_json(ev);
  j["covariate"] = ev.covariate;
  j["k"] = fit.basis.k;
  j["lambda"] = fit.lambda;
  j["edf"] = fit.edf;
  j["rss"] = fit.rss;
  j["reml_score"] = fit.reml_score;
  j["at_boundary"] = fit.at_boundary;
  return dump(j);
}

std::string to_json(const AmFit& fit) { return dump(am_fit_json(fit)); }

std::string to_json(const AmFit& fit, const Dataset& ds) {
  njson j = am_fit_json(fit);
  j["data"] = data_json(ds);
  return dump(j);
}

std::string to_json(const AmbiguityReport& report) { return dump(report_json(report)); }

std::string to_json(const AmbiguityReport& report, const Dataset& ds) {
  njson j = report_json(report);
  j["data"] = data_json(ds);
  return dump(j);
}

std::string to_json(const StudySummary& summary) {
  RateEstimate rate = estimate_rates(summary);
  njson j;
  j["scenario"] = scenario_name(summary.scenario);
  j["model"] = summary.model_label;
  j["iterations"] = summary.iterations;
  j["master_seed"] = summary.master_seed;
  j["mean_t"] = summary.mean_t;
  j["mean_r2"] = summary.mean_r2;
  j["mean_step2_r2"] = summary.mean_step2_r2;
  j["mean_coefficient"] = summary.mean_coefficient;
  j["rejection_rate"] = summary.rejection_rate;
  j["rejection_se"] = rate.se;
  j["se_reliable"] = rate.reliable;
  j["failures"] = summary.failures;
  return dump(j);
}

std::string iteration_csv(const StudySummary& summary) {
  std::string out = "scenario,iteration,seed,t,coefficient,r2\n";
  const std::string sc = scenario_name(summary.scenario);
  char buf[96];
  for (const IterationRecord& r : summary.records) {
    out += sc;
    std::snprintf(buf, sizeof(buf), ",%ld,%llu,", r.iteration,
                  static_cast<unsigned long long>(r.seed));
    out += buf;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.t, r.coefficient, r.r2);
    out += buf;
  }
  return out;
}

StoredFit load_fit_json(const std::string& text) {
  njson j = njson::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("fit file is not valid JSON");
  auto parse_smooth = [](const njson& b, const njson& top) {
    StoredSmooth s;
    s.covariate = b.at("covariate").get<std::string>();
    s.k = top.at("k").get<int>();
    s.lambda = top.at("lambda").get<double>();
    s.edf = top.at("edf").get<double>();
    s.eval.covariate = s.covariate;
    s.eval.x_min = b.at("x_min").get<double>();
    s.eval.x_max = b.at("x_max").get<double>();
    s.eval.knots = vec_parse(b.at("knots"));
    const njson& a = b.at("alpha");
    s.eval.delta = vec_parse(a.at("delta"));
    s.eval.c1 = a.at("c1").get<double>();
    s.eval.c0 = a.at("c0").get<double>();
    if (s.eval.delta.size() != s.eval.knots.size())
      throw Error("fit file smooth has mismatched knot and coefficient counts");
    return s;
  };
  StoredFit fit;
  try {
    if (j.contains("blocks")) {
      for (const njson& b : j.at("blocks")) fit.smooths.push_back(parse_smooth(b, b));
    } else if (j.contains("covariate") && j.contains("alpha")) {
      fit.smooths.push_back(parse_smooth(j, j));
    } else {
      throw Error("fit file has no smooth blocks");
    }
  } catch (const njson::exception& e) {
    throw Error(std::string("malformed fit file: ") + e.what());
  }
  return fit;
}

}  // namespace ambig
