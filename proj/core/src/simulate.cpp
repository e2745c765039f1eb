#include "ambig/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "ambig/ambiguity.hpp"
#include "ambig/errors.hpp"
#include "ambig/ols.hpp"
#include "ambig/rng.hpp"

namespace ambig {

std::string scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::Intro: return "intro";
    case ScenarioId::S1: return "s1";
    case ScenarioId::S2: return "s2";
    case ScenarioId::S3: return "s3";
    case ScenarioId::S4: return "s4";
    case ScenarioId::S5: return "s5";
    case ScenarioId::S6: return "s6";
    case ScenarioId::S7: return "s7";
  }
  return "s1";
}

ScenarioId scenario_from_name(const std::string& name) {
  for (ScenarioId id : {ScenarioId::Intro, ScenarioId::S1, ScenarioId::S2, ScenarioId::S3,
                        ScenarioId::S4, ScenarioId::S5, ScenarioId::S6, ScenarioId::S7})
    if (scenario_name(id) == name) return id;
  throw Error("unknown scenario: " + name + " (expected intro or s1..s7)");
}

Scenario make_scenario(ScenarioId id, std::uint64_t seed) {
  Scenario sc;
  sc.id = id;
  sc.seed = seed;
  switch (id) {
    case ScenarioId::Intro:
      sc.n = 5000;
      sc.law = Scenario::Law::Linear;
      sc.w_x = 0.5;
      sc.w_u = 0.5;
      sc.process = Scenario::Process::XSquared;
      break;
    case ScenarioId::S1:
    case ScenarioId::S2:
    case ScenarioId::S3:
      sc.n = 1000;
      sc.law = Scenario::Law::Linear;
      sc.w_x = 1.0 / 3.0;
      sc.w_u = 2.0 / 3.0;
      sc.process = Scenario::Process::XSquared;
      break;
    case ScenarioId::S4:
      sc.n = 1000;
      sc.law = Scenario::Law::Linear;
      sc.w_x = 1.0 / 3.0;
      sc.w_u = 2.0 / 3.0;
      sc.process = Scenario::Process::XZ;
      break;
    case ScenarioId::S5:
      sc.n = 1000;
      sc.law = Scenario::Law::Linear;
      sc.w_x = 1.0 / 3.0;
      sc.w_u = 2.0 / 3.0;
      sc.process = Scenario::Process::XCubed;
      break;
    case ScenarioId::S6:
    case ScenarioId::S7:
      sc.n = 1000;
      sc.law = Scenario::Law::Quadratic;
      sc.process = Scenario::Process::XCubed;
      break;
  }
  return sc;
}

Dataset generate(const Scenario& sc) {
  if (sc.n < 10) throw Error("scenario sample size must be >= 10");
  SplitMix64 rng(sc.seed);
  Eigen::VectorXd x(sc.n), z(sc.n), y(sc.n);
  for (long i = 0; i < sc.n; ++i) {
    double xi = rng.next_symmetric();
    double ui = rng.next_symmetric();
    double eps = sc.noise_sd * rng.next_normal();
    double zi = sc.law == Scenario::Law::Linear ? sc.w_x * xi + sc.w_u * ui
                                                : 4.0 * xi * xi + ui;
    double yi;
    switch (sc.process) {
      case Scenario::Process::XSquared: yi = xi * xi + eps; break;
      case Scenario::Process::XZ: yi = xi * zi + eps; break;
      default: yi = xi * xi * xi + eps; break;
    }
    x[i] = xi;
    z[i] = zi;
    y[i] = yi;
  }
  Dataset ds;
  ds.add_numeric("y", y);
  ds.add_numeric("x", x);
  ds.add_numeric("z", z);
  ds.set_response("y");
  return ds;
}

std::string ModelPipeline::interaction_name() const {
  return interactions.empty() ? std::string() : term_name(Term{interactions.front()});
}

ModelPipeline default_pipeline(ScenarioId id) {
  ModelPipeline mp;
  mp.interactions = {Product{{Power{"x", 1}, Power{"z", 1}}}};
  switch (id) {
    case ScenarioId::Intro:
    case ScenarioId::S1:
      mp.kind = ModelPipeline::Kind::ParametricLM;
      mp.lm.intercept = true;
      mp.lm.terms = {Power{"x", 1}, Power{"z", 1}, Product{{Power{"x", 1}, Power{"z", 1}}}};
      mp.label = "LM: x, z, x:z";
      break;
    case ScenarioId::S2:
    case ScenarioId::S5:
    case ScenarioId::S6:
      mp.kind = ModelPipeline::Kind::ParametricLM;
      mp.lm.intercept = true;
      mp.lm.terms = {Power{"x", 1}, Power{"x", 2}, Product{{Power{"x", 1}, Power{"z", 1}}}};
      mp.label = "LM: x, x^2, x:z";
      break;
    case ScenarioId::S3:
    case ScenarioId::S4:
    case ScenarioId::S7:
      mp.kind = ModelPipeline::Kind::TwoStep;
      mp.am.response = "y";
      mp.am.smooths = {{"x", 10}, {"z", 10}};
      mp.label = "two-step AM: s(x) + s(z), then x:z on residuals";
      break;
  }
  return mp;
}

int resolve_threads(long items) {
  unsigned hw = std::thread::hardware_concurrency();
  long t = hw == 0 ? 1 : static_cast<long>(hw);
  if (const char* env = std::getenv("AMBIG_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) t = std::min(t, cap);
  }
  if (items > 0) t = std::min(t, items);
  return static_cast<int>(std::max(1L, t));
}

namespace {

IterationRecord run_iteration(const Scenario& sc, const ModelPipeline& mp, long index) {
  IterationRecord rec;
  rec.iteration = index;
  rec.seed = derive_stream_seed(sc.seed, static_cast<std::uint64_t>(index));
  rec.t = std::numeric_limits<double>::quiet_NaN();
  rec.coefficient = std::numeric_limits<double>::quiet_NaN();
  rec.r2 = std::numeric_limits<double>::quiet_NaN();
  rec.r2_step2 = std::numeric_limits<double>::quiet_NaN();
  try {
    Scenario it = sc;
    it.seed = rec.seed;
    Dataset ds = generate(it);
    const std::string iname = mp.interaction_name();
    if (mp.kind == ModelPipeline::Kind::ParametricLM) {
      OlsFit f = fit_ols(mp.lm, ds);
      rec.t = f.t_value(iname);
      rec.coefficient = f.coef(iname);
      rec.r2 = f.r_squared;
    } else {
      AmbiguityReport rep = two_step_test(mp.am, mp.interactions, ds);
      rec.t = rep.step2.t_value(iname);
      rec.coefficient = rep.step2.coef(iname);
      rec.r2 = rep.step1.r_squared;
      rec.r2_step2 = rep.step2.r_squared;
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

StudySummary run_study(const Scenario& sc, const ModelPipeline& mp, long iterations,
                       int threads) {
  if (iterations == 0) throw EmptyStudy();
  if (iterations < 0) throw Error("iterations must be positive");

  StudySummary s;
  s.scenario = sc.id;
  s.model_label = mp.label;
  s.iterations = iterations;
  s.master_seed = sc.seed;
  s.records.resize(static_cast<std::size_t>(iterations));

  int nthreads = threads > 0 ? static_cast<int>(std::min<long>(threads, iterations))
                             : resolve_threads(iterations);
  if (nthreads <= 1) {
    for (long i = 0; i < iterations; ++i)
      s.records[static_cast<std::size_t>(i)] = run_iteration(sc, mp, i);
  } else {
    std::atomic<long> next{0};
    auto worker = [&]() {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= iterations) break;
        s.records[static_cast<std::size_t>(i)] = run_iteration(sc, mp, i);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // aggregate in index order so the summary is identical for any thread count
  double sum_t = 0.0, sum_r2 = 0.0, sum_s2 = 0.0, sum_c = 0.0;
  long ok = 0, rejected = 0, with_s2 = 0;
  for (const IterationRecord& r : s.records) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    ++ok;
    sum_t += r.t;
    sum_r2 += r.r2;
    sum_c += r.coefficient;
    if (std::isfinite(r.r2_step2)) {
      sum_s2 += r.r2_step2;
      ++with_s2;
    }
    if (std::abs(r.t) > 2.0) ++rejected;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.mean_t = ok > 0 ? sum_t / static_cast<double>(ok) : nan;
  s.mean_r2 = ok > 0 ? sum_r2 / static_cast<double>(ok) : nan;
  s.mean_coefficient = ok > 0 ? sum_c / static_cast<double>(ok) : nan;
  s.mean_step2_r2 = with_s2 > 0 ? sum_s2 / static_cast<double>(with_s2) : nan;
  s.rejection_rate = ok > 0 ? static_cast<double>(rejected) / static_cast<double>(ok) : nan;
  return s;
}

RateEstimate estimate_rates(const StudySummary& summary) {
  long ok = summary.iterations - summary.failures;
  RateEstimate est;
  est.rate = summary.rejection_rate;
  est.se = ok > 0 ? std::sqrt(std::max(est.rate * (1.0 - est.rate), 0.0) /
                              static_cast<double>(ok))
                  : std::numeric_limits<double>::quiet_NaN();
  est.reliable = ok >= 30;
  return est;
}

}  // namespace ambig
