#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>

#include "ambig/errors.hpp"
#include "ambig/rng.hpp"
#include "ambig/simulate.hpp"
#include "test_support.hpp"

using namespace ambig;

TEST_SUITE("simulate") {

TEST_CASE("scenario defaults follow the study table") {
  Scenario intro = make_scenario(ScenarioId::Intro, 1);
  CHECK(intro.n == 5000);
  CHECK(intro.law == Scenario::Law::Linear);
  CHECK(intro.w_x == doctest::Approx(0.5));
  CHECK(intro.w_u == doctest::Approx(0.5));
  CHECK(intro.process == Scenario::Process::XSquared);

  Scenario s1 = make_scenario(ScenarioId::S1, 1);
  CHECK(s1.n == 1000);
  CHECK(s1.w_x == doctest::Approx(1.0 / 3.0));
  CHECK(s1.w_u == doctest::Approx(2.0 / 3.0));

  CHECK(make_scenario(ScenarioId::S4, 1).process == Scenario::Process::XZ);
  CHECK(make_scenario(ScenarioId::S5, 1).process == Scenario::Process::XCubed);
  // S6 and S7 share the generating process; the analyzing model differs
  Scenario s6 = make_scenario(ScenarioId::S6, 1);
  CHECK(s6.law == Scenario::Law::Quadratic);
  CHECK(s6.process == Scenario::Process::XCubed);
  Scenario s7 = make_scenario(ScenarioId::S7, 1);
  CHECK(s7.law == Scenario::Law::Quadratic);
  CHECK(s7.process == Scenario::Process::XCubed);
}

TEST_CASE("scenario names round trip and unknowns throw") {
  for (auto id : {ScenarioId::Intro, ScenarioId::S1, ScenarioId::S2, ScenarioId::S3,
                  ScenarioId::S4, ScenarioId::S5, ScenarioId::S6, ScenarioId::S7})
    CHECK(scenario_from_name(scenario_name(id)) == id);
  CHECK_THROWS_AS(scenario_from_name("s99"), Error);
  CHECK_THROWS_AS(scenario_from_name(""), Error);
}

TEST_CASE("identical seeds give bit-identical datasets") {
  Scenario sc = make_scenario(ScenarioId::S2, 987654321);
  Dataset a = generate(sc);
  Dataset b = generate(sc);
  CHECK(testsup::bit_equal(a.numeric("y").values, b.numeric("y").values));
  CHECK(testsup::bit_equal(a.numeric("x").values, b.numeric("x").values));
  CHECK(testsup::bit_equal(a.numeric("z").values, b.numeric("z").values));
  Scenario sc2 = sc;
  sc2.seed = 987654322;
  Dataset c = generate(sc2);
  CHECK(!testsup::bit_equal(a.numeric("y").values, c.numeric("y").values));
  CHECK(a.response_name() == "y");
  CHECK(a.n() == 1000);
}

TEST_CASE("tiny n is rejected") {
  Scenario sc = make_scenario(ScenarioId::S1, 5);
  sc.n = 9;
  CHECK_THROWS_AS(generate(sc), Error);
}

TEST_CASE("linear law correlations match the design values") {
  // cor(x,z) = w_x sd_x / sd_z; S1: 1/sqrt(5) ~ 0.447, intro: 1/sqrt(2) ~ 0.707
  Scenario s1 = make_scenario(ScenarioId::S1, 2024);
  s1.n = 20000;
  Dataset d1 = generate(s1);
  CHECK(std::fabs(testsup::correlation(d1.numeric("x").values, d1.numeric("z").values) -
                  1.0 / std::sqrt(5.0)) < 0.02);

  Scenario in = make_scenario(ScenarioId::Intro, 2025);
  in.n = 20000;
  Dataset di = generate(in);
  CHECK(std::fabs(testsup::correlation(di.numeric("x").values, di.numeric("z").values) -
                  1.0 / std::sqrt(2.0)) < 0.02);
}

TEST_CASE("quadratic law decorrelates x and z linearly") {
  Scenario sc = make_scenario(ScenarioId::S6, 777);
  sc.n = 10000;
  Dataset ds = generate(sc);
  const Eigen::VectorXd& x = ds.numeric("x").values;
  const Eigen::VectorXd& z = ds.numeric("z").values;
  CHECK(std::fabs(testsup::correlation(x, z)) < 0.05);
  Eigen::VectorXd x2 = x.array().square();
  CHECK(testsup::correlation(x2, z) > 0.5);
}

TEST_CASE("binned conditional means trace the squared signal") {
  Scenario sc = make_scenario(ScenarioId::S1, 31337);
  sc.n = 100000;
  Dataset ds = generate(sc);
  const Eigen::VectorXd& x = ds.numeric("x").values;
  const Eigen::VectorXd& y = ds.numeric("y").values;
  const int bins = 10;
  for (int b = 0; b < bins; ++b) {
    double lo = -1.0 + 2.0 * b / bins, hi = lo + 2.0 / bins;
    double sum = 0.0, sum2 = 0.0;
    long cnt = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] >= lo && x[i] < hi) {
        sum += y[i];
        sum2 += y[i] * y[i];
        ++cnt;
      }
    REQUIRE(cnt > 1000);
    double mean = sum / cnt;
    double var = sum2 / cnt - mean * mean;
    double se = std::sqrt(var / cnt);
    double mid = 0.5 * (lo + hi);
    // E[y | x in bin] = E[x^2 | bin] = mid^2 + width^2/12
    double expect = mid * mid + (2.0 / bins) * (2.0 / bins) / 12.0;
    CHECK(std::fabs(mean - expect) < 3.5 * se);
  }
}

TEST_CASE("xz and cubed processes produce their signals") {
  Scenario s4 = make_scenario(ScenarioId::S4, 99);
  s4.n = 50000;
  s4.noise_sd = 0.0;
  Dataset d4 = generate(s4);
  Eigen::VectorXd prod =
      d4.numeric("x").values.cwiseProduct(d4.numeric("z").values);
  CHECK((d4.numeric("y").values - prod).cwiseAbs().maxCoeff() <= 1e-12);

  Scenario s5 = make_scenario(ScenarioId::S5, 99);
  s5.n = 1000;
  s5.noise_sd = 0.0;
  Dataset d5 = generate(s5);
  Eigen::VectorXd cube = d5.numeric("x").values.array().cube();
  CHECK((d5.numeric("y").values - cube).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("study records are reproducible and thread-count invariant") {
  Scenario sc = make_scenario(ScenarioId::S1, 424242);
  ModelPipeline mp = default_pipeline(ScenarioId::S1);
  StudySummary one = run_study(sc, mp, 12, 1);
  StudySummary three = run_study(sc, mp, 12, 3);
  REQUIRE(one.records.size() == 12);
  REQUIRE(three.records.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(one.records[i].iteration == static_cast<long>(i));
    CHECK(one.records[i].seed == derive_stream_seed(424242, static_cast<long>(i)));
    CHECK(testsup::bit_equal(one.records[i].t, three.records[i].t));
    CHECK(testsup::bit_equal(one.records[i].coefficient, three.records[i].coefficient));
    CHECK(testsup::bit_equal(one.records[i].r2, three.records[i].r2));
    CHECK(one.records[i].ok);
  }
  CHECK(testsup::bit_equal(one.mean_t, three.mean_t));
  CHECK(testsup::bit_equal(one.rejection_rate, three.rejection_rate));
  CHECK(one.master_seed == 424242);
  CHECK(one.iterations == 12);
  CHECK(one.failures == 0);
}

TEST_CASE("summary statistics recompute from the records") {
  Scenario sc = make_scenario(ScenarioId::S4, 5150);
  ModelPipeline mp = default_pipeline(ScenarioId::S4);
  StudySummary s = run_study(sc, mp, 15, 1);
  double st = 0.0, sc2 = 0.0, sr = 0.0, s2 = 0.0;
  long rej = 0, ok = 0;
  for (const auto& r : s.records) {
    if (!r.ok) continue;
    ++ok;
    st += r.t;
    sc2 += r.coefficient;
    sr += r.r2;
    s2 += r.r2_step2;
    if (std::fabs(r.t) > 2.0) ++rej;
  }
  REQUIRE(ok == 15);
  CHECK(std::fabs(s.mean_t - st / ok) <= 1e-12 * std::max(1.0, std::fabs(s.mean_t)));
  CHECK(std::fabs(s.mean_coefficient - sc2 / ok) <= 1e-12);
  CHECK(std::fabs(s.mean_r2 - sr / ok) <= 1e-12);
  CHECK(std::fabs(s.mean_step2_r2 - s2 / ok) <= 1e-12);
  CHECK(s.rejection_rate == doctest::Approx(static_cast<double>(rej) / ok));
  RateEstimate re = estimate_rates(s);
  CHECK(re.rate == doctest::Approx(s.rejection_rate));
  double p = s.rejection_rate;
  CHECK(re.se == doctest::Approx(std::sqrt(p * (1.0 - p) / ok)).epsilon(1e-12));
  CHECK(!re.reliable);  // 15 < 30
}

TEST_CASE("reliability flag flips at thirty successes") {
  Scenario sc = make_scenario(ScenarioId::S1, 31);
  ModelPipeline mp = default_pipeline(ScenarioId::S1);
  StudySummary s = run_study(sc, mp, 30, 1);
  CHECK(estimate_rates(s).reliable);
}

TEST_CASE("iteration counts are validated") {
  Scenario sc = make_scenario(ScenarioId::S1, 1);
  ModelPipeline mp = default_pipeline(ScenarioId::S1);
  CHECK_THROWS_AS(run_study(sc, mp, 0, 1), EmptyStudy);
  CHECK_THROWS_AS(run_study(sc, mp, -5, 1), Error);
}

TEST_CASE("pipeline failures are recorded not thrown") {
  Scenario sc = make_scenario(ScenarioId::S1, 61);
  ModelPipeline mp = default_pipeline(ScenarioId::S1);
  // sabotage: reference a column the generator never emits
  mp.lm.terms.push_back(Power{"q", 1});
  StudySummary s = run_study(sc, mp, 4, 1);
  CHECK(s.failures == 4);
  for (const auto& r : s.records) {
    CHECK(!r.ok);
    CHECK(!r.error.empty());
    CHECK(std::isnan(r.t));
  }
  CHECK(std::isnan(s.mean_t));
  CHECK(std::isnan(s.rejection_rate));
}

TEST_CASE("two-step pipelines report both r-squareds") {
  Scenario sc = make_scenario(ScenarioId::S3, 8);
  ModelPipeline mp = default_pipeline(ScenarioId::S3);
  CHECK(mp.kind == ModelPipeline::Kind::TwoStep);
  StudySummary s = run_study(sc, mp, 3, 1);
  for (const auto& r : s.records) {
    CHECK(std::isfinite(r.r2_step2));
    CHECK(r.r2_step2 >= 0.0);
    CHECK(r.r2 >= 0.0);
  }
  ModelPipeline lm = default_pipeline(ScenarioId::S1);
  CHECK(lm.kind == ModelPipeline::Kind::ParametricLM);
  StudySummary sl = run_study(make_scenario(ScenarioId::S1, 8), lm, 3, 1);
  for (const auto& r : sl.records) CHECK(std::isnan(r.r2_step2));
  CHECK(std::isnan(sl.mean_step2_r2));
}

TEST_CASE("worker resolution respects the environment cap") {
  ::setenv("AMBIG_THREADS", "2", 1);
  int t = resolve_threads(100);
  CHECK(t >= 1);
  CHECK(t <= 2);
  ::setenv("AMBIG_THREADS", "64", 1);
  CHECK(resolve_threads(3) <= 3);
  CHECK(resolve_threads(1) == 1);
  ::unsetenv("AMBIG_THREADS");
  int free_t = resolve_threads(8);
  CHECK(free_t >= 1);
  CHECK(free_t <= 8);
}

}  // TEST_SUITE
