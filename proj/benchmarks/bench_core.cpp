#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "ambig/am.hpp"
#include "ambig/ambiguity.hpp"
#include "ambig/rng.hpp"
#include "ambig/simulate.hpp"
#include "ambig/smooth.hpp"

using namespace ambig;

namespace {

Eigen::VectorXd uniform_vec(SplitMix64& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.next_symmetric();
  return v;
}

struct SmoothProblem {
  Eigen::VectorXd x, y;
  SmoothProblem(int n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    x = uniform_vec(rng, n);
    y.resize(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(3.0 * x[i]) + 0.4 * rng.next_normal();
  }
};

void BM_TpsBasis(benchmark::State& state) {
  SmoothProblem p(static_cast<int>(state.range(0)), 99001);
  for (auto _ : state) {
    SmoothBasis b = tps_basis(p.x, 20);
    benchmark::DoNotOptimize(b.basis_matrix.data());
  }
}
BENCHMARK(BM_TpsBasis)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitFixedLambda(benchmark::State& state) {
  SmoothProblem p(static_cast<int>(state.range(0)), 99002);
  SmoothBasis b = tps_basis(p.x, 20);
  for (auto _ : state) {
    SmoothFit f = fit_fixed_lambda(b, p.y, 1.0);
    benchmark::DoNotOptimize(f.rss);
  }
}
BENCHMARK(BM_FitFixedLambda)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_SelectLambda(benchmark::State& state) {
  SmoothProblem p(500, 99003);
  SmoothBasis b = tps_basis(p.x, 16);
  for (auto _ : state) {
    SmoothFit f = select_lambda(b, p.y);
    benchmark::DoNotOptimize(f.lambda);
  }
}
BENCHMARK(BM_SelectLambda)->Unit(benchmark::kMillisecond);

void BM_FitAm(benchmark::State& state) {
  Dataset ds = generate(make_scenario(ScenarioId::S3, 99004));
  AmSpec spec{"y", {{"x", 10}, {"z", 10}}, {}, {}, true};
  for (auto _ : state) {
    AmFit f = fit_am(spec, ds);
    benchmark::DoNotOptimize(f.sigma2);
  }
}
BENCHMARK(BM_FitAm)->Unit(benchmark::kMillisecond);

void BM_TwoStepTest(benchmark::State& state) {
  Dataset ds = generate(make_scenario(ScenarioId::S3, 99005));
  AmSpec spec{"y", {{"x", 10}, {"z", 10}}, {}, {}, true};
  std::vector<Product> inter{Product{{Power{"x", 1}, Power{"z", 1}}}};
  for (auto _ : state) {
    AmbiguityReport r = two_step_test(spec, inter, ds);
    benchmark::DoNotOptimize(r.classification.data());
  }
}
BENCHMARK(BM_TwoStepTest)->Unit(benchmark::kMillisecond);

void BM_RunStudyParametric(benchmark::State& state) {
  Scenario sc = make_scenario(ScenarioId::S1, 99006);
  ModelPipeline mp = default_pipeline(ScenarioId::S1);
  for (auto _ : state) {
    StudySummary s = run_study(sc, mp, 20, 1);
    benchmark::DoNotOptimize(s.mean_t);
  }
}
BENCHMARK(BM_RunStudyParametric)->Unit(benchmark::kMillisecond);

void BM_RunStudyTwoStep(benchmark::State& state) {
  Scenario sc = make_scenario(ScenarioId::S3, 99007);
  ModelPipeline mp = default_pipeline(ScenarioId::S3);
  for (auto _ : state) {
    StudySummary s = run_study(sc, mp, 5, 1);
    benchmark::DoNotOptimize(s.mean_t);
  }
}
BENCHMARK(BM_RunStudyTwoStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
