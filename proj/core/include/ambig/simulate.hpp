#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ambig/am.hpp"
#include "ambig/dataset.hpp"
#include "ambig/design.hpp"

namespace ambig {

enum class ScenarioId { Intro, S1, S2, S3, S4, S5, S6, S7 };

std::string scenario_name(ScenarioId id);
ScenarioId scenario_from_name(const std::string& name);

struct Scenario {
  ScenarioId id = ScenarioId::S1;
  long n = 1000;
  enum class Law { Linear, Quadratic } law = Law::Linear;  // z = w_x x + w_u u | z = 4x^2 + u
  double w_x = 1.0 / 3.0;
  double w_u = 2.0 / 3.0;
  enum class Process { XSquared, XZ, XCubed } process = Process::XSquared;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
};

// Paper defaults for a scenario row (n, covariate law, generating process).
Scenario make_scenario(ScenarioId id, std::uint64_t seed);

// Draws x, u ~ U(-1,1) iid, forms z and y, discards u. Columns y, x, z;
// response y. Bit-identical for identical seeds.
Dataset generate(const Scenario& sc);

// The analyzing model of a Table 3 row: either a plain LM on the raw
// covariates or the two-step AM pipeline.
struct ModelPipeline {
  enum class Kind { ParametricLM, TwoStep } kind = Kind::ParametricLM;
  DesignSpec lm;                       // ParametricLM
  AmSpec am;                           // TwoStep (response filled per dataset)
  std::vector<Product> interactions;   // the tested term(s); first is reported
  std::string label;
  std::string interaction_name() const;
};

// The paper's model for each Table 3 row (S3/S4/S7 two-step, rest LM).
ModelPipeline default_pipeline(ScenarioId id);

struct IterationRecord {
  long iteration = 0;
  std::uint64_t seed = 0;
  double t = 0.0;
  double coefficient = 0.0;
  double r2 = 0.0;        // LM R², or step-1 AM R² for two-step rows
  double r2_step2 = 0.0;  // NaN for parametric rows
  bool ok = false;
  std::string error;
};

struct StudySummary {
  ScenarioId scenario = ScenarioId::S1;
  std::string model_label;
  long iterations = 0;
  std::uint64_t master_seed = 0;
  double mean_t = 0.0;
  double mean_r2 = 0.0;
  double mean_step2_r2 = 0.0;  // NaN when not applicable
  double mean_coefficient = 0.0;
  double rejection_rate = 0.0;  // |t| > 2
  long failures = 0;
  std::vector<IterationRecord> records;
};

// Runs `iterations` independent generate+fit cycles; iteration i uses seed
// derive_stream_seed(sc.seed, i), so results are identical for any thread
// count. threads = 0 selects hardware concurrency capped by AMBIG_THREADS.
StudySummary run_study(const Scenario& sc, const ModelPipeline& mp, long iterations,
                       int threads = 0);

struct RateEstimate {
  double rate = 0.0;
  double se = 0.0;
  bool reliable = true;  // false below 30 iterations
};

// Rejection rate of |t| > 2 with a binomial Monte Carlo standard error.
RateEstimate estimate_rates(const StudySummary& summary);

// Worker count: hardware concurrency, capped by the AMBIG_THREADS
// environment variable and by the number of work items.
int resolve_threads(long items);

}  // namespace ambig
