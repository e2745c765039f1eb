#include <doctest.h>

#include "ambig/anova.hpp"
#include "ambig/dataset.hpp"
#include "ambig/design.hpp"
#include "ambig/errors.hpp"
#include "ambig/ols.hpp"
#include "ambig/simulate.hpp"
#include "test_support.hpp"

using namespace ambig;

namespace {

Dataset two_cols(std::initializer_list<double> xs, std::initializer_list<double> zs) {
  Dataset ds;
  Eigen::VectorXd x(static_cast<Eigen::Index>(xs.size())), z(static_cast<Eigen::Index>(zs.size()));
  Eigen::Index i = 0;
  for (double v : xs) x[i++] = v;
  i = 0;
  for (double v : zs) z[i++] = v;
  ds.add_numeric("x", x);
  ds.add_numeric("z", z);
  return ds;
}

// Balanced 2x2 with fixed cell means, 2 observations per cell, zero noise.
Dataset balanced_2x2(double m00, double m01, double m10, double m11) {
  Dataset ds;
  Eigen::VectorXd y(8);
  y << m00, m00, m01, m01, m10, m10, m11, m11;
  ds.add_numeric("y", y);
  ds.add_factor("a", {0, 0, 0, 0, 1, 1, 1, 1}, {"lo", "hi"});
  ds.add_factor("b", {0, 0, 1, 1, 0, 0, 1, 1}, {"lo", "hi"});
  return ds;
}

}  // namespace

TEST_SUITE("ols") {

TEST_CASE("design row for x, z, x:z") {
  Dataset ds = two_cols({2.0}, {3.0});
  DesignMatrix dm = build_design({true, parse_terms("x, z, x:z", ds)}, ds);
  REQUIRE(dm.X.cols() == 4);
  CHECK(dm.X(0, 0) == 1.0);
  CHECK(dm.X(0, 1) == 2.0);
  CHECK(dm.X(0, 2) == 3.0);
  CHECK(dm.X(0, 3) == 6.0);
  CHECK(dm.names == std::vector<std::string>{"(Intercept)", "x", "z", "x:z"});
}

TEST_CASE("five-column quadratic interaction design") {
  Dataset ds;
  Eigen::VectorXd me(3), fe(3);
  me << 1, 2, 3;
  fe << 4, 5, 6;
  ds.add_numeric("me", me);
  ds.add_numeric("fe", fe);
  DesignMatrix dm = build_design({true, parse_terms("me, me^2, fe, fe^2, me:fe", ds)}, ds);
  REQUIRE(dm.X.cols() == 6);
  CHECK(dm.X(1, 2) == 4.0);   // me^2 at me=2
  CHECK(dm.X(2, 4) == 36.0);  // fe^2 at fe=6
  CHECK(dm.X(1, 5) == 10.0);  // me*fe at row 1
  CHECK(dm.names[5] == "me:fe");
}

TEST_CASE("two-level factor codes to -1 / +1") {
  Dataset ds;
  Eigen::VectorXd y(3);
  y << 0, 0, 0;
  ds.add_numeric("y", y);
  ds.add_factor("g", {0, 1, 1}, {"neg", "pos"});
  DesignMatrix dm = build_design({false, {FactorMain{"g"}}}, ds);
  REQUIRE(dm.X.cols() == 1);
  CHECK(dm.X(0, 0) == -1.0);
  CHECK(dm.X(1, 0) == 1.0);
  CHECK(dm.X(2, 0) == 1.0);
}

TEST_CASE("duplicate and degenerate terms are rejected") {
  Dataset ds = two_cols({1, 2}, {3, 4});
  CHECK_THROWS_AS(build_design({true, parse_terms("x, x", ds)}, ds), Error);
  CHECK_THROWS_AS(build_design({true, {Product{{Power{"x", 1}, Power{"x", 2}}}}}, ds), Error);
  CHECK_THROWS_AS(build_design({true, parse_terms("w", ds)}, ds), UnknownCovariate);
}

TEST_CASE("term names round-trip through the parser") {
  Dataset ds = two_cols({1, 2}, {3, 4});
  for (const char* text : {"x", "x^2", "x:z", "x^2:z"}) {
    auto terms = parse_terms(text, ds);
    REQUIRE(terms.size() == 1);
    CHECK(term_name(terms[0]) == text);
  }
}

TEST_CASE("exact linear data without intercept") {
  Dataset ds;
  Eigen::VectorXd x(3), y(3);
  x << 1, 2, 3;
  y << 2, 4, 6;
  ds.add_numeric("x", x);
  ds.add_numeric("y", y);
  ds.set_response("y");
  OlsFit fit = fit_ols({false, parse_terms("x", ds)}, ds);
  CHECK(fit.coef("x") == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.rss <= 1e-24);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("four-point line recovers intercept 1 slope 2 exactly") {
  Dataset ds;
  Eigen::VectorXd x(4), y(4);
  x << 0, 1, 2, 3;
  y << 1, 3, 5, 7;
  ds.add_numeric("x", x);
  ds.add_numeric("y", y);
  ds.set_response("y");
  OlsFit fit = fit_ols({true, parse_terms("x", ds)}, ds);
  CHECK(fit.coef("(Intercept)") == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(fit.coef("x") == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("four-point hand oracle with noise") {
  // x = 0..3, y = (0,1,1,2). By hand: slope 0.6, intercept 0.1, rss 0.2,
  // sigma2 0.1, se_slope = sqrt(0.02), se_int = sqrt(0.07), r2 = 0.9.
  Dataset ds;
  Eigen::VectorXd x(4), y(4);
  x << 0, 1, 2, 3;
  y << 0, 1, 1, 2;
  ds.add_numeric("x", x);
  ds.add_numeric("y", y);
  ds.set_response("y");
  OlsFit fit = fit_ols({true, parse_terms("x", ds)}, ds);
  CHECK(fit.coef("x") == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(fit.coef("(Intercept)") == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fit.rss == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fit.sigma2_hat == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(fit.t_value("x") == doctest::Approx(0.6 / std::sqrt(0.02)).epsilon(1e-12));
  CHECK(fit.t_value("(Intercept)") == doctest::Approx(0.1 / std::sqrt(0.07)).epsilon(1e-12));
  CHECK(fit.dof_residual == 2);
}

TEST_CASE("stored t equals coefficient over se") {
  SplitMix64 rng(77);
  for (int rep = 0; rep < 15; ++rep) {
    int n = 20 + static_cast<int>(rng.next_u64() % 50);
    Dataset ds;
    ds.add_numeric("x", testsup::normal_vec(rng, n));
    ds.add_numeric("z", testsup::normal_vec(rng, n));
    Eigen::VectorXd y = ds.numeric("x").values + testsup::normal_vec(rng, n);
    ds.add_numeric("y", y);
    ds.set_response("y");
    OlsFit fit = fit_ols({true, parse_terms("x, z, x:z", ds)}, ds);
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
      if (fit.se[j] > 0) CHECK(std::fabs(fit.t[j] - fit.beta[j] / fit.se[j]) <= 1e-12);
  }
}

TEST_CASE("residuals are orthogonal to the design and sum to zero") {
  SplitMix64 rng(78);
  for (int rep = 0; rep < 15; ++rep) {
    int n = 25 + static_cast<int>(rng.next_u64() % 40);
    Dataset ds;
    ds.add_numeric("x", testsup::normal_vec(rng, n));
    ds.add_numeric("z", testsup::uniform_vec(rng, n));
    Eigen::VectorXd y =
        2.0 * ds.numeric("z").values + ds.numeric("x").values + testsup::normal_vec(rng, n);
    ds.add_numeric("y", y);
    ds.set_response("y");
    DesignMatrix dm = build_design({true, parse_terms("x, z", ds)}, ds);
    OlsFit fit = fit_ols(dm.X, y, dm.names);
    CHECK(std::fabs(fit.residuals.sum()) <= 1e-8 * n);
    for (Eigen::Index j = 0; j < dm.X.cols(); ++j) {
      double scale = dm.X.col(j).cwiseAbs().maxCoeff();
      CHECK(std::fabs(dm.X.col(j).dot(fit.residuals)) <= 1e-8 * n * std::max(scale, 1.0));
    }
    CHECK(fit.r_squared >= 0.0);
    CHECK(fit.r_squared <= 1.0);
  }
}

TEST_CASE("nested designs never lose r-squared") {
  SplitMix64 rng(79);
  for (int rep = 0; rep < 10; ++rep) {
    int n = 30;
    Dataset ds;
    ds.add_numeric("x", testsup::normal_vec(rng, n));
    ds.add_numeric("z", testsup::normal_vec(rng, n));
    ds.add_numeric("y", testsup::normal_vec(rng, n));
    ds.set_response("y");
    double r1 = fit_ols({true, parse_terms("x", ds)}, ds).r_squared;
    double r2 = fit_ols({true, parse_terms("x, z", ds)}, ds).r_squared;
    double r3 = fit_ols({true, parse_terms("x, z, x:z", ds)}, ds).r_squared;
    CHECK(r2 >= r1 - 1e-12);
    CHECK(r3 >= r2 - 1e-12);
  }
}

TEST_CASE("rank failures are reported as typed errors") {
  Dataset ds = two_cols({1, 2}, {2, 4});  // z = 2x exactly
  Eigen::VectorXd y(2);
  y << 1, 2;
  Dataset d2 = ds;
  d2.add_numeric("y", y);
  d2.set_response("y");
  CHECK_THROWS_AS(fit_ols({true, parse_terms("x, z", d2)}, d2), Underdetermined);  // n <= p

  Dataset big;
  SplitMix64 rng(80);
  Eigen::VectorXd x = testsup::normal_vec(rng, 20);
  big.add_numeric("x", x);
  big.add_numeric("z", 2.0 * x);  // collinear
  big.add_numeric("y", testsup::normal_vec(rng, 20));
  big.set_response("y");
  CHECK_THROWS_AS(fit_ols({true, parse_terms("x, z", big)}, big), SingularDesign);
}

TEST_CASE("intro draw shows the spurious interaction in the parametric fit") {
  Scenario sc = make_scenario(ScenarioId::Intro, 31415);
  Dataset ds = generate(sc);
  OlsFit fit = fit_ols({true, parse_terms("x, z, x:z", ds)}, ds);
  CHECK(std::fabs(fit.t_value("x:z")) > 8.0);
  CHECK(std::fabs(fit.t_value("x")) < 2.0);
  CHECK(std::fabs(fit.t_value("z")) < 2.0);
}

TEST_CASE("additive cell means give zero interaction sum of squares") {
  AnovaTable t = anova_two_way(balanced_2x2(1, 2, 3, 4), "y", "a", "b");
  CHECK(t.row("a:b").sum_sq <= 1e-20);
  CHECK(t.row("a").dof == 1);
  CHECK(t.row("b").dof == 1);
}

TEST_CASE("hand-computed interaction sum of squares equals 8") {
  // Cells (0,0,0,4), 2 per cell: grand mean 1, row effects +-1, col effects
  // +-1, interaction contrast 1 per cell, SS_int = 8 * 1^2 = 8.
  AnovaTable t = anova_two_way(balanced_2x2(0, 0, 0, 4), "y", "a", "b");
  CHECK(t.row("a:b").sum_sq == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(t.row("a").sum_sq == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(t.row("b").sum_sq == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(t.row("Residuals").sum_sq <= 1e-20);
}

TEST_CASE("anova rows satisfy the mean-square identities") {
  SplitMix64 rng(81);
  Dataset ds;
  int n = 40;
  ds.add_numeric("y", testsup::normal_vec(rng, n));
  std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    a[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_u64() % 2);
    b[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_u64() % 3);
  }
  ds.add_factor("a", a, {"l", "h"});
  ds.add_factor("b", b, {"p", "q", "r"});
  AnovaTable t = anova_two_way(ds, "y", "a", "b");
  const AnovaRow& resid = t.row("Residuals");
  CHECK(std::isnan(resid.f_value));
  for (const auto& row : t.rows) {
    CHECK(row.mean_sq == doctest::Approx(row.sum_sq / row.dof).epsilon(1e-12));
    if (row.name != "Residuals")
      CHECK(row.f_value == doctest::Approx(row.mean_sq / resid.mean_sq).epsilon(1e-12));
  }
}

TEST_CASE("type-II equals sequential sums of squares on balanced data") {
  SplitMix64 rng(82);
  Dataset ds;
  Eigen::VectorXd y = testsup::normal_vec(rng, 16);
  ds.add_numeric("y", y);
  std::vector<int> a, b;
  for (int i = 0; i < 16; ++i) {
    a.push_back(i / 8);
    b.push_back((i / 4) % 2);
  }
  ds.add_factor("a", a, {"l", "h"});
  ds.add_factor("b", b, {"p", "q"});
  AnovaTable t = anova_two_way(ds, "y", "a", "b");

  // sequential oracle via nested OLS with sum-to-zero codes
  auto rss_of = [&](std::vector<Term> terms) {
    return fit_ols({true, std::move(terms)}, ds).rss;
  };
  Dataset dsr = ds;
  dsr.set_response("y");
  double rss_1 = [&] {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(16, 1);
    return fit_ols(X, y, {"(Intercept)"}).rss;
  }();
  (void)rss_of;
  double rss_a = fit_ols({true, {FactorMain{"a"}}}, dsr).rss;
  double rss_b = fit_ols({true, {FactorMain{"b"}}}, dsr).rss;
  double rss_ab = fit_ols({true, {FactorMain{"a"}, FactorMain{"b"}}}, dsr).rss;
  CHECK(t.row("a").sum_sq == doctest::Approx(rss_1 - rss_a).epsilon(1e-8));
  CHECK(t.row("b").sum_sq == doctest::Approx(rss_1 - rss_b).epsilon(1e-8));
  CHECK(t.row("a").sum_sq == doctest::Approx(rss_b - rss_ab).epsilon(1e-8));
  CHECK(t.row("b").sum_sq == doctest::Approx(rss_a - rss_ab).epsilon(1e-8));
}

TEST_CASE("intro draw shows the spurious interaction in the anova") {
  Scenario sc = make_scenario(ScenarioId::Intro, 31415);
  Dataset ds = generate(sc);
  Dataset d2 = dichotomize(dichotomize(ds, "x", 0.0), "z", 0.0);
  AnovaTable t = anova_two_way(d2, "y", "x_f", "z_f");
  CHECK(t.row("x_f:z_f").f_value > 40.0);
  CHECK(t.row("x_f").f_value < 4.0);
  CHECK(t.row("z_f").f_value < 4.0);
}

TEST_CASE("anova error cases") {
  Dataset ds = balanced_2x2(1, 2, 3, 4);
  CHECK_THROWS_AS(anova_two_way(ds, "y", "y", "b"), NotFactor);
  Dataset holes;
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  holes.add_numeric("y", y);
  holes.add_factor("a", {0, 0, 1, 1}, {"l", "h"});
  holes.add_factor("b", {0, 0, 1, 1}, {"p", "q"});  // cells (l,q) and (h,p) empty
  CHECK_THROWS_AS(anova_two_way(holes, "y", "a", "b"), EmptyCell);
}

TEST_CASE("residualize removes exactly the projected part") {
  // z already orthogonal to {1, x}: residual equals z itself.
  Dataset ds;
  Eigen::VectorXd x(3), z(3);
  x << -1, 0, 1;
  z << 1, -2, 1;
  ds.add_numeric("x", x);
  ds.add_numeric("z", z);
  Dataset r = residualize(ds, "z", {true, parse_terms("x", ds)});
  CHECK((r.numeric("z_resid").values - z).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("linear shared variance vanishes, higher-order dependency survives") {
  SplitMix64 rng(83);
  int n = 2000;
  Eigen::VectorXd x = testsup::uniform_vec(rng, n), u = testsup::uniform_vec(rng, n);
  Dataset lin;
  lin.add_numeric("x", x);
  lin.add_numeric("z", x + u);
  Dataset rlin = residualize(lin, "z", {true, parse_terms("x", lin)});
  CHECK(std::fabs(testsup::correlation(x, rlin.numeric("z_resid").values)) <= 1e-10);

  Dataset quad;
  quad.add_numeric("x", x);
  quad.add_numeric("z", 4.0 * x.array().square().matrix() + u);
  Dataset rq = residualize(quad, "z", {true, parse_terms("x", quad)});
  Eigen::VectorXd zr = rq.numeric("z_resid").values;
  CHECK(std::fabs(testsup::correlation(x, zr)) <= 1e-10);
  Eigen::VectorXd x2 = x.array().square();
  CHECK(std::fabs(testsup::correlation(x2, zr)) > 0.3);
}

}  // TEST_SUITE
