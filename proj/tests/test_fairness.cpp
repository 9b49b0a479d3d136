// Effective quantiles, the covariance fairness measure, and the per-group
// correction: pinned hand-checked examples plus the exact binary identity
// and the post-adjustment balance guarantee.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "fairqr/design.hpp"
#include "fairqr/errors.hpp"
#include "fairqr/fairness.hpp"
#include "fairqr/oracle.hpp"
#include "fairqr/quantile.hpp"
#include "fairqr/rng.hpp"

using fairqr::Adjustment;
using fairqr::ProtectedAttribute;

TEST_CASE("protected attribute bookkeeping") {
  const ProtectedAttribute a({0, 1, 1, 2, 0}, 3);
  CHECK(a.categories() == 3);
  CHECK(a.size() == 5);
  CHECK(a[3] == 2);
  CHECK(a.group_sizes() == std::vector<std::size_t>{2, 2, 1});

  const auto b = ProtectedAttribute::binary({0, 1, 0});
  CHECK(b.categories() == 2);

  CHECK_THROWS_AS(ProtectedAttribute({0, 0, 0}, 1), fairqr::DataError);
  CHECK_THROWS_AS(ProtectedAttribute({}, 2), fairqr::DataError);
  CHECK_THROWS_AS(ProtectedAttribute({0, 2}, 2), fairqr::DataError);
  CHECK_THROWS_AS(ProtectedAttribute({0, -1}, 2), fairqr::DataError);
  try {
    ProtectedAttribute({0, 0, 0}, 2);
    FAIL("expected EmptyGroupError");
  } catch (const fairqr::EmptyGroupError& e) {
    CHECK(std::string(e.what()).find("category 1") != std::string::npos);
  }
}

TEST_CASE("effective quantiles count ties as covered") {
  const std::vector<double> even_preds = {2.0, 2.0, 3.0, 3.0};
  const std::vector<double> even_y = {1.0, 3.0, 2.0, 4.0};
  const auto even = fairqr::effective_quantiles(even_preds, even_y,
                                                ProtectedAttribute::binary({0, 0, 1, 1}));
  REQUIRE(even.size() == 2);
  CHECK(even[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(even[1] == doctest::Approx(0.5).epsilon(1e-15));

  const std::vector<double> preds = {2.0, 2.0, 2.0, 10.0, 10.0};
  const std::vector<double> y = {1.0, 3.0, 2.0, 9.0, 11.0};
  const auto q = fairqr::effective_quantiles(preds, y,
                                             ProtectedAttribute::binary({0, 0, 0, 1, 1}));
  CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(fairqr::effective_quantiles({1.0}, {1.0, 2.0},
                                              ProtectedAttribute::binary({0, 1})),
                  fairqr::DataError);
}

TEST_CASE("covariance measure on pinned instances") {
  const std::vector<double> zeros = {0.0, 0.0, 0.0, 0.0};
  const std::vector<double> y = {1.0, 1.0, -1.0, -1.0};

  SUBCASE("binary split with opposite outcomes") {
    const double cov = fairqr::fairness_covariance(zeros, y, std::vector<double>{0, 0, 1, 1});
    CHECK(cov == -0.25);  // pi0 * pi1 * (tau0 - tau1) exactly
  }
  SUBCASE("constant attribute is exactly zero") {
    CHECK(fairqr::fairness_covariance(zeros, y, std::vector<double>{1, 1, 1, 1}) == 0.0);
    CHECK(fairqr::fairness_covariance(zeros, y, std::vector<double>{0, 0, 0, 0}) == 0.0);
  }
  SUBCASE("balanced groups cancel") {
    const std::vector<double> alternating = {1.0, -1.0, 1.0, -1.0};
    CHECK(fairqr::fairness_covariance(zeros, alternating, std::vector<double>{0, 0, 1, 1}) ==
          0.0);
  }
  SUBCASE("general numeric attribute uses the two-pass formula") {
    const std::vector<double> preds = {0.0, 0.0, 0.0};
    const std::vector<double> resp = {-1.0, 1.0, 1.0};
    const double cov = fairqr::fairness_covariance(preds, resp, std::vector<double>{0, 0, 3});
    CHECK(cov == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
}

TEST_CASE("binary covariance equals the product identity bit for bit") {
  fairqr::CounterRng rng(321);
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t n = 37;
    std::vector<double> preds(n), y(n), a_num(n);
    std::vector<int> a(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] = rng.next_normal();
      y[i] = rng.next_normal();
      a[i] = rng.next_bernoulli(0.4) ? 1 : 0;
      a_num[i] = a[i];
    }
    if (std::count(a.begin(), a.end(), 1) == 0 || std::count(a.begin(), a.end(), 0) == 0)
      continue;
    const ProtectedAttribute attr(a, 2);
    const auto q = fairqr::effective_quantiles(preds, y, attr);
    const auto sizes = attr.group_sizes();
    const double pi0 = static_cast<double>(sizes[0]) / static_cast<double>(n);
    const double pi1 = static_cast<double>(sizes[1]) / static_cast<double>(n);
    const double expected = pi0 * pi1 * (q[0] - q[1]);
    CAPTURE(instance);
    CHECK(fairqr::fairness_covariance(preds, y, a_num) == expected);
    CHECK(fairqr::fairness_covariance(preds, y, attr) == expected);
  }
}

TEST_CASE("fitted correction recovers per-group medians") {
  const std::vector<double> base(6, 0.0);
  const std::vector<double> y = {1.0, 2.0, 3.0, 10.0, 20.0, 30.0};
  const ProtectedAttribute a({0, 0, 0, 1, 1, 1}, 2);
  const auto adj = fairqr::fit_adjustment(base, y, a, 0.5);
  CHECK(adj.tau == 0.5);
  CHECK(adj.reference_category == 1);
  REQUIRE(adj.offsets.size() == 1);
  CHECK(adj.intercept == doctest::Approx(20.0).epsilon(1e-10));
  CHECK(adj.offsets[0] == doctest::Approx(-18.0).epsilon(1e-10));

  // The exhaustive grid agrees: best shift is nu = 2 for group 0 with an
  // extra mu = 18 for group 1, matching intercept 20 = 2 + 18. Unit-step
  // ranges keep both optima exactly on the grid.
  fairqr::GridSpec grid;
  grid.mu_min = -30.0;
  grid.mu_max = 30.0;
  grid.mu_count = 61;
  grid.nu_min = -30.0;
  grid.nu_max = 60.0;
  grid.nu_count = 91;
  const auto best = fairqr::grid_best_adjustment(y, a.values(), 0.5, grid);
  const double group0 = adj.intercept + adj.offsets[0];
  CHECK(best.nu == doctest::Approx(group0).epsilon(1e-9));
  CHECK(best.mu == doctest::Approx(adj.intercept - group0).epsilon(1e-9));

  const auto corrected = fairqr::apply_adjustment(base, a, adj);
  CHECK(corrected[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(corrected[3] == doctest::Approx(20.0).epsilon(1e-10));
}

TEST_CASE("correction on already-centered groups is near zero") {
  // Base predictions equal the per-group tau-quantiles, so no shift helps.
  const std::vector<double> base = {2.0, 2.0, 2.0, 20.0, 20.0, 20.0};
  const std::vector<double> y = {1.0, 2.0, 3.0, 10.0, 20.0, 30.0};
  const ProtectedAttribute a({0, 0, 0, 1, 1, 1}, 2);
  const auto adj = fairqr::fit_adjustment(base, y, a, 0.5);
  CHECK(adj.intercept == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(adj.offsets[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("correction matches the exhaustive fit on a lopsided split") {
  fairqr::CounterRng rng(606);
  const std::size_t n = 9;
  std::vector<double> base(n, 0.0), y(n);
  std::vector<int> codes(n, 0);
  codes[n - 1] = 1;  // sizes (8, 1)
  for (double& v : y) v = rng.next_normal() * 3.0;
  const ProtectedAttribute a(codes, 2);
  const auto adj = fairqr::fit_adjustment(base, y, a, 0.3);

  std::vector<double> design;
  std::vector<double> residuals(n);
  for (std::size_t i = 0; i < n; ++i) {
    design.push_back(1.0);
    design.push_back(codes[i] == 0 ? 1.0 : 0.0);
    residuals[i] = y[i] - base[i];
  }
  const fairqr::DesignMatrix x(std::move(design), n, 2, {"intercept", "group0"}, true);
  const auto oracle = fairqr::brute_force_fit(x, residuals, 0.3);
  CHECK(adj.intercept == doctest::Approx(oracle.beta[0]).epsilon(1e-9));
  CHECK(adj.offsets[0] == doctest::Approx(oracle.beta[1]).epsilon(1e-9));
}

TEST_CASE("applying a literal adjustment") {
  Adjustment adj;
  adj.tau = 0.5;
  adj.intercept = 18.0;
  adj.offsets = {-16.0};
  adj.reference_category = 1;
  adj.validate();
  CHECK(adj.categories() == 2);
  CHECK(adj.offset_for(0) == -16.0);
  CHECK(adj.offset_for(1) == 0.0);

  const auto shifted = fairqr::apply_adjustment({0.0, 0.0}, std::vector<int>{1, 0}, adj);
  CHECK(shifted == std::vector<double>{18.0, 2.0});

  SUBCASE("identity adjustment changes nothing") {
    Adjustment zero;
    zero.tau = 0.5;
    zero.intercept = 0.0;
    zero.offsets = {0.0};
    zero.reference_category = 1;
    const std::vector<double> base = {1.5, -2.5};
    CHECK(fairqr::apply_adjustment(base, std::vector<int>{0, 1}, zero) == base);
  }
  SUBCASE("samples may miss categories entirely") {
    Adjustment one;
    one.tau = 0.5;
    one.intercept = 1.0;
    one.offsets = {-16.0};
    one.reference_category = 1;
    const auto out = fairqr::apply_adjustment({5.0}, std::vector<int>{1}, one);
    CHECK(out == std::vector<double>{6.0});
  }
  SUBCASE("categories outside the adjustment are rejected") {
    CHECK_THROWS_AS(fairqr::apply_adjustment({0.0}, std::vector<int>{2}, adj),
                    fairqr::DataError);
  }
  SUBCASE("inconsistent reference category is rejected") {
    Adjustment bad = adj;
    bad.reference_category = 0;
    CHECK_THROWS_AS(bad.validate(), fairqr::DataError);
  }
}

TEST_CASE("adjustment intercept is equivariant to base-prediction shifts") {
  fairqr::CounterRng rng(4711);
  const std::size_t n = 40;
  std::vector<double> base(n), y(n);
  std::vector<int> codes(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = rng.next_normal();
    y[i] = base[i] + rng.next_normal();
    codes[i] = rng.next_bernoulli(0.5) ? 1 : 0;
  }
  codes[0] = 0;
  codes[1] = 1;
  const ProtectedAttribute a(codes, 2);
  const auto adj = fairqr::fit_adjustment(base, y, a, 0.5);
  auto lifted = base;
  for (double& v : lifted) v += 7.0;
  const auto adj_lifted = fairqr::fit_adjustment(lifted, y, a, 0.5);
  CHECK(adj_lifted.intercept == doctest::Approx(adj.intercept - 7.0).epsilon(1e-8));
  CHECK(adj_lifted.offsets[0] == doctest::Approx(adj.offsets[0]).scale(1.0).epsilon(1e-8));
}

TEST_CASE("per-group balance after fitting and applying on the same sample") {
  fairqr::CounterRng rng(888);
  const std::size_t n = 200;
  const double tau = 0.3;
  std::vector<double> base(n), y(n);
  std::vector<int> codes(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = rng.next_normal();
    codes[i] = rng.next_bernoulli(0.5) ? 1 : 0;
    y[i] = base[i] + 2.0 * codes[i] + rng.next_normal();
  }
  const ProtectedAttribute a(codes, 2);
  const auto adj = fairqr::fit_adjustment(base, y, a, tau);
  const auto corrected = fairqr::apply_adjustment(base, a, adj);
  const auto q = fairqr::effective_quantiles(corrected, y, a);
  const auto sizes = a.group_sizes();
  for (std::size_t g = 0; g < 2; ++g) {
    const double slack = 2.0 / static_cast<double>(sizes[g]);
    CHECK(std::abs(q[g] - tau) <= slack + 1e-12);
  }
}

TEST_CASE("fairness report bundles the measures") {
  const std::vector<double> zeros = {0.0, 0.0, 0.0, 0.0};
  const std::vector<double> y = {1.0, 1.0, -1.0, -1.0};
  const ProtectedAttribute a({0, 0, 1, 1}, 2);
  const auto report = fairqr::fairness_report(zeros, y, a, 0.5);
  CHECK(report.tau == 0.5);
  REQUIRE(report.effective_quantiles.size() == 2);
  CHECK(report.effective_quantiles[0] == 0.0);
  CHECK(report.effective_quantiles[1] == 1.0);
  CHECK(report.max_gap == 1.0);
  CHECK(report.covariance_measure == -0.25);
  CHECK(report.risk == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(report.group_sizes == std::vector<std::size_t>{2, 2});
}

TEST_CASE("three-category attributes work end to end") {
  fairqr::CounterRng rng(31);
  const std::size_t n = 120;
  std::vector<double> base(n), y(n);
  std::vector<int> codes(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = rng.next_normal();
    codes[i] = static_cast<int>(i % 3);
    y[i] = base[i] + 3.0 * codes[i] + rng.next_normal();
  }
  const ProtectedAttribute a(codes, 3);
  const auto adj = fairqr::fit_adjustment(base, y, a, 0.5);
  REQUIRE(adj.offsets.size() == 2);
  CHECK(adj.reference_category == 2);
  const auto corrected = fairqr::apply_adjustment(base, a, adj);
  const auto q = fairqr::effective_quantiles(corrected, y, a);
  for (double v : q) CHECK(std::abs(v - 0.5) < 0.15);
  const auto report = fairqr::fairness_report(corrected, y, a, 0.5);
  CHECK(report.max_gap < 0.25);
  CHECK(report.group_sizes == std::vector<std::size_t>{40, 40, 40});
}

TEST_CASE("before/after table improves the lagging group") {
  fairqr::CounterRng rng(92);
  const auto make_sample = [&](std::size_t n) {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<int> codes;
    for (std::size_t i = 0; i < n; ++i) {
      const double x1 = rng.next_normal();
      const int a = rng.next_bernoulli(0.5) ? 1 : 0;
      xs.push_back(1.0);
      xs.push_back(x1);
      ys.push_back(x1 - 3.0 * a + rng.next_normal());
      codes.push_back(a);
    }
    codes[0] = 0;
    codes[1] = 1;
    return std::tuple{fairqr::DesignMatrix(std::move(xs), n, 2, {"intercept", "x1"}, true),
                      std::move(ys), std::move(codes)};
  };
  const auto [x_train, y_train, a_train] = make_sample(400);
  const auto [x_adjust, y_adjust, a_adjust] = make_sample(400);
  const auto [x_test, y_test, a_test] = make_sample(800);
  const std::vector<double> targets = {0.25, 0.5};
  const auto table = fairqr::before_after_table(
      x_train, y_train, x_adjust, y_adjust, ProtectedAttribute(a_adjust, 2), x_test, y_test,
      ProtectedAttribute(a_test, 2), targets, {});
  REQUIRE(table.targets == targets);
  REQUIRE(table.before.size() == 2);
  REQUIRE(table.after.size() == 2);
  REQUIRE(table.before[0].size() == targets.size());
  CHECK(table.group_sizes[0] + table.group_sizes[1] == 800);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    // The base model ignores A, so group 1 (shifted down by 3) sits far above
    // its nominal level before correction and near it after.
    CHECK(table.before[1][t] > targets[t] + 0.1);
    CHECK(std::abs(table.after[1][t] - targets[t]) < 0.1);
    CHECK(std::abs(table.after[0][t] - targets[t]) < 0.1);
  }
}
