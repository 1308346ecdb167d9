#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "streetscore/errors.hpp"
#include "streetscore/stats.hpp"
#include "streetscore/synth.hpp"

using namespace streetscore;
using stats::RegressionResult;

namespace {

// Independent extended-precision oracle: normal equations solved by
// Gauss-Jordan elimination in long double. Deliberately a different route
// from the QR implementation under test.
struct OracleFit {
  std::vector<long double> beta;  // intercept first
  std::vector<long double> se;
  long double r2 = 0;
  long double adjusted_r2 = 0;
};

OracleFit normal_equations_fit(const std::vector<std::vector<double>>& X,
                               const std::vector<double>& y) {
  const size_t n = y.size();
  const size_t p = X.empty() ? 0 : X.front().size();
  const size_t k = p + 1;

  std::vector<std::vector<long double>> a(n, std::vector<long double>(k));
  for (size_t i = 0; i < n; ++i) {
    a[i][0] = 1.0L;
    for (size_t j = 0; j < p; ++j) a[i][j + 1] = X[i][j];
  }

  // M = [A'A | A'y | I] augmented, reduced in place.
  std::vector<std::vector<long double>> m(k, std::vector<long double>(2 * k + 1, 0.0L));
  for (size_t r = 0; r < k; ++r) {
    for (size_t c = 0; c < k; ++c) {
      long double sum = 0;
      for (size_t i = 0; i < n; ++i) sum += a[i][r] * a[i][c];
      m[r][c] = sum;
    }
    long double sum = 0;
    for (size_t i = 0; i < n; ++i) sum += a[i][r] * y[i];
    m[r][k] = sum;
    m[r][k + 1 + r] = 1.0L;
  }
  for (size_t col = 0; col < k; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < k; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    std::swap(m[col], m[pivot]);
    const long double d = m[col][col];
    for (auto& v : m[col]) v /= d;
    for (size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const long double f = m[r][col];
      if (f == 0.0L) continue;
      for (size_t c = 0; c < 2 * k + 1; ++c) m[r][c] -= f * m[col][c];
    }
  }

  OracleFit fit;
  fit.beta.resize(k);
  for (size_t r = 0; r < k; ++r) fit.beta[r] = m[r][k];

  long double sse = 0, ybar = 0;
  for (size_t i = 0; i < n; ++i) ybar += y[i];
  ybar /= static_cast<long double>(n);
  long double sst = 0;
  for (size_t i = 0; i < n; ++i) {
    long double pred = 0;
    for (size_t j = 0; j < k; ++j) pred += a[i][j] * fit.beta[j];
    sse += (y[i] - pred) * (y[i] - pred);
    sst += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = sst > 0 ? 1.0L - sse / sst : 0.0L;
  fit.adjusted_r2 =
      1.0L - (1.0L - fit.r2) * static_cast<long double>(n - 1) /
                 static_cast<long double>(n - k);
  const long double s2 = sse / static_cast<long double>(n - k);
  fit.se.resize(k);
  for (size_t r = 0; r < k; ++r) {
    fit.se[r] = std::sqrt(static_cast<double>(s2 * m[r][k + 1 + r]));
  }
  return fit;
}

double rel_err(double got, long double want) {
  const long double denom = std::max<long double>(std::abs(want), 1e-12L);
  return static_cast<double>(std::abs(got - want) / denom);
}

}  // namespace

TEST_CASE("pearson: perfect linear relations") {
  std::vector<double> x, y_pos, y_neg;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i);
    y_pos.push_back(2.0 * i + 1.0);
    y_neg.push_back(-static_cast<double>(i));
  }
  CHECK(stats::pearson(x, y_pos) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats::pearson(x, y_neg) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson: matches an extended-precision evaluation") {
  synth::Rng rng(7);
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(rng.uniform(-10.0, 10.0));
    y.push_back(0.7 * x.back() + rng.normal() * 3.0);
  }
  long double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= 100.0L;
  my /= 100.0L;
  long double sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const long double expected = sxy / sqrtl(sxx * syy);
  CHECK(std::abs(stats::pearson(x, y) - static_cast<double>(expected)) <
        1e-12);
}

TEST_CASE("pearson: affine invariance and sign flips") {
  synth::Rng rng(8);
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(rng.normal());
    y.push_back(rng.normal() + 0.4 * x.back());
  }
  const double base = stats::pearson(x, y);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform(0.1, 5.0);
    const double b = rng.uniform(-10.0, 10.0);
    const double c = rng.uniform(0.1, 5.0);
    const double d = rng.uniform(-10.0, 10.0);
    std::vector<double> xs, ys;
    for (size_t i = 0; i < x.size(); ++i) {
      xs.push_back(a * x[i] + b);
      ys.push_back(c * y[i] + d);
    }
    CHECK(std::abs(stats::pearson(xs, ys) - base) < 1e-12);
    for (auto& v : xs) v = -v;
    CHECK(std::abs(stats::pearson(xs, ys) + base) < 1e-12);
  }
}

TEST_CASE("pearson: error paths") {
  CHECK_THROWS_AS(stats::pearson({1, 2}, {1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(stats::pearson({1, 2}, {1, 2}), DegenerateDataError);
  CHECK_THROWS_AS(stats::pearson({1, 1, 1}, {1, 2, 3}), DegenerateDataError);
}

TEST_CASE("regularized incomplete beta: frozen high-precision values") {
  // Reference values computed with 30-digit arithmetic.
  CHECK(rel_err(stats::regularized_incomplete_beta(2.5, 0.5, 0.3),
                0.0189271240719456516534522087067L) < 1e-10);
  CHECK(rel_err(stats::regularized_incomplete_beta(5, 0.5, 0.9),
                0.316642915020012312500285913732L) < 1e-10);
  CHECK(stats::regularized_incomplete_beta(0.5, 0.5, 0.5) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rel_err(stats::regularized_incomplete_beta(4, 7, 0.42),
                0.666537159750025015335794617209L) < 1e-10);
  CHECK(stats::regularized_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(stats::regularized_incomplete_beta(2, 3, 1.0) == 1.0);
  CHECK_THROWS_AS(stats::regularized_incomplete_beta(-1, 1, 0.5),
                  ValidationError);
  CHECK_THROWS_AS(stats::regularized_incomplete_beta(1, 1, 1.5),
                  ValidationError);
}

TEST_CASE("two-sided t p-values: frozen high-precision values") {
  CHECK(rel_err(stats::student_t_two_sided_p(2.0, 10),
                0.0733880347707403656178625694116L) < 1e-10);
  CHECK(rel_err(stats::student_t_two_sided_p(0.5, 3),
                0.65144796484815099443507128229L) < 1e-10);
  CHECK(rel_err(stats::student_t_two_sided_p(3.5, 491),
                0.000507639309700639546709656124021L) < 1e-10);
  CHECK(stats::student_t_two_sided_p(1.0, 1) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rel_err(stats::student_t_two_sided_p(2.75, 28),
                0.0103225836507569250334876064982L) < 1e-10);
  CHECK(rel_err(stats::student_t_two_sided_p(0.1, 100),
                0.920544531095851232162122273323L) < 1e-10);
  CHECK(stats::student_t_two_sided_p(0.0, 10) == doctest::Approx(1.0));
  CHECK(stats::student_t_two_sided_p(
            std::numeric_limits<double>::infinity(), 10) == 0.0);
  // Symmetry in t.
  CHECK(stats::student_t_two_sided_p(-2.0, 10) ==
        doctest::Approx(stats::student_t_two_sided_p(2.0, 10)).epsilon(1e-14));
}

TEST_CASE("ols_fit: noiseless designs recover the planted coefficients") {
  synth::Rng rng(9);
  const std::vector<double> planted = {1.5, -2.0, 0.25};
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> row = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                               rng.uniform(0.0, 1.0)};
    y.push_back(0.7 + planted[0] * row[0] + planted[1] * row[1] +
                planted[2] * row[2]);
    X.push_back(std::move(row));
  }
  const auto fit = stats::ols_fit(X, y, {"a", "b", "c"});
  CHECK(std::abs(fit.intercept.beta - 0.7) < 1e-8);
  for (size_t j = 0; j < planted.size(); ++j) {
    CHECK(std::abs(fit.coefficients[j].beta - planted[j]) < 1e-8);
  }
  CHECK(std::abs(fit.r2 - 1.0) < 1e-8);
  CHECK(std::abs(fit.adjusted_r2 - 1.0) < 1e-8);
}

TEST_CASE("ols_fit: intercept-only model returns the mean with R2 = 0") {
  const std::vector<double> y = {1.0, 2.0, 3.0, 4.0};
  const auto fit = stats::ols_fit(std::vector<std::vector<double>>(4), y, {});
  CHECK(fit.intercept.beta == doctest::Approx(2.5));
  CHECK(fit.r2 == doctest::Approx(0.0));
  CHECK(fit.p == 0);
}

TEST_CASE("ols_fit: matches the normal-equations oracle on random designs") {
  synth::Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 200; ++i) {
      const double common = rng.normal();
      std::vector<double> row;
      for (int j = 0; j < 5; ++j) {
        row.push_back(rng.uniform(0.0, 1.0) + 0.3 * common);
      }
      double target = 0.4;
      for (int j = 0; j < 5; ++j) target += (j - 2.0) * row[static_cast<size_t>(j)];
      y.push_back(target + rng.normal());
      X.push_back(std::move(row));
    }
    const auto fit = stats::ols_fit(X, y, {"a", "b", "c", "d", "e"});
    const auto oracle = normal_equations_fit(X, y);
    CHECK(rel_err(fit.intercept.beta, oracle.beta[0]) < 1e-8);
    CHECK(rel_err(fit.intercept.se, oracle.se[0]) < 1e-8);
    for (size_t j = 0; j < 5; ++j) {
      CHECK(rel_err(fit.coefficients[j].beta, oracle.beta[j + 1]) < 1e-8);
      CHECK(rel_err(fit.coefficients[j].se, oracle.se[j + 1]) < 1e-8);
    }
    CHECK(rel_err(fit.r2, oracle.r2) < 1e-8);
    CHECK(rel_err(fit.adjusted_r2, oracle.adjusted_r2) < 1e-8);
  }
}

TEST_CASE("ols_fit: collinear designs name a dependent column") {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  synth::Rng rng(11);
  for (int i = 0; i < 30; ++i) {
    const double a = rng.uniform(0.0, 1.0);
    X.push_back({a, 2.0 * a, rng.uniform(0.0, 1.0)});
    y.push_back(rng.normal());
  }
  try {
    stats::ols_fit(X, y, {"alpha", "beta", "gamma"});
    FAIL("expected a collinearity error");
  } catch (const DegenerateDataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("collinear") != std::string::npos);
    const bool names_one = msg.find("alpha") != std::string::npos ||
                           msg.find("beta") != std::string::npos;
    CHECK(names_one);
  }
}

TEST_CASE("ols_fit: insufficient data") {
  const std::vector<std::vector<double>> X = {{1.0}, {2.0}};
  CHECK_THROWS_AS(stats::ols_fit(X, {1.0, 2.0}, {"a"}), DegenerateDataError);
}

TEST_CASE("ols_fit: residuals are orthogonal to the design") {
  synth::Rng rng(12);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 120; ++i) {
    X.push_back({rng.normal(), rng.normal(), rng.normal()});
    y.push_back(1.0 + X.back()[0] - 2.0 * X.back()[1] + rng.normal());
  }
  const auto fit = stats::ols_fit(X, y, {"a", "b", "c"});
  std::vector<double> resid(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    double pred = fit.intercept.beta;
    for (size_t j = 0; j < 3; ++j) pred += fit.coefficients[j].beta * X[i][j];
    resid[i] = y[i] - pred;
  }
  double dot0 = 0;
  std::vector<double> dots(3, 0.0);
  for (size_t i = 0; i < y.size(); ++i) {
    dot0 += resid[i];
    for (size_t j = 0; j < 3; ++j) dots[j] += resid[i] * X[i][j];
  }
  CHECK(std::abs(dot0) < 1e-8);
  for (double d : dots) CHECK(std::abs(d) < 1e-8);
}

TEST_CASE("ols_fit: refitting on predictions reproduces the coefficients") {
  synth::Rng rng(13);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 80; ++i) {
    X.push_back({rng.uniform(0.0, 2.0), rng.uniform(-1.0, 1.0)});
    y.push_back(0.3 - 1.2 * X.back()[0] + 0.8 * X.back()[1] + rng.normal());
  }
  const auto fit = stats::ols_fit(X, y, {"a", "b"});
  std::vector<double> y_hat(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    y_hat[i] = fit.intercept.beta + fit.coefficients[0].beta * X[i][0] +
               fit.coefficients[1].beta * X[i][1];
  }
  const auto refit = stats::ols_fit(X, y_hat, {"a", "b"});
  CHECK(std::abs(refit.intercept.beta - fit.intercept.beta) < 1e-8);
  CHECK(std::abs(refit.coefficients[0].beta - fit.coefficients[0].beta) < 1e-8);
  CHECK(std::abs(refit.coefficients[1].beta - fit.coefficients[1].beta) < 1e-8);
  CHECK(std::abs(refit.r2 - 1.0) < 1e-10);
}

TEST_CASE("adjusted_r2 formula") {
  CHECK(stats::adjusted_r2(1.0, 100, 8) == doctest::Approx(1.0));
  // 1 - 0.26 * 3367 / 3359, evaluated in extended precision.
  const long double expected = 1.0L - 0.26L * 3367.0L / 3359.0L;
  CHECK(std::abs(stats::adjusted_r2(0.74, 3368, 8) -
                 static_cast<double>(expected)) < 1e-12);
  CHECK(stats::adjusted_r2(0.74, 3368, 8) == doctest::Approx(0.73938).epsilon(1e-4));
  CHECK(stats::adjusted_r2(0.0, 10, 1) == doctest::Approx(-0.125));
  CHECK_THROWS_AS(stats::adjusted_r2(0.5, 9, 8), DegenerateDataError);
  CHECK_THROWS_AS(stats::adjusted_r2(0.5, 2, 1), DegenerateDataError);
}

TEST_CASE("significance codes") {
  CHECK(stats::significance_code(0.0005) == "**");
  CHECK(stats::significance_code(0.009) == "*");
  CHECK(stats::significance_code(0.02) == ".");
  CHECK(stats::significance_code(0.05) == "");  // strict inequality
  CHECK(stats::significance_code(0.01) == ".");
  CHECK(stats::significance_code(0.001) == "*");
  CHECK(stats::significance_code(0.9) == "");
  CHECK_THROWS_AS(stats::significance_code(-0.1), ValidationError);
  CHECK_THROWS_AS(stats::significance_code(1.1), ValidationError);

  synth::Rng rng(14);
  const auto strength = [](const std::string& code) {
    return code == "**" ? 3 : code == "*" ? 2 : code == "." ? 1 : 0;
  };
  for (int i = 0; i < 500; ++i) {
    const double p1 = rng.uniform();
    const double p2 = rng.uniform();
    const double lo = std::min(p1, p2), hi = std::max(p1, p2);
    CHECK(strength(stats::significance_code(lo)) >=
          strength(stats::significance_code(hi)));
  }
}

TEST_CASE("quantile_bin: equal-frequency splits") {
  std::vector<std::pair<std::string, double>> scores;
  std::map<std::string, double> targets;
  for (int i = 0; i < 9; ++i) {
    const std::string id = "s" + std::to_string(i);
    scores.emplace_back(id, static_cast<double>(i));
    targets[id] = 2.0;  // constant target
  }
  const auto bins = stats::quantile_bin(scores, targets, 3);
  REQUIRE(bins.size() == 3);
  CHECK(bins[0].count == 3);
  CHECK(bins[1].count == 3);
  CHECK(bins[2].count == 3);
  for (const auto& b : bins) {
    CHECK(b.label.front() == 'Q');
    CHECK(b.median == doctest::Approx(2.0));
    CHECK(b.p2 == doctest::Approx(2.0));
    CHECK(b.p98 == doctest::Approx(2.0));
    CHECK(b.p2 <= b.median);
    CHECK(b.median <= b.p98);
  }
}

TEST_CASE("quantile_bin: boundary values go to the lower bin") {
  std::vector<std::pair<std::string, double>> scores = {
      {"a", 1}, {"b", 2}, {"c", 3}, {"d", 3}, {"e", 5}, {"f", 6}};
  std::map<std::string, double> targets;
  for (const auto& [id, v] : scores) targets[id] = v;
  const auto bins = stats::quantile_bin(scores, targets, 2);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].count == 4);  // the two 3s sit exactly on the median cut
  CHECK(bins[1].count == 2);
}

TEST_CASE("quantile_bin: planted monotone fixture has increasing medians") {
  synth::Rng rng(15);
  std::vector<std::pair<std::string, double>> scores;
  std::map<std::string, double> targets;
  for (int i = 0; i < 200; ++i) {
    const std::string id = "s" + std::to_string(1000 + i);
    const double metric = rng.uniform(0.0, 1.0);
    scores.emplace_back(id, metric);
    targets[id] = metric + 0.01 * rng.normal();
  }
  const auto bins = stats::quantile_bin(scores, targets, 3);
  CHECK(bins[0].median < bins[1].median);
  CHECK(bins[1].median < bins[2].median);
}

TEST_CASE("quantile_bin: bin sizes differ by at most one on distinct values") {
  synth::Rng rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.uniform_int(10, 60);
    const int k = rng.uniform_int(2, 6);
    std::vector<std::pair<std::string, double>> scores;
    std::map<std::string, double> targets;
    for (int i = 0; i < n; ++i) {
      const std::string id = "s" + std::to_string(i);
      scores.emplace_back(id, i * 1.25);  // all distinct
      targets[id] = rng.normal();
    }
    const auto bins = stats::quantile_bin(scores, targets, k);
    int64_t lo = bins[0].count, hi = bins[0].count, total = 0;
    for (const auto& b : bins) {
      lo = std::min(lo, b.count);
      hi = std::max(hi, b.count);
      total += b.count;
    }
    CHECK(hi - lo <= 1);
    CHECK(total == n);
  }
}

TEST_CASE("quantile_bin: error paths") {
  std::map<std::string, double> targets = {{"a", 1.0}, {"b", 2.0}};
  CHECK_THROWS_AS(
      stats::quantile_bin({{"a", 1.0}, {"b", 1.0}}, targets, 2),
      DegenerateDataError);
  CHECK_THROWS_AS(stats::quantile_bin({{"a", 1.0}, {"b", 2.0}}, targets, 1),
                  ValidationError);
  CHECK_THROWS_AS(
      stats::quantile_bin({{"a", 1.0}, {"zz", 2.0}}, targets, 2),
      ValidationError);
}

TEST_CASE("stability_curve: thresholds filter by data volume") {
  std::map<std::string, double> scores, targets;
  std::map<std::string, int64_t> counts;
  synth::Rng rng(17);
  std::vector<double> xs, ys;
  for (int i = 0; i < 50; ++i) {
    const std::string id = "s" + std::to_string(i);
    const double x = rng.normal();
    scores[id] = x;
    targets[id] = 0.5 * x + rng.normal();
    counts[id] = i;
    xs.push_back(scores[id]);
    ys.push_back(targets[id]);
  }
  const auto curve =
      stats::stability_curve(scores, targets, counts, {0, 25, 1000});
  REQUIRE(curve.points.size() == 3);
  CHECK(curve.points[0].n == 50);
  REQUIRE(curve.points[0].r.has_value());
  CHECK(*curve.points[0].r == doctest::Approx(stats::pearson(xs, ys)));
  CHECK(curve.points[1].n == 25);
  CHECK(curve.points[2].n == 0);
  CHECK_FALSE(curve.points[2].r.has_value());

  CHECK_THROWS_AS(stats::stability_curve(scores, targets, counts, {10, 5}),
                  ValidationError);
  CHECK_THROWS_AS(stats::stability_curve(scores, targets, counts, {}),
                  ValidationError);
}

TEST_CASE("stability_curve: volume-dependent noise gives a rising curve") {
  synth::Rng rng(18);
  std::map<std::string, double> scores, targets;
  std::map<std::string, int64_t> counts;
  const std::vector<double> tiers = {1, 3, 10, 30, 100, 300, 1000, 3000};
  int id_counter = 0;
  for (double tier : tiers) {
    for (int i = 0; i < 60; ++i) {
      const std::string id = "s" + std::to_string(id_counter++);
      const double t = rng.normal();
      targets[id] = t;
      scores[id] = t + 2.5 / std::sqrt(tier) * rng.normal();
      counts[id] = static_cast<int64_t>(tier);
    }
  }
  const auto curve = stats::stability_curve(scores, targets, counts, tiers);
  for (size_t j = 1; j < curve.points.size(); ++j) {
    CHECK(curve.points[j].n <= curve.points[j - 1].n);
    REQUIRE(curve.points[j].r.has_value());
    CHECK(*curve.points[j].r >= *curve.points[j - 1].r - 1e-9);
  }
}

TEST_CASE("stats serialization has stable field names") {
  RegressionResult r;
  r.n = 10;
  r.p = 1;
  r.r2 = 0.5;
  r.adjusted_r2 = 0.4375;
  r.intercept = {"(intercept)", 1.0, 0.1, 10.0, 1e-5, "**"};
  r.coefficients = {{"food", 2.0, 0.5, 4.0, 0.003, "*"}};
  const auto j = stats::to_json(r);
  CHECK(j["n"] == 10);
  CHECK(j["coefficients"][0]["name"] == "food");
  CHECK(j["coefficients"][0]["code"] == "*");

  stats::StabilityCurve curve;
  curve.points = {{1.0, 0.5, 10}, {10.0, std::nullopt, 0}};
  const std::string csv = stats::to_csv(curve);
  CHECK(csv == "threshold,n,r\n1,10,0.5\n10,0,\n");

  std::vector<stats::BinSummary> bins = {{"Q1", 3, 2.0, 1.0, 3.0}};
  CHECK(stats::to_csv(bins) == "label,count,median,p2,p98\nQ1,3,2,1,3\n");
}
