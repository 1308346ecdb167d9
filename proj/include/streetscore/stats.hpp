#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace streetscore::stats {

// Product-moment correlation. Throws on length mismatch, fewer than 3
// points, or a constant series.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// 1 - (1 - r2) * (n - 1) / (n - p - 1)
double adjusted_r2(double r2, int64_t n, int p);

// "**" p<0.001, "*" p<0.01, "." p<0.05, "" otherwise.
std::string significance_code(double p_value);

struct Coefficient {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p_value = 1.0;
  std::string code;
};

struct RegressionResult {
  Coefficient intercept;
  std::vector<Coefficient> coefficients;
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  int64_t n = 0;
  int p = 0;  // regressor count, intercept excluded
};

// Least squares with an intercept always included, solved by Householder QR
// with column pivoting. Standard errors use the unbiased residual variance;
// p-values are two-sided from a t distribution with n - p - 1 dof.
// X has n rows of p values each.
RegressionResult ols_fit(const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y,
                         const std::vector<std::string>& names);

// Regularized incomplete beta I_x(a, b), relative tolerance ~1e-12.
double regularized_incomplete_beta(double a, double b, double x);

// P(|T_dof| >= |t|)
double student_t_two_sided_p(double t, double dof);

// Linear-interpolation quantile of an ascending-sorted vector.
double quantile_linear(const std::vector<double>& sorted, double q);

struct BinSummary {
  std::string label;
  int64_t count = 0;
  double median = 0.0;
  double p2 = 0.0;   // 2nd percentile of the target
  double p98 = 0.0;  // 98th percentile of the target
};

// Equal-frequency bins split at metric quantiles; boundary values fall to
// the lower bin. Per-bin median/p2/p98 summarize the target score.
std::vector<BinSummary> quantile_bin(
    const std::vector<std::pair<std::string, double>>& scores,
    const std::map<std::string, double>& targets, int k);

struct StabilityPoint {
  double threshold = 0.0;
  std::optional<double> r;  // absent when n < 3 or a series is constant
  int64_t n = 0;
};

struct StabilityCurve {
  std::vector<StabilityPoint> points;
};

// Correlation between score and target over segments whose data volume is
// at least T, for each threshold T.
StabilityCurve stability_curve(const std::map<std::string, double>& scores,
                               const std::map<std::string, double>& targets,
                               const std::map<std::string, int64_t>& counts,
                               const std::vector<double>& thresholds);

inline const std::vector<double>& default_stability_thresholds() {
  static const std::vector<double> ladder = {1, 3, 10, 30, 100, 300, 1000, 3000};
  return ladder;
}

nlohmann::ordered_json to_json(const RegressionResult& r);
nlohmann::ordered_json to_json(const StabilityCurve& curve);
nlohmann::ordered_json to_json(const std::vector<BinSummary>& bins);
std::string to_csv(const RegressionResult& r);
std::string to_csv(const StabilityCurve& curve);
std::string to_csv(const std::vector<BinSummary>& bins);

}  // namespace streetscore::stats
