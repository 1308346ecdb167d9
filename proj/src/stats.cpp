#include "streetscore/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "streetscore/errors.hpp"

namespace streetscore::stats {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-14;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw DegenerateDataError("incomplete beta continued fraction failed to converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ValidationError("incomplete beta requires a > 0 and b > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("incomplete beta requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) {
    throw ValidationError("t distribution needs dof > 0");
  }
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw ValidationError("pearson: series lengths differ (" +
                          std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) {
    throw DegenerateDataError("pearson: need at least 3 points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateDataError("pearson: correlation undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double adjusted_r2(double r2, int64_t n, int p) {
  if (p < 0) throw ValidationError("adjusted_r2: p must be >= 0");
  if (n <= static_cast<int64_t>(p) + 1) {
    throw DegenerateDataError("adjusted_r2: requires n > p + 1");
  }
  return 1.0 - (1.0 - r2) * (static_cast<double>(n - 1) /
                             static_cast<double>(n - p - 1));
}

std::string significance_code(double p_value) {
  if (!(p_value >= 0.0 && p_value <= 1.0)) {
    throw ValidationError("significance_code: p-value outside [0, 1]");
  }
  if (p_value < 0.001) return "**";
  if (p_value < 0.01) return "*";
  if (p_value < 0.05) return ".";
  return "";
}

RegressionResult ols_fit(const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y,
                         const std::vector<std::string>& names) {
  const int64_t n = static_cast<int64_t>(y.size());
  if (X.size() != y.size()) {
    throw ValidationError("ols_fit: X row count does not match y");
  }
  const int p = X.empty() ? 0 : static_cast<int>(X.front().size());
  if (static_cast<int>(names.size()) != p) {
    throw ValidationError("ols_fit: name count does not match column count");
  }
  for (const auto& row : X) {
    if (static_cast<int>(row.size()) != p) {
      throw ValidationError("ols_fit: ragged design matrix");
    }
  }
  if (n <= static_cast<int64_t>(p) + 1) {
    throw DegenerateDataError("ols_fit: insufficient data, need n > p + 1 (n=" +
                              std::to_string(n) + ", p=" + std::to_string(p) +
                              ")");
  }

  const int k = p + 1;  // columns including the intercept
  Eigen::MatrixXd A(n, k);
  Eigen::VectorXd yv(n);
  for (int64_t i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    for (int j = 0; j < p; ++j) A(i, j + 1) = X[static_cast<size_t>(i)][static_cast<size_t>(j)];
    yv(i) = y[static_cast<size_t>(i)];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < k) {
    // Columns beyond the numerical rank in pivot order depend on the others.
    const auto& perm = qr.colsPermutation().indices();
    std::string dependent;
    for (int j = static_cast<int>(qr.rank()); j < k; ++j) {
      const int col = perm(j);
      if (!dependent.empty()) dependent += ", ";
      dependent += col == 0 ? "(intercept)" : names[static_cast<size_t>(col - 1)];
    }
    throw DegenerateDataError("ols_fit: design is collinear; dependent columns: " +
                              dependent);
  }

  const Eigen::VectorXd beta = qr.solve(yv);
  const Eigen::VectorXd resid = yv - A * beta;
  const double sse = resid.squaredNorm();
  const double ybar = yv.mean();
  const double sst = (yv.array() - ybar).square().sum();
  const double r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
  const double dof = static_cast<double>(n - k);
  const double s2 = sse / dof;

  // (A'A)^-1 = P (R'R)^-1 P' from the pivoted factorization A P = Q R.
  const Eigen::MatrixXd R =
      qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd M = Rinv * Rinv.transpose();
  const Eigen::MatrixXd C =
      qr.colsPermutation() * M * qr.colsPermutation().transpose();

  auto make_coefficient = [&](int col, const std::string& name) {
    Coefficient c;
    c.name = name;
    c.beta = beta(col);
    const double var = s2 * C(col, col);
    c.se = var > 0.0 ? std::sqrt(var) : 0.0;
    if (c.se > 0.0) {
      c.t = c.beta / c.se;
      c.p_value = student_t_two_sided_p(c.t, dof);
    } else {
      c.t = c.beta == 0.0 ? 0.0
                          : std::numeric_limits<double>::infinity() *
                                (c.beta > 0 ? 1.0 : -1.0);
      c.p_value = c.beta == 0.0 ? 1.0 : 0.0;
    }
    c.code = significance_code(c.p_value);
    return c;
  };

  RegressionResult result;
  result.n = n;
  result.p = p;
  result.r2 = r2;
  result.adjusted_r2 = adjusted_r2(r2, n, p);
  result.intercept = make_coefficient(0, "(intercept)");
  for (int j = 0; j < p; ++j) {
    result.coefficients.push_back(
        make_coefficient(j + 1, names[static_cast<size_t>(j)]));
  }
  return result;
}

double quantile_linear(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) {
    throw ValidationError("quantile of an empty vector");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ValidationError("quantile level outside [0, 1]");
  }
  const double h = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<BinSummary> quantile_bin(
    const std::vector<std::pair<std::string, double>>& scores,
    const std::map<std::string, double>& targets, int k) {
  if (k < 2) throw ValidationError("quantile_bin: need k >= 2");
  std::vector<double> metric;
  metric.reserve(scores.size());
  for (const auto& [id, m] : scores) {
    if (!targets.count(id)) {
      throw ValidationError("quantile_bin: no target score for segment '" +
                            id + "'");
    }
    metric.push_back(m);
  }
  std::sort(metric.begin(), metric.end());
  std::vector<double> uniq(metric);
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  const size_t distinct = uniq.size();
  if (distinct < static_cast<size_t>(k)) {
    throw DegenerateDataError(
        "quantile_bin: fewer distinct metric values (" +
        std::to_string(distinct) + ") than bins (" + std::to_string(k) + ")");
  }

  std::vector<double> cuts;
  for (int j = 1; j < k; ++j) {
    cuts.push_back(quantile_linear(metric, static_cast<double>(j) /
                                               static_cast<double>(k)));
  }

  std::vector<std::vector<double>> bin_targets(static_cast<size_t>(k));
  for (const auto& [id, m] : scores) {
    size_t bin = static_cast<size_t>(k) - 1;
    for (size_t j = 0; j < cuts.size(); ++j) {
      if (m <= cuts[j]) {  // boundary values go to the lower bin
        bin = j;
        break;
      }
    }
    bin_targets[bin].push_back(targets.at(id));
  }

  std::vector<BinSummary> bins;
  for (int j = 0; j < k; ++j) {
    BinSummary b;
    b.label = "Q" + std::to_string(j + 1);
    auto& vals = bin_targets[static_cast<size_t>(j)];
    b.count = static_cast<int64_t>(vals.size());
    if (vals.empty()) {
      b.median = b.p2 = b.p98 = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::sort(vals.begin(), vals.end());
      b.median = quantile_linear(vals, 0.5);
      b.p2 = quantile_linear(vals, 0.02);
      b.p98 = quantile_linear(vals, 0.98);
    }
    bins.push_back(std::move(b));
  }
  return bins;
}

StabilityCurve stability_curve(const std::map<std::string, double>& scores,
                               const std::map<std::string, double>& targets,
                               const std::map<std::string, int64_t>& counts,
                               const std::vector<double>& thresholds) {
  if (thresholds.empty()) {
    throw ValidationError("stability_curve: no thresholds given");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ValidationError("stability_curve: thresholds must be sorted ascending");
  }

  struct Entry {
    double score, target;
    int64_t count;
  };
  std::vector<Entry> entries;
  for (const auto& [id, score] : scores) {
    const auto t = targets.find(id);
    const auto c = counts.find(id);
    if (t == targets.end() || c == counts.end()) continue;
    entries.push_back({score, t->second, c->second});
  }

  StabilityCurve curve;
  for (double threshold : thresholds) {
    std::vector<double> x, y;
    for (const auto& e : entries) {
      if (static_cast<double>(e.count) >= threshold) {
        x.push_back(e.score);
        y.push_back(e.target);
      }
    }
    StabilityPoint point;
    point.threshold = threshold;
    point.n = static_cast<int64_t>(x.size());
    if (x.size() >= 3) {
      try {
        point.r = pearson(x, y);
      } catch (const DegenerateDataError&) {
        // constant series at this threshold: r stays undefined
      }
    }
    curve.points.push_back(std::move(point));
  }
  return curve;
}

nlohmann::ordered_json to_json(const RegressionResult& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["p"] = r.p;
  j["r2"] = r.r2;
  j["adjusted_r2"] = r.adjusted_r2;
  auto coef_json = [](const Coefficient& c) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["beta"] = c.beta;
    cj["se"] = c.se;
    cj["t"] = c.t;
    cj["p_value"] = c.p_value;
    cj["code"] = c.code;
    return cj;
  };
  j["intercept"] = coef_json(r.intercept);
  nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
  for (const auto& c : r.coefficients) coeffs.push_back(coef_json(c));
  j["coefficients"] = std::move(coeffs);
  return j;
}

nlohmann::ordered_json to_json(const StabilityCurve& curve) {
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& p : curve.points) {
    nlohmann::ordered_json pj;
    pj["threshold"] = p.threshold;
    pj["n"] = p.n;
    if (p.r) pj["r"] = *p.r;
    points.push_back(std::move(pj));
  }
  nlohmann::ordered_json j;
  j["points"] = std::move(points);
  return j;
}

nlohmann::ordered_json to_json(const std::vector<BinSummary>& bins) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& b : bins) {
    nlohmann::ordered_json bj;
    bj["label"] = b.label;
    bj["count"] = b.count;
    if (b.count > 0) {
      bj["median"] = b.median;
      bj["p2"] = b.p2;
      bj["p98"] = b.p98;
    }
    out.push_back(std::move(bj));
  }
  return out;
}

std::string to_csv(const RegressionResult& r) {
  std::ostringstream out;
  out << "name,beta,se,t,p_value,code\n";
  auto row = [&](const Coefficient& c) {
    out << c.name << ',' << fmt(c.beta) << ',' << fmt(c.se) << ',' << fmt(c.t)
        << ',' << fmt(c.p_value) << ',' << c.code << '\n';
  };
  row(r.intercept);
  for (const auto& c : r.coefficients) row(c);
  return out.str();
}

std::string to_csv(const StabilityCurve& curve) {
  std::ostringstream out;
  out << "threshold,n,r\n";
  for (const auto& p : curve.points) {
    out << fmt(p.threshold) << ',' << p.n << ',';
    if (p.r) out << fmt(*p.r);
    out << '\n';
  }
  return out.str();
}

std::string to_csv(const std::vector<BinSummary>& bins) {
  std::ostringstream out;
  out << "label,count,median,p2,p98\n";
  for (const auto& b : bins) {
    out << b.label << ',' << b.count << ',';
    if (b.count > 0) {
      out << fmt(b.median) << ',' << fmt(b.p2) << ',' << fmt(b.p98);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace streetscore::stats
