#pragma once

// Independent reference computations used to check the library. None of
// these call into ahmkit; each takes a different route to the same number.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Cohen's kappa by brute force over every (item, item) pair: chance
/// agreement is the share of cross pairs (i from A, j from B) whose labels
/// coincide.
inline double kappa(const std::vector<std::pair<std::string, std::string>>& pairs) {
  const double n = static_cast<double>(pairs.size());
  double agree = 0;
  for (const auto& [a, b] : pairs) agree += (a == b) ? 1.0 : 0.0;
  double cross = 0;
  for (const auto& pi : pairs) {
    for (const auto& pj : pairs) cross += (pi.first == pj.second) ? 1.0 : 0.0;
  }
  const double p_o = agree / n;
  const double p_e = cross / (n * n);
  return (p_o - p_e) / (1.0 - p_e);
}

/// Two-rater absolute-agreement ICC through sample moments. With s_x², s_y²
/// and s_xy the (n−1)-normalized variances and covariance and d̄ the mean
/// rater difference, the mean-square expression reduces to
///   2 s_xy / (s_x² + s_y² + d̄² − var(x − y) / n).
inline double icc_2_1(const std::vector<std::array<double, 2>>& r) {
  const double n = static_cast<double>(r.size());
  double mx = 0, my = 0;
  for (const auto& v : r) {
    mx += v[0];
    my += v[1];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& v : r) {
    sxx += (v[0] - mx) * (v[0] - mx);
    syy += (v[1] - my) * (v[1] - my);
    sxy += (v[0] - mx) * (v[1] - my);
  }
  sxx /= n - 1;
  syy /= n - 1;
  sxy /= n - 1;
  const double d = mx - my;
  const double var_d = sxx + syy - 2 * sxy;
  return 2 * sxy / (sxx + syy + d * d - var_d / n);
}

/// Student-t density.
inline double t_pdf(double t, double nu) {
  const double log_c = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * M_PI);
  return std::exp(log_c - (nu + 1) / 2 * std::log1p(t * t / nu));
}

/// Two-sided p-value of a correlation: 1 − 2∫₀^|t| f(u) du by composite
/// Simpson quadrature.
inline double correlation_p(double r, std::size_t n) {
  const double nu = static_cast<double>(n) - 2;
  const double t = std::fabs(r) * std::sqrt(nu / (1 - r * r));
  const int m = 20000;  // even
  const double h = t / m;
  double s = t_pdf(0, nu) + t_pdf(t, nu);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * t_pdf(i * h, nu);
  return 1.0 - 2.0 * (s * h / 3.0);
}

/// Standard normal quantile by bisection on the erfc form of the CDF.
inline double normal_quantile(double p) {
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

/// Fisher-z interval computed with exp/log instead of tanh/atanh.
inline std::pair<double, double> fisher_ci(double r, std::size_t n, double level = 0.95) {
  const double z = 0.5 * std::log((1 + r) / (1 - r));
  const double half = normal_quantile(0.5 + level / 2) / std::sqrt(static_cast<double>(n) - 3);
  auto back = [](double v) { return (std::exp(2 * v) - 1) / (std::exp(2 * v) + 1); };
  return {back(z - half), back(z + half)};
}

/// Median by sorting.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

/// Rounds half away from zero to `digits` decimals.
inline double round_to(double v, int digits) {
  const double s = std::pow(10.0, digits);
  return std::round(v * s) / s;
}

/// One printed row of the published bridge table (n = 24 throughout).
struct PrintedCorrelation {
  double r;
  double p;          // printed p; 0 means "< 0.001"
  double ci_low;     // printed to two decimals
  double ci_high;
};

inline constexpr std::size_t kPrintedN = 24;

inline constexpr std::array<PrintedCorrelation, 9> kPrintedCorrelations{{
    {0.578, 0.003, 0.23, 0.80},
    {0.530, 0.008, 0.16, 0.77},
    {0.450, 0.027, 0.06, 0.72},
    {0.532, 0.007, 0.16, 0.77},
    {0.595, 0.002, 0.25, 0.81},
    {0.457, 0.025, 0.07, 0.73},
    {0.760, 0.0, 0.51, 0.89},
    {0.779, 0.0, 0.55, 0.90},
    {0.740, 0.0, 0.48, 0.88},
}};

}  // namespace oracle
