#include "regreadout/stats.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_fit.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace regreadout {

MeanError mean_and_stderr(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

namespace {

void check_fit_input(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit: x and y differ in length");
  if (x.size() < 3) throw std::invalid_argument("fit: fewer than 3 usable points");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw std::invalid_argument("fit: x values are all equal");
}

}  // namespace

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  check_fit_input(x, y);
  LinearFit fit;
  double cov00 = 0.0, cov11 = 0.0;
  gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &fit.intercept, &fit.slope, &cov00,
                 &fit.covariance, &cov11, &fit.chi_square);
  fit.intercept_stderr = std::sqrt(cov00);
  fit.slope_stderr = std::sqrt(cov11);
  return fit;
}

LinearFit fit_line_weighted(std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma) {
  check_fit_input(x, y);
  if (sigma.size() != x.size()) throw std::invalid_argument("fit: sigma length mismatch");
  std::vector<double> w(sigma.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!(sigma[k] > 0.0)) throw std::invalid_argument("fit: sigma must be positive");
    w[k] = 1.0 / (sigma[k] * sigma[k]);
  }
  LinearFit fit;
  double cov00 = 0.0, cov11 = 0.0;
  gsl_fit_wlinear(x.data(), 1, w.data(), 1, y.data(), 1, x.size(), &fit.intercept, &fit.slope,
                  &cov00, &fit.covariance, &cov11, &fit.chi_square);
  fit.intercept_stderr = std::sqrt(cov00);
  fit.slope_stderr = std::sqrt(cov11);
  return fit;
}

std::vector<double> slope_coefficients(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("slope needs at least 2 points");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double sxx = 0.0;
  for (double v : x) sxx += (v - mean) * (v - mean);
  if (!(sxx > 0.0)) throw std::invalid_argument("slope: x values are all equal");
  std::vector<double> w(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) w[k] = (x[k] - mean) / sxx;
  return w;
}

RunsTest runs_test(std::span<const double> residuals) {
  RunsTest t;
  int last = 0;
  for (double r : residuals) {
    if (r == 0.0) continue;
    const int sign = r > 0.0 ? 1 : -1;
    (sign > 0 ? t.positives : t.negatives)++;
    if (sign != last) ++t.runs;
    last = sign;
  }
  const double n1 = static_cast<double>(t.positives);
  const double n2 = static_cast<double>(t.negatives);
  const double n = n1 + n2;
  if (n1 == 0.0 || n2 == 0.0) {
    t.z = -std::numeric_limits<double>::infinity();
    t.p_value = 0.0;
    return t;
  }
  const double expected = 2.0 * n1 * n2 / n + 1.0;
  const double variance = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0));
  t.z = (static_cast<double>(t.runs) - expected) / std::sqrt(variance);
  t.p_value = 2.0 * gsl_cdf_ugaussian_Q(std::abs(t.z));
  return t;
}

double chi_square_upper_tail(double statistic, double dof) {
  return gsl_cdf_chisq_Q(statistic, dof);
}

double uniform_chi_square(std::span<const std::size_t> counts) {
  if (counts.empty()) throw std::invalid_argument("no counts");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

}  // namespace regreadout
