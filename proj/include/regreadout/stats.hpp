#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace regreadout {

struct MeanError {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(count)
};

MeanError mean_and_stderr(std::span<const double> values);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_stderr = 0.0;
  double slope_stderr = 0.0;
  double covariance = 0.0;  // cov(intercept, slope)
  double chi_square = 0.0;  // residual sum of squares (weighted fits: chi^2)
};

/// Ordinary least squares; parameter errors from the residual scatter.
/// Throws std::invalid_argument with fewer than 3 points or degenerate x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Weighted least squares with known per-point standard deviations; the
/// parameter errors are propagated from `sigma` alone.
LinearFit fit_line_weighted(std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma);

/// Coefficients w with OLS slope = sum_k w_k y_k. The OLS slope is linear in
/// y, so the slope of an ensemble-mean curve equals the mean of the
/// per-member slopes, which gives an honest standard error when the points
/// of the mean curve are correlated.
std::vector<double> slope_coefficients(std::span<const double> x);

/// Wald-Wolfowitz runs test on the signs of `residuals` (zeros skipped).
struct RunsTest {
  std::size_t runs = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation
};

RunsTest runs_test(std::span<const double> residuals);

/// Upper tail P(X >= statistic) for chi-square with `dof` degrees of freedom.
double chi_square_upper_tail(double statistic, double dof);

/// Pearson statistic for observed counts against equal expected counts.
double uniform_chi_square(std::span<const std::size_t> counts);

}  // namespace regreadout
