#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>

#include "regreadout/stats.hpp"

using namespace regreadout;

TEST_CASE("mean and standard error") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto me = mean_and_stderr(v);
  CHECK(me.mean == 2.5);
  CHECK(me.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(mean_and_stderr(std::vector<double>{3.0}).std_error == 0.0);
  CHECK_THROWS_AS(mean_and_stderr(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("ordinary least squares against the normal equations") {
  const std::vector<double> x{0, 1, 2, 3, 4, 5};
  const std::vector<double> y{1.1, 2.9, 5.2, 7.1, 8.8, 11.2};
  const double n = 6;
  const double sx = 15, sy = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0, sxy = 0;
  for (int i = 0; i < 6; ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double rss = 0;
  for (int i = 0; i < 6; ++i) rss += std::pow(y[i] - intercept - slope * x[i], 2);
  const double slope_se = std::sqrt(rss / (n - 2) / (sxx - sx * sx / n));

  const auto fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(intercept).epsilon(1e-12));
  CHECK(fit.slope_stderr == doctest::Approx(slope_se).epsilon(1e-10));
  CHECK(fit.chi_square == doctest::Approx(rss).epsilon(1e-10));

  const auto w = slope_coefficients(x);
  double via_weights = 0;
  for (int i = 0; i < 6; ++i) via_weights += w[i] * y[i];
  CHECK(via_weights == doctest::Approx(slope).epsilon(1e-12));

  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 2}, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("weighted least squares") {
  const std::vector<double> x{2, 3, 4, 5};
  const std::vector<double> y{1.32, 1.72, 2.12, 2.51};
  const std::vector<double> s{0.01, 0.02, 0.02, 0.04};
  // closed form with w = 1/s^2
  double W = 0, Wx = 0, Wy = 0, Wxx = 0, Wxy = 0;
  for (int i = 0; i < 4; ++i) {
    const double w = 1 / (s[i] * s[i]);
    W += w;
    Wx += w * x[i];
    Wy += w * y[i];
    Wxx += w * x[i] * x[i];
    Wxy += w * x[i] * y[i];
  }
  const double det = W * Wxx - Wx * Wx;
  const auto fit = fit_line_weighted(x, y, s);
  CHECK(fit.slope == doctest::Approx((W * Wxy - Wx * Wy) / det).epsilon(1e-12));
  CHECK(fit.slope_stderr == doctest::Approx(std::sqrt(W / det)).epsilon(1e-12));
  CHECK_THROWS_AS(fit_line_weighted(x, y, std::vector<double>{1, 1, 0, 1}), std::invalid_argument);
}

TEST_CASE("runs test") {
  const std::vector<double> alternating{1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1};
  const auto t = runs_test(alternating);
  CHECK(t.runs == 12);
  CHECK(t.positives == 6);
  // expected runs 7, variance 2.7272..., z = 5 / sqrt(30/11)
  CHECK(t.z == doctest::Approx(5.0 / std::sqrt(30.0 / 11.0)));
  CHECK(t.p_value < 0.01);

  const std::vector<double> blocks{1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1};
  CHECK(runs_test(blocks).runs == 2);
  CHECK(runs_test(blocks).p_value < 0.01);
  CHECK(runs_test(std::vector<double>{1, 2, 3}).p_value == 0.0);
}

TEST_CASE("chi-square") {
  CHECK(chi_square_upper_tail(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_upper_tail(0.0, 5) == 1.0);
  const std::vector<std::size_t> counts{10, 20, 30};
  CHECK(uniform_chi_square(counts) == doctest::Approx(10.0));
}
