#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "regreadout/control.hpp"
#include "regreadout/measurement.hpp"
#include "regreadout/stats.hpp"
#include "regreadout/theory.hpp"

namespace regreadout {

inline constexpr std::uint64_t kDefaultMasterSeed = 20240917;

/// Censoring above this fraction is flagged on the ensemble.
inline constexpr double kExcessiveCensoring = 0.10;
/// Speed-ups refuse epsilons censored at or above this fraction.
inline constexpr double kSpeedupCensoringLimit = 1e-3;

struct EnsembleOptions {
  std::size_t count = 10000;
  std::uint64_t master_seed = kDefaultMasterSeed;
  unsigned threads = 0;  // 0: hardware concurrency
  /// Time window for the per-trajectory ln(infidelity) slope. Every
  /// trajectory must still be running at the window end, so min_time has
  /// to cover it.
  std::optional<std::pair<double, double>> slope_window;
  std::optional<DiagonalState> initial_state;
};

struct EnsembleStats {
  SimulationParams params;
  PolicyKind policy = PolicyKind::none;
  std::size_t trajectory_count = 0;
  std::uint64_t master_seed = 0;

  /// Shared time grid, cut at the shortest trajectory.
  std::vector<double> sample_times;
  std::vector<double> mean_ln_delta;
  std::vector<double> ln_delta_stderr;

  std::vector<double> epsilons;
  std::vector<double> mean_time;
  std::vector<double> time_stderr;
  std::vector<double> censored_fraction;
  /// first_passage[k * epsilons.size() + e]; censored entries hold max_time.
  std::vector<double> first_passage;

  std::vector<BasisIndex> final_index;
  std::vector<BasisIndex> retrodicted;

  /// Mean and standard error of the per-trajectory OLS slopes of ln(infidelity)
  /// inside the slope window, when one was requested.
  std::optional<MeanError> ln_delta_slope;
  std::optional<std::pair<double, double>> slope_window;

  double max_censored_fraction() const;
  bool excessive_censoring() const { return max_censored_fraction() > kExcessiveCensoring; }
  std::size_t epsilon_index(double epsilon) const;  // throws when absent
};

EnsembleStats run_ensemble(const SimulationParams& params, const ControlPolicy& policy,
                           std::span<const double> epsilons, const EnsembleOptions& options);

/// 13 points per decade from 1e-1 down to 1e-6, descending.
std::vector<double> default_epsilon_grid();

enum class SpeedupMethod { fixed_epsilon, asymptotic_regression };
std::string_view to_string(SpeedupMethod method);

struct SpeedupEstimate {
  double value = 0.0;
  double std_error = 0.0;
  SpeedupMethod method = SpeedupMethod::fixed_epsilon;
  std::optional<std::pair<double, double>> epsilon_range;
};

/// <T>_nc(eps) / <T>_ctrl(eps) with first-order error propagation. Throws
/// when eps is missing or censored at kSpeedupCensoringLimit or more.
SpeedupEstimate speedup_fixed_epsilon(const EnsembleStats& no_control,
                                      const EnsembleStats& controlled, double epsilon);

/// Regression of <T> against ln(1/eps) over grid points inside [eps_lo, eps_hi].
struct MeanTimeRegression {
  LinearFit fit;              // OLS on the ensemble means
  MeanError slope;            // per-trajectory slopes, mean and standard error
  std::vector<double> x;      // ln(1/eps)
  std::vector<double> residuals;
};

inline constexpr double kAsymptoticEpsLo = 1e-6;
inline constexpr double kAsymptoticEpsHi = 1e-4;

MeanTimeRegression mean_time_regression(const EnsembleStats& stats,
                                        double eps_lo = kAsymptoticEpsLo,
                                        double eps_hi = kAsymptoticEpsHi);

/// Ratio of the regression slopes, no-control over controlled.
SpeedupEstimate asymptotic_speedup(const EnsembleStats& no_control, const EnsembleStats& controlled,
                                   double eps_lo = kAsymptoticEpsLo,
                                   double eps_hi = kAsymptoticEpsHi);

/// Analytic band drawn next to a measured speed-up.
SpeedupBounds reference_bounds(PolicyKind policy, int num_qubits);

struct SweepPoint {
  int num_qubits = 0;
  SpeedupEstimate speedup;
  SpeedupBounds bounds;
};

struct SweepResult {
  PolicyKind policy = PolicyKind::none;
  std::vector<SweepPoint> points;
  /// Weighted straight-line fit of speed-up against n (three or more points).
  std::optional<LinearFit> fit;
};

/// Runs a no-control and a controlled ensemble per n with shared seeds.
SweepResult speedup_scaling_sweep(std::span<const int> n_values, const ControlPolicy& policy,
                                  const SimulationParams& base, const EnsembleOptions& options);

}  // namespace regreadout
