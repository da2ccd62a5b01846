#include "regreadout/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace regreadout {

namespace {

// Fixed so that the reduction order, and therefore every bit of the
// output, does not depend on the thread count.
constexpr std::size_t kBlockSize = 64;

struct BlockSums {
  std::size_t length = std::numeric_limits<std::size_t>::max();
  std::vector<double> sum;
  std::vector<double> sum_sq;
};

bool close_to(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

double safe_log(double delta) { return std::log(std::max(delta, std::numeric_limits<double>::min())); }

std::vector<std::size_t> window_indices(const SimulationParams& params, std::pair<double, double> window) {
  const auto [lo, hi] = window;
  if (!(hi > lo) || lo < 0.0) throw std::invalid_argument("slope window must satisfy 0 <= lo < hi");
  if (hi > params.max_time) throw std::invalid_argument("slope window ends after max_time");
  if (params.min_time + 1e-12 < hi) {
    throw std::invalid_argument("min_time must reach the end of the slope window");
  }
  const double spacing = static_cast<double>(params.sample_stride()) * params.dt;
  const double tol = 1e-9 * spacing;
  std::vector<std::size_t> idx;
  for (std::size_t k = static_cast<std::size_t>(std::ceil((lo - tol) / spacing));; ++k) {
    const double t = static_cast<double>(k) * spacing;
    if (t > hi + tol) break;
    if (t >= lo - tol) idx.push_back(k);
  }
  if (idx.size() < 3) throw std::invalid_argument("slope window holds fewer than 3 samples");
  return idx;
}

template <class Fn>
void parallel_blocks(std::size_t blocks, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

double EnsembleStats::max_censored_fraction() const {
  if (censored_fraction.empty()) return 0.0;
  return *std::max_element(censored_fraction.begin(), censored_fraction.end());
}

std::size_t EnsembleStats::epsilon_index(double epsilon) const {
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    if (close_to(epsilons[e], epsilon)) return e;
  }
  throw std::invalid_argument("epsilon " + std::to_string(epsilon) + " is not on the ensemble grid");
}

EnsembleStats run_ensemble(const SimulationParams& params, const ControlPolicy& policy,
                           std::span<const double> epsilons, const EnsembleOptions& options) {
  params.validate();
  policy.validate(register_dimension(params.num_qubits));
  if (options.count < 2) throw std::invalid_argument("an ensemble needs at least 2 trajectories");

  std::vector<std::size_t> window;
  std::vector<double> weights;
  if (options.slope_window) {
    window = window_indices(params, *options.slope_window);
    const double spacing = static_cast<double>(params.sample_stride()) * params.dt;
    std::vector<double> t(window.size());
    for (std::size_t k = 0; k < window.size(); ++k) t[k] = static_cast<double>(window[k]) * spacing;
    weights = slope_coefficients(t);
  }

  const std::size_t count = options.count;
  const std::size_t neps = epsilons.size();
  EnsembleStats stats;
  stats.params = params;
  stats.policy = policy.kind;
  stats.trajectory_count = count;
  stats.master_seed = options.master_seed;
  stats.epsilons.assign(epsilons.begin(), epsilons.end());
  stats.first_passage.assign(count * neps, 0.0);
  stats.final_index.assign(count, 0);
  stats.retrodicted.assign(count, 0);
  std::vector<double> slopes(window.empty() ? 0 : count);
  std::vector<unsigned char> censored(count * neps, 0);

  const std::size_t blocks = (count + kBlockSize - 1) / kBlockSize;
  std::vector<BlockSums> block_sums(blocks);
  TrajectoryOptions traj_options;
  traj_options.initial_state = options.initial_state;

  parallel_blocks(blocks, options.threads, [&](std::size_t b) {
    BlockSums& acc = block_sums[b];
    const std::size_t end = std::min(count, (b + 1) * kBlockSize);
    for (std::size_t k = b * kBlockSize; k < end; ++k) {
      const auto result = simulate_trajectory(params, policy, epsilons, options.master_seed, k, traj_options);
      const std::size_t len = result.infidelity.size();
      if (len < acc.length) {
        acc.length = len;
        acc.sum.resize(len);
        acc.sum_sq.resize(len);
      }
      for (std::size_t s = 0; s < acc.length; ++s) {
        const double y = safe_log(result.infidelity[s]);
        acc.sum[s] += y;
        acc.sum_sq[s] += y * y;
      }
      if (!window.empty()) {
        if (len <= window.back()) {
          throw std::runtime_error("trajectory " + std::to_string(k) +
                                   " ended before the slope window closed");
        }
        double slope = 0.0;
        for (std::size_t w = 0; w < window.size(); ++w) slope += weights[w] * safe_log(result.infidelity[window[w]]);
        slopes[k] = slope;
      }
      for (std::size_t e = 0; e < neps; ++e) {
        if (result.first_passage[e]) {
          stats.first_passage[k * neps + e] = *result.first_passage[e];
        } else {
          stats.first_passage[k * neps + e] = params.max_time;
          censored[k * neps + e] = 1;
        }
      }
      stats.final_index[k] = result.final_index;
      stats.retrodicted[k] = result.retrodicted_index();
    }
  });

  // Ordered reduction over blocks.
  std::size_t length = std::numeric_limits<std::size_t>::max();
  for (const auto& acc : block_sums) length = std::min(length, acc.length);
  std::vector<double> sum(length, 0.0), sum_sq(length, 0.0);
  for (const auto& acc : block_sums) {
    for (std::size_t s = 0; s < length; ++s) {
      sum[s] += acc.sum[s];
      sum_sq[s] += acc.sum_sq[s];
    }
  }
  const double m = static_cast<double>(count);
  const std::uint64_t stride = params.sample_stride();
  stats.sample_times.resize(length);
  stats.mean_ln_delta.resize(length);
  stats.ln_delta_stderr.resize(length);
  for (std::size_t s = 0; s < length; ++s) {
    const double mean = sum[s] / m;
    const double var = std::max(0.0, (sum_sq[s] - m * mean * mean) / (m - 1.0));
    stats.sample_times[s] = static_cast<double>(s * stride) * params.dt;
    stats.mean_ln_delta[s] = mean;
    stats.ln_delta_stderr[s] = std::sqrt(var / m);
  }

  stats.mean_time.resize(neps);
  stats.time_stderr.resize(neps);
  stats.censored_fraction.resize(neps);
  std::vector<double> column(count);
  for (std::size_t e = 0; e < neps; ++e) {
    std::size_t n_censored = 0;
    for (std::size_t k = 0; k < count; ++k) {
      column[k] = stats.first_passage[k * neps + e];
      n_censored += censored[k * neps + e];
    }
    const auto me = mean_and_stderr(column);
    stats.mean_time[e] = me.mean;
    stats.time_stderr[e] = me.std_error;
    stats.censored_fraction[e] = static_cast<double>(n_censored) / m;
  }

  if (!window.empty()) {
    stats.ln_delta_slope = mean_and_stderr(slopes);
    stats.slope_window = options.slope_window;
  }
  return stats;
}

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int k = 13; k <= 78; ++k) grid.push_back(std::pow(10.0, -static_cast<double>(k) / 13.0));
  return grid;
}

std::string_view to_string(SpeedupMethod method) {
  return method == SpeedupMethod::fixed_epsilon ? "fixed_epsilon" : "asymptotic_regression";
}

SpeedupEstimate speedup_fixed_epsilon(const EnsembleStats& no_control,
                                      const EnsembleStats& controlled, double epsilon) {
  const std::size_t a = no_control.epsilon_index(epsilon);
  const std::size_t b = controlled.epsilon_index(epsilon);
  if (no_control.censored_fraction[a] >= kSpeedupCensoringLimit ||
      controlled.censored_fraction[b] >= kSpeedupCensoringLimit) {
    throw std::runtime_error("mean first-passage time at epsilon " + std::to_string(epsilon) +
                             " is censored; raise max_time");
  }
  const double t_nc = no_control.mean_time[a];
  const double t_c = controlled.mean_time[b];
  if (!(t_c > 0.0)) throw std::runtime_error("controlled mean time is zero");
  SpeedupEstimate s;
  s.method = SpeedupMethod::fixed_epsilon;
  s.value = t_nc / t_c;
  const double ra = no_control.time_stderr[a] / t_nc;
  const double rb = controlled.time_stderr[b] / t_c;
  s.std_error = s.value * std::sqrt(ra * ra + rb * rb);
  s.epsilon_range = std::pair{epsilon, epsilon};
  return s;
}

MeanTimeRegression mean_time_regression(const EnsembleStats& stats, double eps_lo, double eps_hi) {
  if (!(eps_lo > 0.0 && eps_lo < eps_hi && eps_hi < 1.0)) {
    throw std::invalid_argument("epsilon range must satisfy 0 < lo < hi < 1");
  }
  std::vector<std::size_t> cols;
  for (std::size_t e = 0; e < stats.epsilons.size(); ++e) {
    const double eps = stats.epsilons[e];
    if ((eps >= eps_lo || close_to(eps, eps_lo)) && (eps <= eps_hi || close_to(eps, eps_hi))) {
      cols.push_back(e);
    }
  }
  if (cols.size() < 5) {
    throw std::invalid_argument("fewer than 5 epsilon grid points inside the regression range");
  }
  MeanTimeRegression reg;
  std::vector<double> y;
  for (auto e : cols) {
    if (stats.censored_fraction[e] >= kSpeedupCensoringLimit) {
      throw std::runtime_error("mean first-passage time at epsilon " + std::to_string(stats.epsilons[e]) +
                               " is censored; raise max_time");
    }
    reg.x.push_back(std::log(1.0 / stats.epsilons[e]));
    y.push_back(stats.mean_time[e]);
  }
  reg.fit = fit_line(reg.x, y);
  for (std::size_t k = 0; k < y.size(); ++k) {
    reg.residuals.push_back(y[k] - (reg.fit.intercept + reg.fit.slope * reg.x[k]));
  }
  // The points share trajectories, so the fit's own error bar is too small.
  const auto w = slope_coefficients(reg.x);
  const std::size_t neps = stats.epsilons.size();
  std::vector<double> slopes(stats.trajectory_count);
  for (std::size_t k = 0; k < stats.trajectory_count; ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols.size(); ++c) s += w[c] * stats.first_passage[k * neps + cols[c]];
    slopes[k] = s;
  }
  reg.slope = mean_and_stderr(slopes);
  return reg;
}

SpeedupEstimate asymptotic_speedup(const EnsembleStats& no_control, const EnsembleStats& controlled,
                                   double eps_lo, double eps_hi) {
  const auto a = mean_time_regression(no_control, eps_lo, eps_hi);
  const auto b = mean_time_regression(controlled, eps_lo, eps_hi);
  if (!(b.fit.slope > 0.0)) throw std::runtime_error("controlled mean-time slope is not positive");
  SpeedupEstimate s;
  s.method = SpeedupMethod::asymptotic_regression;
  s.value = a.fit.slope / b.fit.slope;
  const double ra = a.slope.std_error / a.fit.slope;
  const double rb = b.slope.std_error / b.fit.slope;
  s.std_error = std::abs(s.value) * std::sqrt(ra * ra + rb * rb);
  s.epsilon_range = std::pair{eps_lo, eps_hi};
  return s;
}

SpeedupBounds reference_bounds(PolicyKind policy, int num_qubits) {
  switch (policy) {
    case PolicyKind::none: return {1.0, 1.0};
    case PolicyKind::h_ordering: return speedup_bounds_lo(num_qubits);
    case PolicyKind::random_permutation:
    case PolicyKind::fixed_cycle: return speedup_bounds_rp(num_qubits);
  }
  return {};
}

SweepResult speedup_scaling_sweep(std::span<const int> n_values, const ControlPolicy& policy,
                                  const SimulationParams& base, const EnsembleOptions& options) {
  SweepResult sweep;
  sweep.policy = policy.kind;
  const auto grid = default_epsilon_grid();
  for (int n : n_values) {
    SimulationParams params = base;
    params.num_qubits = n;
    EnsembleOptions opts = options;
    opts.slope_window.reset();
    opts.initial_state.reset();
    const auto nc = run_ensemble(params, ControlPolicy::none(), grid, opts);
    const auto ctrl = policy.kind == PolicyKind::none ? nc : run_ensemble(params, policy, grid, opts);
    sweep.points.push_back({n, asymptotic_speedup(nc, ctrl), reference_bounds(policy.kind, n)});
  }
  if (sweep.points.size() >= 3) {
    std::vector<double> x, y, sigma;
    for (const auto& p : sweep.points) {
      x.push_back(p.num_qubits);
      y.push_back(p.speedup.value);
      sigma.push_back(p.speedup.std_error);
    }
    const bool weighted = std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
    sweep.fit = weighted ? fit_line_weighted(x, y, sigma) : fit_line(x, y);
  }
  return sweep;
}

}  // namespace regreadout
