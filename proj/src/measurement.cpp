#include "regreadout/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace regreadout {

std::string_view to_string(Integrator integrator) {
  return integrator == Integrator::euler ? "euler" : "exact";
}

Integrator parse_integrator(std::string_view name) {
  if (name == "euler") return Integrator::euler;
  if (name == "exact") return Integrator::exact;
  throw std::invalid_argument("unknown integrator '" + std::string(name) +
                              "' (expected euler or exact)");
}

void SimulationParams::validate() const {
  register_dimension(num_qubits);
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(std::isfinite(max_time) && max_time > 0.0, "max_time must be positive");
  require(stop_epsilon > 0.0 && stop_epsilon < 1.0, "stop_epsilon must lie in (0, 1)");
  require(min_time >= 0.0 && min_time <= max_time, "min_time must lie in [0, max_time]");
  require(sample_interval >= 0.0, "sample_interval must be nonnegative");
}

std::uint64_t SimulationParams::max_steps() const {
  return static_cast<std::uint64_t>(std::ceil(max_time / dt - 1e-9));
}

std::uint64_t SimulationParams::sample_stride() const {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(sample_interval / dt)));
}

RecordAccumulator::RecordAccumulator(int num_qubits)
    : records_(static_cast<std::size_t>(num_qubits), 0.0) {
  register_dimension(num_qubits);
}

void RecordAccumulator::add(const StepIncrements& inc, double dt) {
  if (inc.dR.size() != records_.size()) throw std::invalid_argument("record size mismatch");
  for (std::size_t r = 0; r < records_.size(); ++r) records_[r] += inc.dR[r];
  elapsed_ += dt;
}

double RecordAccumulator::signed_combination(BasisIndex q) const {
  const int n = num_qubits();
  double acc = 0.0;
  for (int r = 1; r <= n; ++r) acc += qubit_bit(n, r, q) ? -records_[r - 1] : records_[r - 1];
  return acc;
}

BasisIndex TrajectoryResult::retrodicted_index() const {
  ControlLog log(cumulative_control.size());
  log.cumulative = cumulative_control;
  return retrodict(final_index, log);
}

namespace {

// Shared arithmetic for both the single-step API and the trajectory loop.
// Probabilities live in a plain buffer; signs[r * dim + i] is the unshifted
// eigenvalue of Z^r on basis state i.
class StepKernel {
 public:
  explicit StepKernel(const SimulationParams& params)
      : n_(params.num_qubits),
        dim_(register_dimension(params.num_qubits)),
        dt_(params.dt),
        coupling_(2.0 * std::sqrt(2.0 * params.gamma)),
        signs_(static_cast<std::size_t>(n_) * dim_),
        mean_z_(static_cast<std::size_t>(n_)),
        exponent_(dim_),
        noise_(0.0, std::sqrt(params.dt)) {
    for (int r = 1; r <= n_; ++r) {
      for (std::size_t i = 0; i < dim_; ++i) {
        signs_[(r - 1) * dim_ + i] = qubit_bit(n_, r, static_cast<BasisIndex>(i)) ? -1.0 : 1.0;
      }
    }
  }

  std::size_t dim() const { return dim_; }

  void mean_z(std::span<const double> probs) {
    for (int r = 0; r < n_; ++r) {
      const double* s = &signs_[r * dim_];
      double acc = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) acc += s[i] * probs[i];
      mean_z_[r] = acc;
    }
  }

  void draw(std::span<const double> probs, Rng& rng, StepIncrements& inc) {
    mean_z(probs);
    for (int r = 0; r < n_; ++r) {
      inc.dW[r] = noise_(rng);
      inc.dR[r] = coupling_ * mean_z_[r] * dt_ + inc.dW[r];
    }
  }

  void exact(std::span<double> probs, const StepIncrements& inc) {
    std::fill(exponent_.begin(), exponent_.end(), 0.0);
    for (int r = 0; r < n_; ++r) {
      const double* s = &signs_[r * dim_];
      const double kick = coupling_ * inc.dR[r];
      for (std::size_t i = 0; i < dim_; ++i) exponent_[i] += s[i] * kick;
    }
    const double shift = *std::max_element(exponent_.begin(), exponent_.end());
    double total = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      probs[i] *= std::exp(exponent_[i] - shift);
      total += probs[i];
    }
    normalize(probs, total);
  }

  void euler(std::span<double> probs, const StepIncrements& inc) {
    mean_z(probs);
    std::fill(exponent_.begin(), exponent_.end(), 1.0);
    for (int r = 0; r < n_; ++r) {
      const double* s = &signs_[r * dim_];
      const double dW = inc.dR[r] - coupling_ * mean_z_[r] * dt_;
      for (std::size_t i = 0; i < dim_; ++i) exponent_[i] += coupling_ * dW * (s[i] - mean_z_[r]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      double p = probs[i] * exponent_[i];
      if (p < -kEulerNegativityTolerance) {
        throw IntegrationError("Euler step drove population " + std::to_string(i) + " to " +
                               std::to_string(p) + "; dt is too large for this integrator");
      }
      p = std::clamp(p, 0.0, 1.0);
      probs[i] = p;
      total += p;
    }
    normalize(probs, total);
  }

 private:
  static void normalize(std::span<double> probs, double total) {
    if (!std::isfinite(total) || total <= 0.0) {
      throw IntegrationError("state lost normalization (sum = " + std::to_string(total) + ")");
    }
    for (double& p : probs) p /= total;
  }

  int n_;
  std::size_t dim_;
  double dt_;
  double coupling_;
  std::vector<double> signs_;
  std::vector<double> mean_z_;
  std::vector<double> exponent_;
  std::normal_distribution<double> noise_;
};

void check_state_matches(const DiagonalState& state, const SimulationParams& params) {
  if (state.num_qubits() != params.num_qubits) {
    throw std::invalid_argument("state has " + std::to_string(state.num_qubits()) +
                                " qubits, parameters say " + std::to_string(params.num_qubits));
  }
}

void check_increments(const StepIncrements& inc, const SimulationParams& params) {
  const auto n = static_cast<std::size_t>(params.num_qubits);
  if (inc.dW.size() != n || inc.dR.size() != n) {
    throw std::invalid_argument("increments do not match the qubit count");
  }
}

}  // namespace

StepIncrements generate_increments(const DiagonalState& state, const SimulationParams& params,
                                   Rng& rng) {
  check_state_matches(state, params);
  StepKernel kernel(params);
  StepIncrements inc{std::vector<double>(params.num_qubits), std::vector<double>(params.num_qubits)};
  kernel.draw(state.probs(), rng, inc);
  return inc;
}

DiagonalState euler_step(const DiagonalState& state, const StepIncrements& inc,
                         const SimulationParams& params) {
  check_state_matches(state, params);
  check_increments(inc, params);
  std::vector<double> probs(state.probs().begin(), state.probs().end());
  StepKernel(params).euler(probs, inc);
  return DiagonalState(state.num_qubits(), std::move(probs));
}

DiagonalState exact_step(const DiagonalState& state, const StepIncrements& inc,
                         const SimulationParams& params) {
  check_state_matches(state, params);
  check_increments(inc, params);
  std::vector<double> probs(state.probs().begin(), state.probs().end());
  StepKernel(params).exact(probs, inc);
  return DiagonalState(state.num_qubits(), std::move(probs));
}

TrajectoryResult simulate_trajectory(const SimulationParams& params, const ControlPolicy& policy,
                                     std::span<const double> epsilons, Rng& noise_rng,
                                     Rng& control_rng, const TrajectoryOptions& options) {
  params.validate();
  const std::size_t dim = register_dimension(params.num_qubits);
  policy.validate(dim);
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] >= params.stop_epsilon && epsilons[k] < 1.0)) {
      throw std::invalid_argument("every target epsilon must lie in [stop_epsilon, 1)");
    }
    if (k > 0 && epsilons[k] > epsilons[k - 1]) {
      throw std::invalid_argument("target epsilons must be sorted in descending order");
    }
  }

  StepKernel kernel(params);
  std::vector<double> probs;
  if (options.initial_state) {
    check_state_matches(*options.initial_state, params);
    probs.assign(options.initial_state->probs().begin(), options.initial_state->probs().end());
  } else {
    probs.assign(dim, 1.0 / static_cast<double>(dim));
  }
  std::vector<double> scratch(dim);
  std::vector<BasisIndex> control(dim);
  std::vector<BasisIndex> cumulative(dim);
  std::iota(cumulative.begin(), cumulative.end(), BasisIndex{0});
  std::vector<BasisIndex> composed(dim);
  std::optional<detail::HOrderer> h_orderer;
  if (policy.kind == PolicyKind::h_ordering) h_orderer.emplace(params.num_qubits);
  StepIncrements inc{std::vector<double>(params.num_qubits), std::vector<double>(params.num_qubits)};

  TrajectoryResult result;
  result.epsilons.assign(epsilons.begin(), epsilons.end());
  result.first_passage.assign(epsilons.size(), std::nullopt);

  const auto max_steps = params.max_steps();
  const auto stride = params.sample_stride();
  double infidelity = detail::sum_except(probs, detail::argmax(probs));
  double time = 0.0;
  std::size_t next_target = 0;
  auto update_first_passage = [&](double prev_infidelity, double prev_time) {
    while (next_target < epsilons.size() && infidelity <= epsilons[next_target]) {
      double when = time;
      // Interpolate linearly in ln(infidelity) inside the bracketing step.
      if (infidelity > 0.0 && prev_infidelity > epsilons[next_target]) {
        const double lo = std::log(infidelity);
        const double hi = std::log(prev_infidelity);
        when = prev_time + (time - prev_time) * (hi - std::log(epsilons[next_target])) / (hi - lo);
      }
      result.first_passage[next_target++] = when;
    }
  };
  update_first_passage(infidelity, 0.0);
  result.sample_times.push_back(0.0);
  result.infidelity.push_back(infidelity);

  std::uint64_t step = 0;
  bool stopped = infidelity <= params.stop_epsilon && params.min_time <= 0.0;
  while (!stopped && step < max_steps) {
    // (1) control
    bool permuted = true;
    switch (policy.kind) {
      case PolicyKind::none: permuted = false; break;
      case PolicyKind::h_ordering: (*h_orderer)(probs, control); break;
      case PolicyKind::random_permutation:
        detail::sample_permutation_into(control_rng, control);
        break;
      case PolicyKind::fixed_cycle: {
        const auto image = policy.cycle[step % policy.cycle.size()].image();
        std::copy(image.begin(), image.end(), control.begin());
        break;
      }
    }
    if (permuted) {
      detail::permute_into(probs, control, scratch);
      probs.swap(scratch);
      for (std::size_t i = 0; i < dim; ++i) composed[i] = control[cumulative[i]];
      cumulative.swap(composed);
    } else {
      std::iota(control.begin(), control.end(), BasisIndex{0});
    }

    // (2) record, (3) integrate
    kernel.draw(probs, noise_rng, inc);
    if (params.integrator == Integrator::exact) {
      kernel.exact(probs, inc);
    } else {
      kernel.euler(probs, inc);
    }

    // (4) bookkeeping
    ++step;
    const double prev_time = time;
    const double prev_infidelity = infidelity;
    time = static_cast<double>(step) * params.dt;
    infidelity = detail::sum_except(probs, detail::argmax(probs));
    if (!std::isfinite(infidelity)) {
      throw IntegrationError("non-finite state at step " + std::to_string(step) +
                             " (t = " + std::to_string(time) + ")");
    }
    update_first_passage(prev_infidelity, prev_time);
    if (step % stride == 0) {
      result.sample_times.push_back(time);
      result.infidelity.push_back(infidelity);
    }
    if (options.observer) options.observer(StepView{step, time, probs, inc, control});
    stopped = infidelity <= params.stop_epsilon && time >= params.min_time - 1e-12 * params.dt;
  }

  result.reached_stop = infidelity <= params.stop_epsilon;
  result.final_index = static_cast<BasisIndex>(detail::argmax(probs));
  result.cumulative_control = Permutation::unchecked(std::move(cumulative));
  result.final_state = DiagonalState(params.num_qubits, std::move(probs));
  result.final_time = time;
  result.steps = step;
  return result;
}

TrajectoryResult simulate_trajectory(const SimulationParams& params, const ControlPolicy& policy,
                                     std::span<const double> epsilons, std::uint64_t master_seed,
                                     std::uint64_t index, const TrajectoryOptions& options) {
  auto noise = make_stream(master_seed, index, StreamLane::measurement_noise);
  auto control = make_stream(master_seed, index, StreamLane::control);
  return simulate_trajectory(params, policy, epsilons, noise, control, options);
}

}  // namespace regreadout
