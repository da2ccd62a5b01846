#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "regreadout/control.hpp"
#include "regreadout/random.hpp"
#include "regreadout/register.hpp"

namespace regreadout {

/// Reference step, in units of 1/gamma.
inline constexpr double kReferenceTimeStep = 6.25e-4;

enum class Integrator {
  euler,  // Euler-Maruyama on the normalized population equation
  exact,  // multiplicative update from the linear trajectory solution
};

std::string_view to_string(Integrator integrator);
Integrator parse_integrator(std::string_view name);

struct SimulationParams {
  int num_qubits = 1;
  double gamma = 1.0;  // measurement strength, 1/time
  double dt = kReferenceTimeStep;
  double max_time = 10.0;
  Integrator integrator = Integrator::exact;
  double stop_epsilon = 1e-6;
  // A trajectory keeps running until it is at least this old, even after
  // reaching stop_epsilon; used to extend infidelity curves.
  double min_time = 0.0;
  // Spacing of the stored infidelity series. First passages always use
  // every step.
  double sample_interval = 0.01;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  /// dt * gamma above 0.01 is allowed but coarse.
  bool coarse_step() const { return dt * gamma > 0.01; }

  std::uint64_t max_steps() const;
  std::uint64_t sample_stride() const;
};

/// Per-qubit Wiener and record increments for one step.
struct StepIncrements {
  std::vector<double> dW;
  std::vector<double> dR;
};

/// Running integrals R^r of the per-qubit records.
class RecordAccumulator {
 public:
  explicit RecordAccumulator(int num_qubits);

  void add(const StepIncrements& inc, double dt);

  int num_qubits() const { return static_cast<int>(records_.size()); }
  std::span<const double> records() const { return records_; }
  double elapsed() const { return elapsed_; }

  /// Signed record combination for basis label q: qubit r enters with
  /// a plus sign when its bit in q is 0 and a minus sign otherwise.
  double signed_combination(BasisIndex q) const;

 private:
  std::vector<double> records_;
  double elapsed_ = 0.0;
};

/// Raised when a step produces an unusable state.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kEulerNegativityTolerance = 1e-6;

/// dW ~ N(0, dt) independently per qubit, dR = 2 sqrt(2 gamma) <Z> dt + dW.
StepIncrements generate_increments(const DiagonalState& state, const SimulationParams& params,
                                   Rng& rng);

/// Euler-Maruyama step of the population equation. The Wiener increment is
/// recovered from the record, so both integrators consume the same record.
/// Throws IntegrationError when an entry dips below
/// -kEulerNegativityTolerance before clamping.
DiagonalState euler_step(const DiagonalState& state, const StepIncrements& inc,
                         const SimulationParams& params);

/// p_i <- p_i exp(2 sqrt(2 gamma) sum_r z_i^r dR_r), then renormalize.
DiagonalState exact_step(const DiagonalState& state, const StepIncrements& inc,
                         const SimulationParams& params);

struct TrajectoryResult {
  std::vector<double> sample_times;
  std::vector<double> infidelity;
  std::vector<double> epsilons;
  /// First time infidelity <= epsilons[k]; nullopt when censored.
  std::vector<std::optional<double>> first_passage;
  BasisIndex final_index = 0;
  Permutation cumulative_control;
  std::optional<DiagonalState> final_state;
  double final_time = 0.0;
  std::uint64_t steps = 0;
  bool reached_stop = false;

  BasisIndex retrodicted_index() const;
};

/// What an observer sees after each completed step.
struct StepView {
  std::uint64_t step;  // 1-based count of completed steps
  double time;
  std::span<const double> probs;
  const StepIncrements& increments;
  std::span<const BasisIndex> applied_control;
};

struct TrajectoryOptions {
  std::optional<DiagonalState> initial_state;  // maximally mixed when empty
  std::function<void(const StepView&)> observer;
};

/// One conditional trajectory. Each step: apply the policy's permutation,
/// draw the record increments, integrate, then update the infidelity and
/// first passages. Stops once infidelity <= stop_epsilon (and
/// t >= min_time) or at max_time.
///
/// `epsilons` must be sorted descending with every entry >= stop_epsilon.
/// Measurement noise and control randomness come from separate streams so
/// open-loop control sequences never depend on the state.
TrajectoryResult simulate_trajectory(const SimulationParams& params, const ControlPolicy& policy,
                                     std::span<const double> epsilons, Rng& noise_rng,
                                     Rng& control_rng, const TrajectoryOptions& options = {});

/// Convenience overload deriving both streams from (seed, index).
TrajectoryResult simulate_trajectory(const SimulationParams& params, const ControlPolicy& policy,
                                     std::span<const double> epsilons, std::uint64_t master_seed,
                                     std::uint64_t index, const TrajectoryOptions& options = {});

}  // namespace regreadout
