#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "regreadout/measurement.hpp"
#include "regreadout/random.hpp"
#include "regreadout/register.hpp"

namespace regreadout {

/// Analytic band for an asymptotic speed-up.
struct SpeedupBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Mean rate of change of ln(infidelity), units 1/time.
struct RateEstimate {
  double value = 0.0;
};

struct SampledRate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Long-time ln(infidelity) without control: -16 gamma t + ln n.
double nofb_log_infidelity(double t, int num_qubits, double gamma);

/// Mean time to reach infidelity epsilon without control, ln(1/eps)/(16 gamma).
/// Throws std::invalid_argument unless 0 < epsilon < 1.
double mean_time_nofb(double epsilon, double gamma);

/// sum_r (<Z^r> - z^r_m)^2, where m is the index of the largest population.
/// With the maximum at index 0 this is sum_r <Z^r - I>^2.
double z_square_sum(const DiagonalState& state);

/// -4 gamma sum_r <Z^r>^2 (1 - Delta)^2 / Delta^2 with Z shifted so that it
/// vanishes on the most likely basis state. Throws std::invalid_argument
/// for a collapsed state (Delta == 0).
RateEstimate log_infidelity_rate(const DiagonalState& state, double gamma);

/// (lower, upper) on sum_r <Z^r>^2 for an H-ordered state of infidelity
/// delta: (n 4^n / (2^n - 1)^2 delta^2, 4 n delta^2).
std::pair<double, double> zsum_bounds(double delta, int num_qubits);

SpeedupBounds speedup_bounds_lo(int num_qubits);
SpeedupBounds speedup_bounds_rp(int num_qubits);

/// diag(1 - delta, delta, 0, ..., 0): the most permutation-sensitive state.
DiagonalState two_level_state(int num_qubits, double delta);

/// diag(1 - delta, d, ..., d) with d = delta / (2^n - 1): invariant under
/// permutations that fix index 0.
DiagonalState flat_state(int num_qubits, double delta);

/// Exact integer sums over the whole symmetric group of the shifted Z
/// diagonals (entries in {0, -2}).
struct GroupSum {
  int qubit = 1;
  std::size_t i = 0;
  std::size_t j = 0;  // equal to i for the square sums
  std::int64_t value = 0;
  std::int64_t expected = 0;
  bool pass() const { return value == expected; }
};

struct IdentityReport {
  std::size_t dimension = 0;
  std::int64_t group_order = 0;
  std::vector<GroupSum> square_sums;  // expected 2 D!
  std::vector<GroupSum> cross_sums;   // expected (1 - 1/(D-1)) D!, i != j
  bool all_pass() const;
};

inline constexpr std::size_t kMaxEnumerationDimension = 8;

/// Full enumeration; `dim` must be a power of two in [2, 8].
IdentityReport permutation_sum_identities(std::size_t dim);

/// Rate averaged exactly over the symmetric group by enumeration. Requires
/// n <= 3.
RateEstimate permutation_averaged_rate(const DiagonalState& state, double gamma);

/// Same average estimated from `samples` uniform permutations.
SampledRate sampled_permutation_rate(const DiagonalState& state, double gamma,
                                     std::size_t samples, Rng& rng);

/// Closed-form small-Delta envelope of the permutation-averaged rate.
struct RateEnvelope {
  double two_level = 0.0;  // most negative: -16 gamma n 2^(n-1) / (2^n - 1)
  double flat = 0.0;       // least negative: -16 gamma (n/4) 4^n / (2^n - 1)^2
};

RateEnvelope permutation_rate_envelope(int num_qubits, double gamma);

/// Normalized linear-trajectory state from the maximally mixed start:
/// p_q proportional to exp(2 sqrt(2 gamma) R^q) with R^q the signed record
/// combination.
DiagonalState linear_trajectory_state(const RecordAccumulator& records, double gamma);

/// ln of the linear-trajectory norm, -4 gamma n t - n ln 2 + ln sum_q exp(2 sqrt(2 gamma) R^q).
double log_linear_normalization(const RecordAccumulator& records, double gamma);

/// Largest population keeping only the n nearest neighbours of |0...0>:
/// 1 / (1 + sum_r exp(-4 sqrt(2 gamma) R^r)).
double truncated_max_eigenvalue(std::span<const double> records, double gamma);

/// Mean Hamming distance between two independent uniform n-bit strings.
double mean_random_hamming_distance(int num_qubits);

}  // namespace regreadout
