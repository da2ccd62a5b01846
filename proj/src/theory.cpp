#include "regreadout/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace regreadout {

namespace {

constexpr double kSixteen = 16.0;

double coupling(double gamma) { return 2.0 * std::sqrt(2.0 * gamma); }

void require_gamma(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
}

// 2^n for closed-form expressions, which are not bound by the state size.
double analytic_dimension(int n) {
  if (n < 1 || n > 1000) throw std::invalid_argument("qubit count must be in [1, 1000]");
  return std::ldexp(1.0, n);
}

// (2^n)^2 / (2^n - 1)^2
double flat_ratio(int n) {
  const double d = analytic_dimension(n);
  return d * d / ((d - 1.0) * (d - 1.0));
}

std::int64_t factorial(std::size_t k) {
  std::int64_t f = 1;
  for (std::size_t i = 2; i <= k; ++i) f *= static_cast<std::int64_t>(i);
  return f;
}

// sum_r (sum_i p_i z^r(image[i]) - z^r(image[m]))^2 for the permuted state.
double permuted_z_square_sum(int n, std::span<const double> probs, std::size_t max_index,
                             std::span<const BasisIndex> image) {
  double total = 0.0;
  for (int r = 1; r <= n; ++r) {
    const int ref = qubit_bit(n, r, image[max_index]);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      // (z_i - z_ref) is 0 when the bits agree and -/+2 otherwise.
      const int bit = qubit_bit(n, r, image[i]);
      if (bit != ref) acc += bit ? -2.0 * probs[i] : 2.0 * probs[i];
    }
    total += acc * acc;
  }
  return total;
}

double rate_prefactor(double infidelity, double gamma) {
  if (!(infidelity > 0.0)) {
    throw std::invalid_argument("log-infidelity rate is singular for a collapsed state");
  }
  const double purity = 1.0 - infidelity;
  return -4.0 * gamma * purity * purity / (infidelity * infidelity);
}

}  // namespace

double nofb_log_infidelity(double t, int num_qubits, double gamma) {
  register_dimension(num_qubits);
  return -kSixteen * gamma * t + std::log(static_cast<double>(num_qubits));
}

double mean_time_nofb(double epsilon, double gamma) {
  require_gamma(gamma);
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("target infidelity must lie in (0, 1)");
  }
  return std::log(1.0 / epsilon) / (kSixteen * gamma);
}

double z_square_sum(const DiagonalState& state) {
  const int n = state.num_qubits();
  const auto identity = Permutation::identity(state.dimension());
  return permuted_z_square_sum(n, state.probs(), state.argmax(), identity.image());
}

RateEstimate log_infidelity_rate(const DiagonalState& state, double gamma) {
  require_gamma(gamma);
  const double prefactor = rate_prefactor(state.infidelity(), gamma);
  return {prefactor * z_square_sum(state)};
}

std::pair<double, double> zsum_bounds(double delta, int num_qubits) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const double n = static_cast<double>(num_qubits);
  return {n * flat_ratio(num_qubits) * delta * delta, 4.0 * n * delta * delta};
}

SpeedupBounds speedup_bounds_lo(int num_qubits) {
  const double n = static_cast<double>(num_qubits);
  return {flat_ratio(num_qubits) * n / 4.0, n};
}

SpeedupBounds speedup_bounds_rp(int num_qubits) {
  const double n = static_cast<double>(num_qubits);
  const double d = analytic_dimension(num_qubits);
  return {flat_ratio(num_qubits) * n / 4.0, (d / 2.0) / (d - 1.0) * n};
}

DiagonalState two_level_state(int num_qubits, double delta) {
  if (!(delta >= 0.0 && delta <= 0.5)) throw std::invalid_argument("delta must lie in [0, 1/2]");
  std::vector<double> probs(register_dimension(num_qubits), 0.0);
  probs[0] = 1.0 - delta;
  probs[1] = delta;
  return DiagonalState(num_qubits, std::move(probs));
}

DiagonalState flat_state(int num_qubits, double delta) {
  const auto dim = register_dimension(num_qubits);
  const double rest = delta / static_cast<double>(dim - 1);
  if (!(delta >= 0.0 && 1.0 - delta >= rest)) {
    throw std::invalid_argument("delta too large for a flat state");
  }
  std::vector<double> probs(dim, rest);
  probs[0] = 1.0 - delta;
  return DiagonalState(num_qubits, std::move(probs));
}

bool IdentityReport::all_pass() const {
  auto ok = [](const GroupSum& s) { return s.pass(); };
  return std::all_of(square_sums.begin(), square_sums.end(), ok) &&
         std::all_of(cross_sums.begin(), cross_sums.end(), ok);
}

IdentityReport permutation_sum_identities(std::size_t dim) {
  if (dim > kMaxEnumerationDimension) {
    throw std::invalid_argument("enumeration cap exceeded: D = " + std::to_string(dim) +
                                " > " + std::to_string(kMaxEnumerationDimension));
  }
  const int n = qubits_for_dimension(dim);
  IdentityReport report;
  report.dimension = dim;
  report.group_order = factorial(dim);
  const std::int64_t d = static_cast<std::int64_t>(dim);
  // (1 - 1/(D-1)) D! = D (D-2) (D-2)!
  const std::int64_t cross_expected = d * (d - 2) * factorial(dim - 2);

  // Accumulate every (r, i, j) sum in one pass over the group.
  std::vector<std::int64_t> sums(static_cast<std::size_t>(n) * dim * dim, 0);
  std::vector<BasisIndex> image(dim);
  std::iota(image.begin(), image.end(), BasisIndex{0});
  std::vector<std::int64_t> diag(dim);
  do {
    for (int r = 1; r <= n; ++r) {
      for (std::size_t i = 0; i < dim; ++i) diag[i] = qubit_bit(n, r, image[i]) ? -2 : 0;
      auto* block = &sums[(r - 1) * dim * dim];
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) block[i * dim + j] += diag[i] * diag[j];
      }
    }
  } while (std::next_permutation(image.begin(), image.end()));

  for (int r = 1; r <= n; ++r) {
    const auto* block = &sums[(r - 1) * dim * dim];
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        GroupSum s{r, i, j, block[i * dim + j], 0};
        if (i == j) {
          s.expected = 2 * report.group_order;
          report.square_sums.push_back(s);
        } else {
          s.expected = cross_expected;
          report.cross_sums.push_back(s);
        }
      }
    }
  }
  return report;
}

RateEstimate permutation_averaged_rate(const DiagonalState& state, double gamma) {
  require_gamma(gamma);
  const int n = state.num_qubits();
  if (state.dimension() > kMaxEnumerationDimension) {
    throw std::invalid_argument("exact enumeration is limited to n <= 3");
  }
  const double prefactor = rate_prefactor(state.infidelity(), gamma);
  const std::size_t max_index = state.argmax();
  std::vector<BasisIndex> image(state.dimension());
  std::iota(image.begin(), image.end(), BasisIndex{0});
  double total = 0.0;
  std::int64_t count = 0;
  do {
    total += permuted_z_square_sum(n, state.probs(), max_index, image);
    ++count;
  } while (std::next_permutation(image.begin(), image.end()));
  return {prefactor * total / static_cast<double>(count)};
}

SampledRate sampled_permutation_rate(const DiagonalState& state, double gamma,
                                     std::size_t samples, Rng& rng) {
  require_gamma(gamma);
  if (samples < 2) throw std::invalid_argument("need at least two sampled permutations");
  const int n = state.num_qubits();
  const double prefactor = rate_prefactor(state.infidelity(), gamma);
  const std::size_t max_index = state.argmax();
  std::vector<BasisIndex> image(state.dimension());
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    detail::sample_permutation_into(rng, image);
    const double v = prefactor * permuted_z_square_sum(n, state.probs(), max_index, image);
    sum += v;
    sum_sq += v * v;
  }
  const double m = static_cast<double>(samples);
  const double mean = sum / m;
  const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
  return {mean, std::sqrt(var / m), samples};
}

RateEnvelope permutation_rate_envelope(int num_qubits, double gamma) {
  require_gamma(gamma);
  const double n = static_cast<double>(num_qubits);
  const double d = static_cast<double>(register_dimension(num_qubits));
  return {-kSixteen * gamma * n * (d / 2.0) / (d - 1.0),
          -kSixteen * gamma * (n / 4.0) * flat_ratio(num_qubits)};
}

DiagonalState linear_trajectory_state(const RecordAccumulator& records, double gamma) {
  require_gamma(gamma);
  const int n = records.num_qubits();
  const auto dim = register_dimension(n);
  const double a = coupling(gamma);
  std::vector<double> probs(dim);
  for (std::size_t q = 0; q < dim; ++q) probs[q] = a * records.signed_combination(static_cast<BasisIndex>(q));
  const double shift = *std::max_element(probs.begin(), probs.end());
  double total = 0.0;
  for (double& p : probs) {
    p = std::exp(p - shift);
    total += p;
  }
  for (double& p : probs) p /= total;
  return DiagonalState(n, std::move(probs));
}

double log_linear_normalization(const RecordAccumulator& records, double gamma) {
  require_gamma(gamma);
  const int n = records.num_qubits();
  const auto dim = register_dimension(n);
  const double a = coupling(gamma);
  std::vector<double> exponents(dim);
  for (std::size_t q = 0; q < dim; ++q) exponents[q] = a * records.signed_combination(static_cast<BasisIndex>(q));
  const double shift = *std::max_element(exponents.begin(), exponents.end());
  double total = 0.0;
  for (double e : exponents) total += std::exp(e - shift);
  return -4.0 * gamma * n * records.elapsed() - n * std::log(2.0) + shift + std::log(total);
}

double truncated_max_eigenvalue(std::span<const double> records, double gamma) {
  require_gamma(gamma);
  double tail = 0.0;
  for (double r : records) tail += std::exp(-2.0 * coupling(gamma) * r);
  return 1.0 / (1.0 + tail);
}

double mean_random_hamming_distance(int num_qubits) {
  register_dimension(num_qubits);
  return 0.5 * num_qubits;
}

}  // namespace regreadout
