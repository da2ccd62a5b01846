#include "regreadout/register.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace regreadout {

std::size_t register_dimension(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw std::invalid_argument("qubit count must be in [1, " + std::to_string(kMaxQubits) +
                                "], got " + std::to_string(num_qubits));
  }
  return std::size_t{1} << num_qubits;
}

int qubits_for_dimension(std::size_t dim) {
  if (dim < 2 || !std::has_single_bit(dim)) {
    throw std::invalid_argument("dimension " + std::to_string(dim) + " is not 2^n with n >= 1");
  }
  const int n = std::countr_zero(dim);
  register_dimension(n);
  return n;
}

int hamming_distance(BasisIndex a, BasisIndex b) { return std::popcount(a ^ b); }

double z_eigenvalue(const ZObservable& obs, BasisIndex i) {
  if (obs.qubit < 1 || obs.qubit > obs.num_qubits) {
    throw std::invalid_argument("qubit " + std::to_string(obs.qubit) + " out of range for " +
                                std::to_string(obs.num_qubits) + " qubits");
  }
  const double z = qubit_bit(obs.num_qubits, obs.qubit, i) ? -1.0 : 1.0;
  return obs.shifted ? z - 1.0 : z;
}

// ---------------------------------------------------------------------------
// Permutation

Permutation::Permutation(std::vector<BasisIndex> image) : image_(std::move(image)) {
  std::vector<bool> seen(image_.size(), false);
  for (std::size_t i = 0; i < image_.size(); ++i) {
    const auto j = image_[i];
    if (j >= image_.size()) {
      throw std::invalid_argument("permutation entry " + std::to_string(j) +
                                  " out of range at position " + std::to_string(i));
    }
    if (seen[j]) {
      throw std::invalid_argument("permutation maps two indices to " + std::to_string(j));
    }
    seen[j] = true;
  }
}

Permutation Permutation::identity(std::size_t dim) {
  std::vector<BasisIndex> image(dim);
  std::iota(image.begin(), image.end(), BasisIndex{0});
  return Permutation(std::move(image), NoCheck{});
}

Permutation Permutation::unchecked(std::vector<BasisIndex> image) {
  return Permutation(std::move(image), NoCheck{});
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < image_.size(); ++i) {
    if (image_[i] != i) return false;
  }
  return true;
}

Permutation compose(const Permutation& p, const Permutation& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("cannot compose permutations of sizes " + std::to_string(p.size()) +
                                " and " + std::to_string(q.size()));
  }
  std::vector<BasisIndex> image(p.size());
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = p(q(static_cast<BasisIndex>(i)));
  return Permutation::unchecked(std::move(image));
}

Permutation invert(const Permutation& p) {
  std::vector<BasisIndex> image(p.size());
  for (std::size_t i = 0; i < image.size(); ++i) image[p(static_cast<BasisIndex>(i))] = static_cast<BasisIndex>(i);
  return Permutation::unchecked(std::move(image));
}

Permutation sample_uniform_permutation(Rng& rng, std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("permutation dimension must be >= 1");
  std::vector<BasisIndex> image(dim);
  detail::sample_permutation_into(rng, image);
  return Permutation::unchecked(std::move(image));
}

Permutation cycle_3124() { return Permutation::unchecked({2, 0, 1, 3}); }

// ---------------------------------------------------------------------------
// DiagonalState

DiagonalState::DiagonalState(int num_qubits, std::vector<double> probs)
    : num_qubits_(num_qubits), probs_(std::move(probs)) {
  const auto dim = register_dimension(num_qubits);
  if (probs_.size() != dim) {
    throw std::invalid_argument("state has " + std::to_string(probs_.size()) +
                                " entries, expected " + std::to_string(dim));
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw std::invalid_argument("state entries must be finite and nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw std::invalid_argument("state is not normalized (sum - 1 = " +
                                std::to_string(total - 1.0) + ")");
  }
}

DiagonalState DiagonalState::maximally_mixed(int num_qubits) {
  const auto dim = register_dimension(num_qubits);
  return DiagonalState(num_qubits, std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
}

DiagonalState DiagonalState::basis_state(int num_qubits, BasisIndex k) {
  const auto dim = register_dimension(num_qubits);
  if (k >= dim) throw std::invalid_argument("basis index out of range");
  std::vector<double> probs(dim, 0.0);
  probs[k] = 1.0;
  return DiagonalState(num_qubits, std::move(probs));
}

BasisIndex DiagonalState::argmax() const {
  return static_cast<BasisIndex>(detail::argmax(probs_));
}

double DiagonalState::infidelity() const { return detail::sum_except(probs_, argmax()); }

double expectation_z(const DiagonalState& state, const ZObservable& obs) {
  if (obs.num_qubits != state.num_qubits()) {
    throw std::invalid_argument("observable and state disagree on the qubit count");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    acc += z_eigenvalue(obs, static_cast<BasisIndex>(i)) * state[i];
  }
  return acc;
}

DiagonalState apply_permutation(const DiagonalState& state, const Permutation& p) {
  if (p.size() != state.dimension()) {
    throw std::invalid_argument("permutation size " + std::to_string(p.size()) +
                                " does not match state dimension " +
                                std::to_string(state.dimension()));
  }
  std::vector<double> out(state.dimension());
  detail::permute_into(state.probs(), p.image(), out);
  return DiagonalState(state.num_qubits(), std::move(out));
}

namespace detail {

std::size_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

double sum_except(std::span<const double> probs, std::size_t skip) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i != skip) acc += probs[i];
  }
  return acc;
}

void permute_into(std::span<const double> in, std::span<const BasisIndex> image,
                  std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[image[i]] = in[i];
}

void sample_permutation_into(Rng& rng, std::span<BasisIndex> image) {
  std::iota(image.begin(), image.end(), BasisIndex{0});
  // Fisher-Yates: position k takes a uniform pick from the unshuffled prefix.
  for (std::size_t k = image.size(); k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(image[k - 1], image[pick(rng)]);
  }
}

}  // namespace detail

}  // namespace regreadout
