#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "regreadout/random.hpp"

namespace regreadout {

inline constexpr int kMaxQubits = 12;

/// Logical basis label |q_1 q_2 ... q_n>. Qubit r lives at bit (n - r), so
/// qubit 1 is the most significant bit.
using BasisIndex = std::uint32_t;

/// 2^n; throws std::invalid_argument unless 1 <= n <= kMaxQubits.
std::size_t register_dimension(int num_qubits);

/// Inverse of register_dimension; throws unless dim is 2^n with n in range.
int qubits_for_dimension(std::size_t dim);

inline int qubit_bit(int num_qubits, int qubit, BasisIndex i) {
  return static_cast<int>((i >> (num_qubits - qubit)) & 1u);
}

int hamming_distance(BasisIndex a, BasisIndex b);

/// Z on one qubit of an n-qubit register. The shifted form is Z - I, with
/// eigenvalues {0, -2}.
struct ZObservable {
  int num_qubits = 1;
  int qubit = 1;  // 1-based
  bool shifted = false;
};

/// Throws std::invalid_argument if the qubit index is out of range.
double z_eigenvalue(const ZObservable& obs, BasisIndex i);

/// Bijection on basis indices stored as an image array: basis state i is
/// carried to image[i].
class Permutation {
 public:
  Permutation() = default;

  /// Validates that `image` is a bijection on [0, image.size()).
  explicit Permutation(std::vector<BasisIndex> image);

  static Permutation identity(std::size_t dim);

  /// Skips validation; for callers that construct bijections by design.
  static Permutation unchecked(std::vector<BasisIndex> image);

  std::size_t size() const { return image_.size(); }
  BasisIndex operator()(BasisIndex i) const { return image_[i]; }
  std::span<const BasisIndex> image() const { return image_; }
  bool is_identity() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  struct NoCheck {};
  Permutation(std::vector<BasisIndex> image, NoCheck) : image_(std::move(image)) {}

  std::vector<BasisIndex> image_;
};

/// (p o q)(i) = p(q(i)): q acts first.
Permutation compose(const Permutation& p, const Permutation& q);
Permutation invert(const Permutation& p);

/// Uniform draw from the symmetric group on `dim` elements.
Permutation sample_uniform_permutation(Rng& rng, std::size_t dim);

/// The two-qubit cycle diag(l0,l1,l2,l3) -> diag(l1,l2,l0,l3): a 3-cycle on
/// indices {0,1,2} that fixes |11>.
Permutation cycle_3124();

/// Conditional register state, diagonal in the logical basis.
class DiagonalState {
 public:
  static constexpr double kNormTolerance = 1e-10;

  /// Throws std::invalid_argument on wrong length, negative or non-finite
  /// entries, or a sum further than kNormTolerance from 1.
  DiagonalState(int num_qubits, std::vector<double> probs);

  static DiagonalState maximally_mixed(int num_qubits);
  static DiagonalState basis_state(int num_qubits, BasisIndex k);

  int num_qubits() const { return num_qubits_; }
  std::size_t dimension() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  /// Index of the largest entry; ties go to the lowest index.
  BasisIndex argmax() const;

  /// 1 - max_i p_i, evaluated as the sum of the non-maximal entries so that
  /// tiny infidelities keep full relative precision.
  double infidelity() const;

 private:
  int num_qubits_;
  std::vector<double> probs_;
};

double expectation_z(const DiagonalState& state, const ZObservable& obs);

/// out[p(i)] = in[i]. Throws std::invalid_argument on size mismatch.
DiagonalState apply_permutation(const DiagonalState& state, const Permutation& p);

namespace detail {

/// Index of the maximal entry, lowest index on ties.
std::size_t argmax(std::span<const double> probs);

/// Sum of all entries other than `skip`.
double sum_except(std::span<const double> probs, std::size_t skip);

/// Allocation-free forms used by the trajectory loop.
void permute_into(std::span<const double> in, std::span<const BasisIndex> image,
                  std::span<double> out);
void sample_permutation_into(Rng& rng, std::span<BasisIndex> image);

}  // namespace detail

}  // namespace regreadout
