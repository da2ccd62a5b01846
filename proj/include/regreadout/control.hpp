#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regreadout/random.hpp"
#include "regreadout/register.hpp"

namespace regreadout {

enum class PolicyKind {
  none,
  h_ordering,          // closed loop, locally optimal
  random_permutation,  // open loop, uniform over the symmetric group
  fixed_cycle,         // open loop, deterministic round-robin
};

std::string_view to_string(PolicyKind kind);

/// Parses "none", "h_ordering", "random_permutation" or "fixed_cycle".
/// Throws std::invalid_argument otherwise.
PolicyKind parse_policy_kind(std::string_view name);

struct ControlPolicy {
  PolicyKind kind = PolicyKind::none;
  std::vector<Permutation> cycle;  // fixed_cycle only

  static ControlPolicy none() { return {}; }
  static ControlPolicy h_ordering() { return {PolicyKind::h_ordering, {}}; }
  static ControlPolicy random_permutation() { return {PolicyKind::random_permutation, {}}; }
  static ControlPolicy fixed_cycle(std::vector<Permutation> cycle) {
    return {PolicyKind::fixed_cycle, std::move(cycle)};
  }

  /// Throws std::invalid_argument if a fixed cycle is empty or does not act
  /// on `dim` basis states.
  void validate(std::size_t dim) const;

  /// Only h_ordering reads the conditional state.
  bool is_open_loop() const { return kind != PolicyKind::h_ordering; }
};

/// Composition of every applied permutation, most recent outermost.
struct ControlLog {
  Permutation cumulative;

  explicit ControlLog(std::size_t dim) : cumulative(Permutation::identity(dim)) {}
  void record(const Permutation& applied) { cumulative = compose(applied, cumulative); }
};

/// Target vertices in H-order: |0...0>, |1...1>, then the vertices at
/// Hamming distance 1, 2, ... from |1...1>, ascending index within a shell.
std::vector<BasisIndex> h_order_targets(int num_qubits);

/// Locally optimal relabelling: the k-th largest eigenvalue (ties by index)
/// goes to the k-th H-order target.
Permutation h_order(const DiagonalState& state);

/// Permutation the policy applies at `step_index`. Only h_ordering reads the
/// state; random_permutation draws from `rng` and nothing else does.
Permutation policy_step(const ControlPolicy& policy, const DiagonalState& state,
                        std::uint64_t step_index, Rng& rng);

/// Outcome the unpermuted measurement would have reported.
BasisIndex retrodict(BasisIndex final_index, const ControlLog& log);

/// Reads a fixed cycle: one permutation per line as a whitespace-separated
/// image array. Blank lines and '#' comments are skipped. Errors name the
/// file and line.
std::vector<Permutation> load_cycle_file(const std::filesystem::path& path);
std::vector<Permutation> parse_cycle(std::string_view text, std::string_view source = "<cycle>");

namespace detail {

/// Reusable H-ordering with preallocated buffers.
class HOrderer {
 public:
  explicit HOrderer(int num_qubits);
  void operator()(std::span<const double> probs, std::span<BasisIndex> image);

 private:
  std::vector<BasisIndex> targets_;
  std::vector<BasisIndex> order_;
};

}  // namespace detail

}  // namespace regreadout
