#include "regreadout/control.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace regreadout {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::none: return "none";
    case PolicyKind::h_ordering: return "h_ordering";
    case PolicyKind::random_permutation: return "random_permutation";
    case PolicyKind::fixed_cycle: return "fixed_cycle";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (auto kind : {PolicyKind::none, PolicyKind::h_ordering, PolicyKind::random_permutation,
                    PolicyKind::fixed_cycle}) {
    if (name == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) +
                              "' (expected none, h_ordering, random_permutation or fixed_cycle)");
}

void ControlPolicy::validate(std::size_t dim) const {
  if (kind != PolicyKind::fixed_cycle) return;
  if (cycle.empty()) throw std::invalid_argument("fixed_cycle policy needs at least one permutation");
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    if (cycle[k].size() != dim) {
      throw std::invalid_argument("cycle entry " + std::to_string(k) + " acts on " +
                                  std::to_string(cycle[k].size()) + " states, register has " +
                                  std::to_string(dim));
    }
  }
}

std::vector<BasisIndex> h_order_targets(int num_qubits) {
  const auto dim = register_dimension(num_qubits);
  const auto all_ones = static_cast<BasisIndex>(dim - 1);
  std::vector<BasisIndex> targets{0};
  for (int distance = 0; distance < num_qubits; ++distance) {
    for (BasisIndex v = 1; v < dim; ++v) {
      if (hamming_distance(v, all_ones) == distance) targets.push_back(v);
    }
  }
  return targets;
}

namespace detail {

HOrderer::HOrderer(int num_qubits)
    : targets_(h_order_targets(num_qubits)), order_(targets_.size()) {}

void HOrderer::operator()(std::span<const double> probs, std::span<BasisIndex> image) {
  std::iota(order_.begin(), order_.end(), BasisIndex{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](BasisIndex a, BasisIndex b) { return probs[a] > probs[b]; });
  for (std::size_t k = 0; k < order_.size(); ++k) image[order_[k]] = targets_[k];
}

}  // namespace detail

Permutation h_order(const DiagonalState& state) {
  std::vector<BasisIndex> image(state.dimension());
  detail::HOrderer(state.num_qubits())(state.probs(), image);
  return Permutation::unchecked(std::move(image));
}

Permutation policy_step(const ControlPolicy& policy, const DiagonalState& state,
                        std::uint64_t step_index, Rng& rng) {
  switch (policy.kind) {
    case PolicyKind::none: return Permutation::identity(state.dimension());
    case PolicyKind::h_ordering: return h_order(state);
    case PolicyKind::random_permutation: return sample_uniform_permutation(rng, state.dimension());
    case PolicyKind::fixed_cycle:
      policy.validate(state.dimension());
      return policy.cycle[step_index % policy.cycle.size()];
  }
  throw std::logic_error("unhandled policy kind");
}

BasisIndex retrodict(BasisIndex final_index, const ControlLog& log) {
  if (final_index >= log.cumulative.size()) {
    throw std::invalid_argument("final index outside the control log's dimension");
  }
  return invert(log.cumulative)(final_index);
}

std::vector<Permutation> parse_cycle(std::string_view text, std::string_view source) {
  std::vector<Permutation> cycle;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<BasisIndex> image;
    std::string token;
    while (fields >> token) {
      BasisIndex value{};
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc{} || ptr != token.data() + token.size()) {
        fail("'" + token + "' is not a nonnegative integer");
      }
      image.push_back(value);
    }
    if (image.empty()) continue;
    if (image.size() < 2 || !std::has_single_bit(image.size())) {
      fail("permutation has " + std::to_string(image.size()) + " entries, expected 2^n");
    }
    if (!cycle.empty() && image.size() != cycle.front().size()) {
      fail("permutation has " + std::to_string(image.size()) + " entries, earlier lines have " +
           std::to_string(cycle.front().size()));
    }
    try {
      cycle.emplace_back(std::move(image));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (cycle.empty()) {
    line_no = 0;
    fail("no permutations found");
  }
  return cycle;
}

std::vector<Permutation> load_cycle_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open cycle file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_cycle(buffer.str(), path.string());
}

}  // namespace regreadout
