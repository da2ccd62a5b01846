#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "regreadout/control.hpp"
#include "regreadout/theory.hpp"

using namespace regreadout;

namespace {

std::vector<double> probs(const DiagonalState& s) { return {s.probs().begin(), s.probs().end()}; }

DiagonalState random_state(Rng& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(register_dimension(n));
  for (auto& x : p) x = e(rng);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= total;
  return DiagonalState(n, std::move(p));
}

}  // namespace

TEST_CASE("H-order targets") {
  CHECK(h_order_targets(1) == std::vector<BasisIndex>{0, 1});
  CHECK(h_order_targets(2) == std::vector<BasisIndex>{0, 3, 1, 2});
  CHECK(h_order_targets(3) == std::vector<BasisIndex>{0, 7, 3, 5, 6, 1, 2, 4});
}

TEST_CASE("H-ordering") {
  const DiagonalState s(2, {0.7, 0.15, 0.1, 0.05});
  const auto p = h_order(s);
  CHECK(probs(apply_permutation(s, p)) == std::vector<double>{0.7, 0.1, 0.05, 0.15});

  const auto ordered = apply_permutation(s, p);
  CHECK(h_order(ordered).is_identity());

  const double delta = 1e-3;
  const auto rho2 = apply_permutation(two_level_state(2, delta), h_order(two_level_state(2, delta)));
  CHECK(rho2[3] == delta);
  CHECK(z_square_sum(rho2) == doctest::Approx(4 * 2 * delta * delta));

  SUBCASE("ties break by index on both sides") {
    const DiagonalState tied(2, {0.25, 0.25, 0.25, 0.25});
    CHECK(probs(apply_permutation(tied, h_order(tied))) == probs(tied));
    const auto img = h_order(tied);
    CHECK(std::vector<BasisIndex>(img.image().begin(), img.image().end()) == std::vector<BasisIndex>{0, 3, 1, 2});
  }

  SUBCASE("n = 2: H-ordering maximizes the shifted Z sum over the whole group") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const auto st = random_state(rng, 2);
      const double h = z_square_sum(apply_permutation(st, h_order(st)));
      std::vector<BasisIndex> perm{0, 1, 2, 3};
      do {
        const auto candidate = apply_permutation(st, Permutation(perm));
        if (candidate.argmax() != 0) continue;
        CHECK(z_square_sum(candidate) <= h + 1e-15);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }

  SUBCASE("valid bijection with the maximum at index 0") {
    Rng rng(3);
    for (int n = 1; n <= 5; ++n) {
      for (int k = 0; k < 50; ++k) {
        const auto st = random_state(rng, n);
        const auto p = h_order(st);
        CHECK_NOTHROW(Permutation({p.image().begin(), p.image().end()}));
        CHECK(apply_permutation(st, p).argmax() == 0);
      }
    }
  }
}

TEST_CASE("policy steps") {
  const DiagonalState s(2, {0.4, 0.3, 0.2, 0.1});
  Rng rng(1);
  CHECK(policy_step(ControlPolicy::none(), s, 7, rng).is_identity());
  CHECK(policy_step(ControlPolicy::h_ordering(), s, 0, rng) == h_order(s));

  const auto cyc = ControlPolicy::fixed_cycle({cycle_3124()});
  auto state = s;
  for (int step = 0; step < 3; ++step) {
    const auto p = policy_step(cyc, state, step, rng);
    CHECK(p == cycle_3124());
    state = apply_permutation(state, p);
  }
  CHECK(probs(state) == probs(s));

  const auto two = ControlPolicy::fixed_cycle({cycle_3124(), Permutation({3, 2, 1, 0})});
  CHECK(policy_step(two, s, 4, rng) == cycle_3124());
  CHECK(policy_step(two, s, 5, rng) == Permutation({3, 2, 1, 0}));

  CHECK_THROWS_AS(ControlPolicy::fixed_cycle({}).validate(4), std::invalid_argument);
  CHECK_THROWS_AS(ControlPolicy::fixed_cycle({cycle_3124()}).validate(8), std::invalid_argument);
  CHECK(ControlPolicy::random_permutation().is_open_loop());
  CHECK(!ControlPolicy::h_ordering().is_open_loop());
  CHECK(parse_policy_kind("h_ordering") == PolicyKind::h_ordering);
  CHECK_THROWS_AS(parse_policy_kind("greedy"), std::invalid_argument);

  SUBCASE("open-loop streams ignore the state") {
    const DiagonalState other(2, {0.1, 0.1, 0.1, 0.7});
    Rng a(99), b(99);
    for (int k = 0; k < 50; ++k) {
      CHECK(policy_step(ControlPolicy::random_permutation(), s, k, a) ==
            policy_step(ControlPolicy::random_permutation(), other, k, b));
    }
  }
}

TEST_CASE("retrodiction") {
  ControlLog log(4);
  CHECK(retrodict(2, log) == 2);
  log.record(cycle_3124());
  log.record(Permutation({1, 0, 3, 2}));
  // prepared |k>, carried to cumulative(k); retrodiction undoes it
  for (BasisIndex k = 0; k < 4; ++k) CHECK(retrodict(log.cumulative(k), log) == k);
  CHECK(log.cumulative == compose(Permutation({1, 0, 3, 2}), cycle_3124()));
  CHECK_THROWS_AS(retrodict(4, log), std::invalid_argument);
}

TEST_CASE("cycle files") {
  const auto cycle = parse_cycle("# P3124\n2 0 1 3\n\n3 2 1 0  # reversal\n");
  REQUIRE(cycle.size() == 2);
  CHECK(cycle[0] == cycle_3124());

  auto message = [](std::string_view text) {
    try {
      parse_cycle(text, "c.txt");
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("2 0 1 3\n0 0 1 2\n").rfind("c.txt:2:", 0) == 0);
  CHECK(message("\n\n2 0 x 3\n").rfind("c.txt:3:", 0) == 0);
  CHECK(message("2 0 1\n").rfind("c.txt:1:", 0) == 0);
  CHECK(message("2 0 1 3\n1 0\n").rfind("c.txt:2:", 0) == 0);
  CHECK(message("# nothing\n").find("c.txt") != std::string::npos);
  CHECK_THROWS_AS(load_cycle_file("/nonexistent/cycle.txt"), std::invalid_argument);
}
