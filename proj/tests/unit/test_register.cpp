#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "regreadout/register.hpp"
#include "regreadout/stats.hpp"

using namespace regreadout;

TEST_CASE("hamming distance") {
  CHECK(hamming_distance(0b00, 0b00) == 0);
  CHECK(hamming_distance(0b00, 0b11) == 2);
  CHECK(hamming_distance(0b101, 0b001) == 1);

  SUBCASE("metric axioms, exhaustive for n = 4") {
    for (BasisIndex a = 0; a < 16; ++a) {
      for (BasisIndex b = 0; b < 16; ++b) {
        CHECK(hamming_distance(a, b) == hamming_distance(b, a));
        CHECK((hamming_distance(a, b) == 0) == (a == b));
        for (BasisIndex c = 0; c < 16; ++c) {
          CHECK(hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c));
        }
      }
    }
  }
}

TEST_CASE("z eigenvalues follow the bit convention") {
  CHECK(z_eigenvalue({2, 1, false}, 0b00) == 1.0);
  CHECK(z_eigenvalue({2, 2, false}, 0b01) == -1.0);
  CHECK(z_eigenvalue({2, 2, true}, 0b01) == -2.0);
  // qubit 1 is the most significant bit
  CHECK(z_eigenvalue({3, 1, false}, 0b100) == -1.0);
  CHECK(z_eigenvalue({3, 3, false}, 0b100) == 1.0);
  CHECK_THROWS_AS(z_eigenvalue({2, 0, false}, 0), std::invalid_argument);
  CHECK_THROWS_AS(z_eigenvalue({2, 3, false}, 0), std::invalid_argument);

  for (int n = 1; n <= 4; ++n) {
    for (BasisIndex i = 0; i < register_dimension(n); ++i) {
      double s = 0.0;
      for (int r = 1; r <= n; ++r) s += std::pow(z_eigenvalue({n, r, false}, i), 2);
      CHECK(s == doctest::Approx(n));
    }
  }
}

TEST_CASE("expectation of Z") {
  const auto mixed = DiagonalState::maximally_mixed(3);
  for (int r = 1; r <= 3; ++r) CHECK(expectation_z(mixed, {3, r, false}) == doctest::Approx(0.0));

  const double delta = 0.01;
  const DiagonalState rho2(2, {1 - delta, 0, 0, delta});
  double zsum = 0.0;
  for (int r = 1; r <= 2; ++r) {
    const double z = expectation_z(rho2, {2, r, true});
    CHECK(z == doctest::Approx(-2 * delta));
    zsum += z * z;
  }
  CHECK(zsum == doctest::Approx(4 * 2 * delta * delta));

  // flat state, n = 2, Delta = 0.03: direct summation over the four entries
  const DiagonalState flat(2, {0.97, 0.01, 0.01, 0.01});
  double flat_sum = 0.0;
  for (int r = 1; r <= 2; ++r) {
    double direct = 0.0;
    for (BasisIndex i = 0; i < 4; ++i) direct += flat[i] * (((i >> (2 - r)) & 1) ? -2.0 : 0.0);
    const double z = expectation_z(flat, {2, r, true});
    CHECK(z == doctest::Approx(direct).epsilon(1e-14));
    CHECK(z == doctest::Approx(-0.04));
    flat_sum += z * z;
  }
  CHECK(flat_sum == doctest::Approx(0.0032));
}

TEST_CASE("diagonal state validation") {
  CHECK_THROWS_AS(DiagonalState(2, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(DiagonalState(1, {1.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(DiagonalState(1, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(DiagonalState(1, {NAN, 1.0}), std::invalid_argument);
  CHECK_NOTHROW(DiagonalState(1, {0.5 + 5e-11, 0.5}));

  const DiagonalState s(2, {0.1, 0.4, 0.4, 0.1});
  CHECK(s.argmax() == 1);
  CHECK(s.infidelity() == doctest::Approx(0.6));

  // infidelity keeps relative precision far below machine epsilon
  const DiagonalState sharp(1, {1.0, 1e-30});
  CHECK(sharp.infidelity() == doctest::Approx(1e-30));
}

TEST_CASE("permutations") {
  const auto p = cycle_3124();
  CHECK(std::vector<BasisIndex>(p.image().begin(), p.image().end()) == std::vector<BasisIndex>{2, 0, 1, 3});
  CHECK_THROWS_AS(Permutation({0, 0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Permutation({0, 4, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(compose(p, Permutation::identity(2)), std::invalid_argument);

  CHECK(compose(p, Permutation::identity(4)) == p);
  CHECK(compose(invert(p), p).is_identity());
  CHECK(compose(p, invert(p)).is_identity());
  // a 3-cycle on {0,1,2}
  CHECK(!compose(p, p).is_identity());
  CHECK(compose(compose(p, p), p).is_identity());
  const auto ip = invert(p);
  CHECK(compose(compose(ip, ip), ip).is_identity());

  // (p o q)(i) = p(q(i)) against a hand composition
  const Permutation q({1, 0, 3, 2});
  const auto pq = compose(p, q);
  for (BasisIndex i = 0; i < 4; ++i) CHECK(pq(i) == p(q(i)));
}

TEST_CASE("applying permutations") {
  const DiagonalState s(2, {0.4, 0.3, 0.2, 0.1});
  CHECK(apply_permutation(s, Permutation::identity(4)).probs()[2] == 0.2);

  const auto cycled = apply_permutation(s, cycle_3124());
  const std::vector<double> expected{0.3, 0.2, 0.4, 0.1};  // (l1, l2, l0, l3)
  for (int i = 0; i < 4; ++i) CHECK(cycled[i] == expected[i]);

  const auto twice = apply_permutation(cycled, cycle_3124());
  const std::vector<double> expected2{0.2, 0.4, 0.3, 0.1};  // (l2, l0, l1, l3)
  for (int i = 0; i < 4; ++i) CHECK(twice[i] == expected2[i]);
  const auto back = apply_permutation(twice, cycle_3124());
  for (int i = 0; i < 4; ++i) CHECK(back[i] == s[i]);

  const auto swapped = apply_permutation(DiagonalState(2, {0.7, 0.1, 0.1, 0.1}), Permutation({3, 1, 2, 0}));
  CHECK(swapped[3] == 0.7);
  CHECK(swapped[0] == 0.1);

  Rng rng(5);
  const DiagonalState r(3, {0.3, 0.05, 0.1, 0.15, 0.02, 0.08, 0.2, 0.1});
  for (int k = 0; k < 20; ++k) {
    const auto out = apply_permutation(r, sample_uniform_permutation(rng, 8));
    std::vector<double> a(r.probs().begin(), r.probs().end()), b(out.probs().begin(), out.probs().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  CHECK_THROWS_AS(apply_permutation(s, Permutation::identity(8)), std::invalid_argument);
}

TEST_CASE("uniform permutation sampling") {
  Rng rng(2024);
  CHECK(sample_uniform_permutation(rng, 1).is_identity());

  SUBCASE("D = 2") {
    const int draws = 100000;
    int identity = 0;
    for (int k = 0; k < draws; ++k) identity += sample_uniform_permutation(rng, 2).is_identity();
    CHECK(std::abs(identity / double(draws) - 0.5) < 0.005);
  }

  SUBCASE("D = 4 chi-square over the whole group") {
    std::map<std::vector<BasisIndex>, std::size_t> index;
    std::vector<BasisIndex> perm{0, 1, 2, 3};
    do {
      index.emplace(perm, index.size());
    } while (std::next_permutation(perm.begin(), perm.end()));
    REQUIRE(index.size() == 24);
    std::vector<std::size_t> counts(24, 0);
    for (int k = 0; k < 240000; ++k) {
      const auto p = sample_uniform_permutation(rng, 4);
      ++counts[index.at({p.image().begin(), p.image().end()})];
    }
    const double stat = uniform_chi_square(counts);
    CHECK(chi_square_upper_tail(stat, 23) > 1e-3);
    for (auto c : counts) CHECK(std::abs(c - 10000.0) < 4 * std::sqrt(10000.0 * 23 / 24));
  }
}
