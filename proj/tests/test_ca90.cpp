#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>
#include <string>

#include "hdfuse/ca90.hpp"
#include "oracles.hpp"

using namespace hdfuse;

namespace {

Hypervector rand_hv(int dim, std::uint64_t seed) {
  WordRng rng(seed);
  return Hypervector::random(dim, rng);
}

}  // namespace

TEST_CASE("all-zeros is a rule-90 fixed point") {
  const Hypervector zeros(64);
  REQUIRE(rule90_step(zeros) == zeros);
}

TEST_CASE("single-cell seed spreads to its two neighbours") {
  Hypervector v(8);
  v.set_bit(3, true);
  const auto next = rule90_step(v);
  for (int i = 0; i < 8; ++i) REQUIRE(next.bit(i) == (i == 2 || i == 4));
}

TEST_CASE("rule90_step matches the ring-CA oracle on all 256 states at D=8") {
  for (int x = 0; x < 256; ++x) {
    oracle::Bits bits(8);
    for (int i = 0; i < 8; ++i) bits[static_cast<std::size_t>(i)] = (x >> i) & 1;
    REQUIRE(oracle::to_bits(rule90_step(oracle::from_bits(bits))) == oracle::rule90_bits(bits));
  }
}

TEST_CASE("rule90_step matches the ring-CA oracle on random states") {
  std::mt19937_64 gen(17);
  for (int dim : {16, 257}) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto v = rand_hv(dim, gen());
      REQUIRE(oracle::to_bits(rule90_step(v)) == oracle::rule90_bits(oracle::to_bits(v)));
    }
  }
}

TEST_CASE("rule90_step commutes with rotation and is linear over XOR") {
  std::mt19937_64 gen(18);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = rand_hv(257, gen());
    const auto b = rand_hv(257, gen());
    const long long k = static_cast<long long>(gen() % 514) - 257;
    REQUIRE(rule90_step(permute(a, k)) == permute(rule90_step(a), k));
    REQUIRE(rule90_step(bind(a, b)) == bind(rule90_step(a), rule90_step(b)));
  }
}

TEST_CASE("streams from the same seed emit identical sequences") {
  const auto seed = rand_hv(500, 9);
  Ca90Stream s1(seed, 9), s2(seed, 9);
  for (int i = 0; i < 50; ++i) REQUIRE(s1.next() == s2.next());
  REQUIRE(s1.step_index() == 50);
}

TEST_CASE("burst equals repeated next") {
  const auto seed = rand_hv(300, 10);
  Ca90Stream a(seed, 10), b(seed, 10);

  const auto one = a.burst(1);
  REQUIRE(one.size() == 1);
  REQUIRE(one[0] == b.next());

  const auto three = a.burst(3);
  for (const auto& v : three) REQUIRE(v == b.next());
  REQUIRE_THROWS_AS(a.burst(0), UsageError);
}

TEST_CASE("burst states keep near-half one-counts at D=10000") {
  Ca90Stream s(rand_hv(10000, 11), 11);
  for (const auto& v : s.burst(7)) {
    REQUIRE(v.popcount() >= 4550);
    REQUIRE(v.popcount() <= 5450);
  }
}

TEST_CASE("early stream states stay pairwise dissimilar at D=10000") {
  Ca90Stream s(rand_hv(10000, 12), 12);
  const auto states = s.burst(500);
  // spot-check all pairs among a stride plus all adjacent pairs
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      const double d = normalized_hamming(states[i], states[j]);
      REQUIRE(d >= 0.45);
      REQUIRE(d <= 0.55);
    }
  }
}

TEST_CASE("no repeated state within the first 1000 steps") {
  Ca90Stream s(rand_hv(10000, 13), 13);
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) REQUIRE(seen.insert(s.next().to_hex()).second);
}

TEST_CASE("degenerate seeds are rejected") {
  const Hypervector zeros(64);
  REQUIRE_THROWS_AS(Ca90Stream(zeros, 1), UsageError);
  REQUIRE_THROWS_AS(Ca90Stream(complement(zeros), 1), UsageError);
}
