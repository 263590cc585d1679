#pragma once

// Elementary cellular automaton rule 90 over the hypervector ring, used as a
// deterministic pseudo-random vector stream: the next state is the XOR of the
// cyclic left- and right-rotations of the current one, i.e. every cell becomes
// the XOR of its two neighbours.

#include <cstdint>
#include <utility>
#include <vector>

#include "hdfuse/error.hpp"
#include "hdfuse/hypervector.hpp"

namespace hdfuse {

/// One rule-90 step on a ring of dim cells. Pure; linear over XOR.
inline Hypervector rule90_step(const Hypervector& state) {
  return bind(permute(state, +1), permute(state, -1));
}

/// Sequential rule-90 stream. The most recently emitted state is the seed of
/// the next step; the initial seed vector itself is never emitted.
class Ca90Stream {
 public:
  Ca90Stream(Hypervector seed, std::uint64_t seed_id)
      : current_(std::move(seed)), seed_id_(seed_id) {
    const int ones = current_.popcount();
    if (ones == 0 || ones == current_.dim())
      throw UsageError("ca90: degenerate seed (all-zeros or all-ones)");
  }

  const Hypervector& next() {
    current_ = rule90_step(current_);
    ++step_index_;
    return current_;
  }

  /// The next `count` consecutive states; identical to `count` calls of next().
  std::vector<Hypervector> burst(int count) {
    if (count < 1) throw UsageError("ca90: burst count must be >= 1");
    std::vector<Hypervector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(next());
    return out;
  }

  const Hypervector& current() const { return current_; }
  std::int64_t step_index() const { return step_index_; }
  std::uint64_t seed_id() const { return seed_id_; }

 private:
  Hypervector current_;
  std::int64_t step_index_ = 0;
  std::uint64_t seed_id_ = 0;
};

}  // namespace hdfuse
