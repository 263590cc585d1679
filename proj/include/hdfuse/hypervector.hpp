#pragma once

// Bit-packed binary hypervectors and the three HDC primitives: bind (XOR),
// bundle (vertical majority), permute (cyclic shift), plus Hamming distance.
//
// Bits are packed little-endian into 64-bit words: logical component i lives
// at bit (i % 64) of word (i / 64). The dimension is a runtime value and need
// not divide the word size; the slack bits of the last word are kept zero.
//
// Hypervectors are immutable values in spirit: every operation returns a new
// vector and never mutates its inputs.

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "hdfuse/error.hpp"
#include "hdfuse/rng.hpp"

namespace hdfuse {

class BundleAccumulator;

class Hypervector {
 public:
  static constexpr int kWordBits = 64;

  Hypervector() = default;
  explicit Hypervector(int dim) : dim_(dim), words_(word_count_for(dim), 0) {
    if (dim <= 0) throw UsageError("hypervector dimension must be positive");
  }

  /// Fresh random vector, each bit independently uniform.
  static Hypervector random(int dim, WordRng& rng) {
    Hypervector v(dim);
    for (auto& w : v.words_) w = rng.next_word();
    v.mask_tail();
    return v;
  }

  int dim() const { return dim_; }
  std::size_t word_count() const { return words_.size(); }
  std::span<const std::uint64_t> words() const { return words_; }

  bool bit(int i) const { return (words_[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1u; }

  void set_bit(int i, bool value) {
    const std::uint64_t mask = 1ULL << (i % 64);
    if (value)
      words_[static_cast<std::size_t>(i) / 64] |= mask;
    else
      words_[static_cast<std::size_t>(i) / 64] &= ~mask;
  }

  /// Number of set components (the one-count).
  int popcount() const {
    std::int64_t n = 0;
    for (std::uint64_t w : words_) n += __builtin_popcountll(w);
    return static_cast<int>(n);
  }

  bool operator==(const Hypervector& other) const = default;

  /// Lowercase hex, ceil(D/8) bytes, component 0 = LSB of byte 0.
  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const int bytes = (dim_ + 7) / 8;
    std::string out;
    out.reserve(static_cast<std::size_t>(bytes) * 2);
    for (int b = 0; b < bytes; ++b) {
      const auto byte =
          static_cast<unsigned>((words_[static_cast<std::size_t>(b) / 8] >> ((b % 8) * 8)) & 0xffu);
      out.push_back(kDigits[byte >> 4]);
      out.push_back(kDigits[byte & 0xf]);
    }
    return out;
  }

  static Hypervector from_hex(const std::string& hex, int dim) {
    const int bytes = (dim + 7) / 8;
    if (hex.size() != static_cast<std::size_t>(bytes) * 2)
      throw UsageError("hex string has wrong length for dimension " + std::to_string(dim));
    Hypervector v(dim);
    for (int b = 0; b < bytes; ++b) {
      const int hi = hex_digit(hex[2 * b]);
      const int lo = hex_digit(hex[2 * b + 1]);
      v.words_[static_cast<std::size_t>(b) / 8] |=
          static_cast<std::uint64_t>((hi << 4) | lo) << ((b % 8) * 8);
    }
    const int rem = dim % 64;
    if (rem != 0 && (v.words_.back() & ~(~0ULL >> (64 - rem))) != 0)
      throw UsageError("hex string sets bits beyond dimension");
    return v;
  }

 private:
  friend Hypervector bind(const Hypervector&, const Hypervector&);
  friend Hypervector permute(const Hypervector&, long long);
  friend Hypervector complement(const Hypervector&);
  friend Hypervector bundle_finalize(const BundleAccumulator&, const Hypervector&);

  static std::size_t word_count_for(int dim) {
    return (static_cast<std::size_t>(dim) + 63) / 64;
  }

  static int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw UsageError(std::string("invalid hex digit '") + c + "'");
  }

  // Zero the slack bits above dim_ in the last word.
  void mask_tail() {
    const int rem = dim_ % 64;
    if (rem != 0) words_.back() &= (~0ULL >> (64 - rem));
  }

  int dim_ = 0;
  std::vector<std::uint64_t> words_;
};

namespace detail {

inline void require_same_dim(const Hypervector& a, const Hypervector& b, const char* op) {
  if (a.dim() != b.dim())
    throw UsageError(std::string(op) + ": dimension mismatch (" + std::to_string(a.dim()) +
                     " vs " + std::to_string(b.dim()) + ")");
}

}  // namespace detail

/// Component-wise XOR. Commutative, associative, self-inverse.
inline Hypervector bind(const Hypervector& a, const Hypervector& b) {
  detail::require_same_dim(a, b, "bind");
  Hypervector out = a;
  for (std::size_t w = 0; w < out.words_.size(); ++w) out.words_[w] ^= b.words_[w];
  return out;
}

/// Component-wise NOT.
inline Hypervector complement(const Hypervector& a) {
  Hypervector out = a;
  for (auto& w : out.words_) w = ~w;
  out.mask_tail();
  return out;
}

/// Cyclic rotation by k positions; positive k moves component i to i+k (mod D).
inline Hypervector permute(const Hypervector& a, long long k) {
  const int dim = a.dim();
  const int shift = static_cast<int>(((k % dim) + dim) % dim);
  if (shift == 0) return a;

  const std::size_t nw = a.word_count();
  Hypervector out(dim);

  // rotate(x, s) = shl(x, s) | shr(x, D - s) over the D logical bits.
  const auto add_shifted = [&](int left_by) {
    // OR-in the input shifted toward higher indices by left_by bits.
    const std::size_t word_off = static_cast<std::size_t>(left_by) / 64;
    const int bit_off = left_by % 64;
    for (std::size_t i = nw; i-- > 0;) {
      if (i < word_off) break;
      std::uint64_t w = a.words_[i - word_off] << bit_off;
      if (bit_off != 0 && i - word_off > 0) w |= a.words_[i - word_off - 1] >> (64 - bit_off);
      out.words_[i] |= w;
    }
  };
  const auto add_right_shifted = [&](int right_by) {
    // OR-in the input shifted toward lower indices by right_by bits.
    const std::size_t word_off = static_cast<std::size_t>(right_by) / 64;
    const int bit_off = right_by % 64;
    for (std::size_t i = 0; i + word_off < nw; ++i) {
      std::uint64_t w = a.words_[i + word_off] >> bit_off;
      if (bit_off != 0 && i + word_off + 1 < nw) w |= a.words_[i + word_off + 1] << (64 - bit_off);
      out.words_[i] |= w;
    }
  };

  add_shifted(shift);
  add_right_shifted(dim - shift);
  out.mask_tail();
  return out;
}

/// Number of disagreeing components.
inline int hamming(const Hypervector& a, const Hypervector& b) {
  detail::require_same_dim(a, b, "hamming");
  std::int64_t n = 0;
  const auto wa = a.words(), wb = b.words();
  for (std::size_t w = 0; w < wa.size(); ++w) n += __builtin_popcountll(wa[w] ^ wb[w]);
  return static_cast<int>(n);
}

inline double normalized_hamming(const Hypervector& a, const Hypervector& b) {
  return static_cast<double>(hamming(a, b)) / a.dim();
}

/// Per-component one-counts for majority bundling. Merging accumulators adds
/// counts and totals, so parallel shards reduce to the same result as a
/// single sequential pass.
///
/// Counts are stored bit-sliced: plane p holds bit p of every component's
/// count, so accumulation is a word-wide carry-save add (a handful of
/// AND/XOR passes over the packed words) instead of D scalar increments, and
/// the majority threshold is evaluated as a word-wide bit-sliced comparison.
class BundleAccumulator {
 public:
  explicit BundleAccumulator(int dim)
      : dim_(dim), word_count_((static_cast<std::size_t>(dim) + 63) / 64) {
    if (dim <= 0) throw UsageError("accumulator dimension must be positive");
  }

  int dim() const { return dim_; }
  int total() const { return total_; }

  /// One-count of component i, reassembled from the bit planes.
  std::uint32_t count(int i) const {
    std::uint32_t c = 0;
    for (std::size_t p = 0; p < planes_.size(); ++p)
      c |= static_cast<std::uint32_t>((planes_[p][static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1u)
           << p;
    return c;
  }

  void reset() {
    for (auto& plane : planes_) std::memset(plane.data(), 0, word_count_ * sizeof(std::uint64_t));
    total_ = 0;
  }

  void accumulate(const Hypervector& v) {
    if (v.dim() != dim_) throw UsageError("accumulate: dimension mismatch");
    ensure_capacity(total_ + 1);
    carry_.assign(v.words().begin(), v.words().end());
    for (auto& plane : planes_) {
      std::uint64_t any = 0;
      for (std::size_t w = 0; w < word_count_; ++w) {
        const std::uint64_t t = plane[w] & carry_[w];
        plane[w] ^= carry_[w];
        carry_[w] = t;
        any |= t;
      }
      if (any == 0) break;
    }
    ++total_;
  }

  void merge(const BundleAccumulator& other) {
    if (other.dim_ != dim_) throw UsageError("merge: dimension mismatch");
    ensure_capacity(total_ + other.total_);
    carry_.assign(word_count_, 0);
    for (std::size_t p = 0; p < planes_.size(); ++p) {
      // other's planes beyond its count width are all zero
      const std::uint64_t* rhs = p < other.planes_.size() ? other.planes_[p].data() : nullptr;
      for (std::size_t w = 0; w < word_count_; ++w) {
        const std::uint64_t a = planes_[p][w];
        const std::uint64_t b = rhs ? rhs[w] : 0;
        const std::uint64_t c = carry_[w];
        planes_[p][w] = a ^ b ^ c;
        carry_[w] = (a & b) | (c & (a ^ b));
      }
    }
    total_ += other.total_;
  }

 private:
  friend Hypervector bundle_finalize(const BundleAccumulator&, const Hypervector&);

  // Plane capacity 2^P - 1 must cover the largest possible count.
  void ensure_capacity(int n) {
    while (((1ULL << planes_.size()) - 1) < static_cast<std::uint64_t>(n))
      planes_.emplace_back(word_count_, 0);
  }

  int dim_;
  std::size_t word_count_;
  std::vector<std::vector<std::uint64_t>> planes_;
  std::vector<std::uint64_t> carry_;
  int total_ = 0;
};

/// Vertical majority over the accumulated vectors: bit c = 1 iff
/// 2*count[c] > total. Exact ties (even total) take the corresponding bit of
/// `tiebreak`. Implemented as a bit-sliced compare of every count against
/// floor(total/2).
inline Hypervector bundle_finalize(const BundleAccumulator& acc, const Hypervector& tiebreak) {
  if (acc.total() < 1) throw UsageError("bundle_finalize: empty accumulator");
  if (tiebreak.dim() != acc.dim()) throw UsageError("bundle_finalize: tiebreak dimension mismatch");
  const std::uint32_t total = static_cast<std::uint32_t>(acc.total());
  const std::uint32_t threshold = total / 2;  // bit set iff count > threshold
  const std::size_t nw = acc.word_count_;

  std::vector<std::uint64_t> gt(nw, 0);
  std::vector<std::uint64_t> eq(nw, ~0ULL);
  for (std::size_t p = acc.planes_.size(); p-- > 0;) {
    const std::uint64_t t_bit = ((threshold >> p) & 1u) ? ~0ULL : 0;
    const std::uint64_t* plane = acc.planes_[p].data();
    for (std::size_t w = 0; w < nw; ++w) {
      gt[w] |= eq[w] & plane[w] & ~t_bit;
      eq[w] &= ~(plane[w] ^ t_bit);
    }
  }

  Hypervector out(acc.dim());
  const bool even = (total & 1u) == 0;
  for (std::size_t w = 0; w < nw; ++w)
    out.words_[w] = gt[w] | (even ? (eq[w] & tiebreak.words()[w]) : 0);
  out.mask_tail();
  return out;
}

}  // namespace hdfuse
