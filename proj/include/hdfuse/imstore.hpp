#pragma once

// Item-memory vector provisioning. Every feature channel needs a vector set
// {iM, PFP, NFP}; six strategies trade stored vectors against on-the-fly
// generation:
//
//   unoptimized    3 unique stored vectors per channel
//   shared_im      one iM bank sized by the largest modality, positionally
//                  reused across modalities; unique FP pair per channel
//   shared_fp      same positional iM bank; one FP pair per modality
//   combinatorial  a minimal bank reused through never-repeated vector pairs
//   rule90         2m pinned FP vectors plus a CA seed; iM vectors generated
//                  per channel by a rule-90 stream
//   hybrid         a CA-burst-filled bank serving tfc(bank) channels per
//                  burst through combinatorial pairs
//
// Providers also keep the exact storage and vector-request accounting used by
// the memory reports.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdfuse/ca90.hpp"
#include "hdfuse/error.hpp"
#include "hdfuse/hypervector.hpp"
#include "hdfuse/layout.hpp"
#include "hdfuse/rng.hpp"

namespace hdfuse {

/// The vector triple assigned to one feature channel.
struct ChannelVectorSet {
  Hypervector im;
  Hypervector pfp;
  Hypervector nfp;

  bool operator==(const ChannelVectorSet&) const = default;
};

/// Total feature channels servable by a bank of v vectors when every
/// unordered vector pair may be consumed at most once and each channel needs
/// an iM plus two FP partners: sum over n of floor((v-n)/2).
inline long long tfc(int v) {
  if (v < 3) throw UsageError("tfc: bank size must be >= 3, got " + std::to_string(v));
  long long total = 0;
  for (int n = 1; n <= v - 2; ++n) total += (v - n) / 2;
  return total;
}

/// Smallest bank size whose tfc covers `channels`.
inline int min_bank_size(int channels) {
  if (channels < 1) throw UsageError("min_bank_size: channel count must be >= 1");
  int v = 3;
  while (tfc(v) < channels) ++v;
  return v;
}

/// Deterministic combinatorial-pairs assignment: bank index i serves as iM
/// with FP pairs (i+1, i+2), (i+3, i+4), ... while in range. Every unordered
/// pair {iM, PFP} / {iM, NFP} is consumed at most once across all sets.
inline std::vector<ChannelVectorSet> assign_combinatorial(std::span<const Hypervector> bank,
                                                          int channels) {
  const int v = static_cast<int>(bank.size());
  if (v < 3 || tfc(v) < channels)
    throw UsageError("assign_combinatorial: bank of " + std::to_string(v) +
                     " vectors covers only " + std::to_string(v < 3 ? 0 : tfc(v)) +
                     " channels; min_bank_size(" + std::to_string(channels) + ") = " +
                     std::to_string(min_bank_size(channels)));
  std::vector<ChannelVectorSet> sets;
  sets.reserve(static_cast<std::size_t>(channels));
  for (int i = 0; i < v && static_cast<int>(sets.size()) < channels; ++i) {
    for (int p = i + 1; p + 1 < v && static_cast<int>(sets.size()) < channels; p += 2) {
      sets.push_back({bank[static_cast<std::size_t>(i)], bank[static_cast<std::size_t>(p)],
                      bank[static_cast<std::size_t>(p + 1)]});
    }
  }
  return sets;
}

enum class Strategy { kUnoptimized, kSharedIm, kSharedFp, kCombinatorial, kRule90, kHybrid };

struct StrategySpec {
  Strategy kind = Strategy::kRule90;
  int bank_size = 0;  // hybrid only; 0 = default 2m+1 for the layout
};

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kUnoptimized: return "unoptimized";
    case Strategy::kSharedIm: return "shared_im";
    case Strategy::kSharedFp: return "shared_fp";
    case Strategy::kCombinatorial: return "combinatorial";
    case Strategy::kRule90: return "rule90";
    case Strategy::kHybrid: return "hybrid";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& name) {
  for (Strategy s : {Strategy::kUnoptimized, Strategy::kSharedIm, Strategy::kSharedFp,
                     Strategy::kCombinatorial, Strategy::kRule90, Strategy::kHybrid})
    if (strategy_name(s) == name) return s;
  throw UsageError("unknown strategy '" + name + "'");
}

/// Hybrid bank size when left unspecified: the rule90 storage footprint of
/// the layout, the iso-storage comparison point.
inline int default_hybrid_bank(const DatasetLayout& layout) {
  return 2 * layout.modality_count() + 1;
}

inline int resolved_bank_size(const StrategySpec& spec, const DatasetLayout& layout) {
  return spec.bank_size > 0 ? spec.bank_size : default_hybrid_bank(layout);
}

// ---------------------------------------------------------------------------
// Analytic accounting (pure functions of layout and strategy)
// ---------------------------------------------------------------------------

/// Vectors held in memory at any time, including seed and pinned FP vectors.
inline long long stored_vector_count(const StrategySpec& spec, const DatasetLayout& layout) {
  const long long c = layout.total_channels();
  const long long m = layout.modality_count();
  const long long max_k = layout.max_modality_channels();
  switch (spec.kind) {
    case Strategy::kUnoptimized: return 3 * c;
    case Strategy::kSharedIm: return max_k + 2 * c;
    case Strategy::kSharedFp: return max_k + 2 * m;
    case Strategy::kCombinatorial: return min_bank_size(static_cast<int>(c));
    case Strategy::kRule90: return 2 * m + 1;
    case Strategy::kHybrid: return resolved_bank_size(spec, layout);
  }
  return 0;
}

/// Rule-90 generations made by one full sequential pass over all channels.
inline long long one_pass_vector_requests(const StrategySpec& spec, const DatasetLayout& layout) {
  const long long c = layout.total_channels();
  switch (spec.kind) {
    case Strategy::kRule90: return c;
    case Strategy::kHybrid: {
      const long long bank = resolved_bank_size(spec, layout);
      const long long per_burst = tfc(static_cast<int>(bank));
      const long long bursts = (c + per_burst - 1) / per_burst;
      return bursts * bank;
    }
    default: return 0;
  }
}

/// Steady-state vector requests per feature channel, measured over whole bank
/// cycles: 1 for rule90, bank/tfc(bank) for hybrid, 0 for stored strategies.
inline double steady_request_rate(const StrategySpec& spec, const DatasetLayout& layout) {
  switch (spec.kind) {
    case Strategy::kRule90: return 1.0;
    case Strategy::kHybrid: {
      const int bank = resolved_bank_size(spec, layout);
      return static_cast<double>(bank) / static_cast<double>(tfc(bank));
    }
    default: return 0.0;
  }
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

struct ProviderMetrics {
  long long stored_vectors = 0;   // concurrently-held vectors (constant per strategy)
  long long vector_requests = 0;  // cumulative rule-90 generations during passes
  long long channels_served = 0;  // cumulative get_channel_set calls
  long long passes = 0;

  double request_rate() const {
    return channels_served > 0 ? static_cast<double>(vector_requests) / channels_served : 0.0;
  }
};

/// Serves the {iM, PFP, NFP} set of every channel. Generative strategies
/// (rule90, hybrid) are sequential: channels must be requested in ascending
/// order within one pass, and each encoding pass starts with begin_pass().
/// Stored strategies allow random access. Two providers built with the same
/// seed and layout serve identical sets for every channel on every pass.
class VectorProvider {
 public:
  virtual ~VectorProvider() = default;

  virtual void begin_pass() { ++metrics_.passes; }
  virtual const ChannelVectorSet& get_channel_set(int channel_id) = 0;

  const DatasetLayout& layout() const { return layout_; }
  const ProviderMetrics& metrics() const { return metrics_; }
  const StrategySpec& strategy() const { return spec_; }

 protected:
  VectorProvider(StrategySpec spec, DatasetLayout layout)
      : spec_(spec), layout_(std::move(layout)) {
    layout_.validate();
    metrics_.stored_vectors = stored_vector_count(spec_, layout_);
  }

  void check_channel(int channel_id) const {
    if (channel_id < 0 || channel_id >= layout_.total_channels())
      throw UsageError("channel id " + std::to_string(channel_id) + " out of range");
  }

  StrategySpec spec_;
  DatasetLayout layout_;
  ProviderMetrics metrics_;
};

namespace detail {

/// Backs unoptimized / shared_im / shared_fp / combinatorial: all sets are
/// materialized up front from the stored bank; access is random.
class StoredProvider final : public VectorProvider {
 public:
  StoredProvider(StrategySpec spec, DatasetLayout layout, std::uint64_t seed, int dim)
      : VectorProvider(spec, std::move(layout)), dim_(dim) {
    WordRng rng(derive_seed(seed, SeedStream::kProvider));
    build(rng);
  }

  const ChannelVectorSet& get_channel_set(int channel_id) override {
    check_channel(channel_id);
    if (metrics_.passes == 0) begin_pass();
    ++metrics_.channels_served;
    return sets_[static_cast<std::size_t>(channel_id)];
  }

 private:
  void build(WordRng& rng) {
    const int c = layout_.total_channels();
    const auto draw = [&] { return Hypervector::random(dim_, rng); };
    sets_.reserve(static_cast<std::size_t>(c));
    switch (spec_.kind) {
      case Strategy::kUnoptimized: {
        for (int i = 0; i < c; ++i) {
          ChannelVectorSet s;
          s.im = draw();
          s.pfp = draw();
          s.nfp = draw();
          sets_.push_back(std::move(s));
        }
        break;
      }
      case Strategy::kSharedIm: {
        std::vector<Hypervector> im_bank;
        for (int j = 0; j < layout_.max_modality_channels(); ++j) im_bank.push_back(draw());
        for (int i = 0; i < c; ++i) {
          const auto ref = layout_.locate(i);
          ChannelVectorSet s;
          s.im = im_bank[static_cast<std::size_t>(ref.index_in_modality)];
          s.pfp = draw();
          s.nfp = draw();
          sets_.push_back(std::move(s));
        }
        break;
      }
      case Strategy::kSharedFp: {
        std::vector<Hypervector> im_bank;
        for (int j = 0; j < layout_.max_modality_channels(); ++j) im_bank.push_back(draw());
        std::vector<std::pair<Hypervector, Hypervector>> fp;
        for (int m = 0; m < layout_.modality_count(); ++m) {
          auto p = draw();
          auto n = draw();
          fp.emplace_back(std::move(p), std::move(n));
        }
        for (int i = 0; i < c; ++i) {
          const auto ref = layout_.locate(i);
          sets_.push_back({im_bank[static_cast<std::size_t>(ref.index_in_modality)],
                           fp[static_cast<std::size_t>(ref.modality)].first,
                           fp[static_cast<std::size_t>(ref.modality)].second});
        }
        break;
      }
      case Strategy::kCombinatorial: {
        std::vector<Hypervector> bank;
        for (int j = 0; j < min_bank_size(c); ++j) bank.push_back(draw());
        sets_ = assign_combinatorial(bank, c);
        break;
      }
      default:
        throw UsageError("StoredProvider: generative strategy");
    }
  }

  int dim_ = 0;
  std::vector<ChannelVectorSet> sets_;
};

/// Rule-90 generation: pinned per-modality FP pairs plus a CA stream that
/// regenerates the iM of every channel on the fly, restarting from the
/// post-FP state each pass so every sample sees identical channel vectors.
class Rule90Provider final : public VectorProvider {
 public:
  Rule90Provider(StrategySpec spec, DatasetLayout layout, std::uint64_t seed, int dim)
      : VectorProvider(spec, std::move(layout)),
        stream_(make_seed_stream(seed, dim)),
        checkpoint_(stream_) {
    // The first 2m generated vectors are the per-modality (PFP, NFP) pairs,
    // in layout order; these are the only vectors kept across the run.
    for (int m = 0; m < layout_.modality_count(); ++m) {
      Hypervector p = stream_.next();
      Hypervector n = stream_.next();
      pinned_fp_.emplace_back(std::move(p), std::move(n));
    }
    checkpoint_ = stream_;
  }

  void begin_pass() override {
    VectorProvider::begin_pass();
    stream_ = checkpoint_;
    cursor_ = 0;
    scratch_modality_ = -1;
  }

  const ChannelVectorSet& get_channel_set(int channel_id) override {
    check_channel(channel_id);
    if (metrics_.passes == 0) begin_pass();
    if (channel_id != cursor_)
      throw UsageError("rule90 provider requires ascending sequential channel access (expected " +
                       std::to_string(cursor_) + ", got " + std::to_string(channel_id) + ")");
    const auto ref = layout_.locate(channel_id);
    if (ref.modality != scratch_modality_) {
      scratch_.pfp = pinned_fp_[static_cast<std::size_t>(ref.modality)].first;
      scratch_.nfp = pinned_fp_[static_cast<std::size_t>(ref.modality)].second;
      scratch_modality_ = ref.modality;
    }
    scratch_.im = stream_.next();
    ++metrics_.vector_requests;
    ++metrics_.channels_served;
    ++cursor_;
    return scratch_;
  }

 private:
  static Ca90Stream make_seed_stream(std::uint64_t seed, int dim) {
    WordRng rng(derive_seed(seed, SeedStream::kProvider));
    return Ca90Stream(Hypervector::random(dim, rng), seed);
  }

  Ca90Stream stream_;
  Ca90Stream checkpoint_;
  std::vector<std::pair<Hypervector, Hypervector>> pinned_fp_;
  ChannelVectorSet scratch_;
  int scratch_modality_ = -1;
  int cursor_ = 0;
};

/// Hybrid: the CA stream burst-fills a bank of bank_size vectors, the bank
/// serves tfc(bank_size) channels through combinatorial pairs, then the full
/// bank is burst-regenerated. The last bank entry doubles as the next seed.
class HybridProvider final : public VectorProvider {
 public:
  HybridProvider(StrategySpec spec, DatasetLayout layout, std::uint64_t seed, int dim)
      : VectorProvider(spec, std::move(layout)), stream_(make_seed_stream(seed, dim)) {
    bank_size_ = resolved_bank_size(spec_, layout_);
    if (bank_size_ < 3)
      throw UsageError("hybrid bank size must be >= 3, got " + std::to_string(bank_size_));
    metrics_.stored_vectors = bank_size_;
    group_capacity_ = static_cast<int>(tfc(bank_size_));
    checkpoint_.emplace(stream_);
  }

  void begin_pass() override {
    VectorProvider::begin_pass();
    stream_ = *checkpoint_;
    cursor_ = 0;
    group_sets_.clear();
    group_start_ = 0;
  }

  const ChannelVectorSet& get_channel_set(int channel_id) override {
    check_channel(channel_id);
    if (metrics_.passes == 0) begin_pass();
    if (channel_id != cursor_)
      throw UsageError("hybrid provider requires ascending sequential channel access (expected " +
                       std::to_string(cursor_) + ", got " + std::to_string(channel_id) + ")");
    if (cursor_ % group_capacity_ == 0) refill(cursor_);
    const auto& set = group_sets_[static_cast<std::size_t>(cursor_ - group_start_)];
    ++metrics_.channels_served;
    ++cursor_;
    return set;
  }

 private:
  static Ca90Stream make_seed_stream(std::uint64_t seed, int dim) {
    WordRng rng(derive_seed(seed, SeedStream::kProvider));
    return Ca90Stream(Hypervector::random(dim, rng), seed);
  }

  void refill(int group_start) {
    const std::vector<Hypervector> bank = stream_.burst(bank_size_);
    metrics_.vector_requests += bank_size_;
    const int remaining = layout_.total_channels() - group_start;
    group_sets_ = assign_combinatorial(bank, std::min(group_capacity_, remaining));
    group_start_ = group_start;
  }

  Ca90Stream stream_;
  std::optional<Ca90Stream> checkpoint_;
  std::vector<ChannelVectorSet> group_sets_;
  int bank_size_ = 0;
  int group_capacity_ = 0;
  int group_start_ = 0;
  int cursor_ = 0;
};

}  // namespace detail

inline std::unique_ptr<VectorProvider> make_provider(const StrategySpec& spec,
                                                     const DatasetLayout& layout, int dim,
                                                     std::uint64_t seed) {
  layout.validate();
  if (dim < 1) throw UsageError("provider dimension must be positive");
  switch (spec.kind) {
    case Strategy::kRule90:
      return std::make_unique<detail::Rule90Provider>(spec, layout, seed, dim);
    case Strategy::kHybrid:
      return std::make_unique<detail::HybridProvider>(spec, layout, seed, dim);
    default:
      return std::make_unique<detail::StoredProvider>(spec, layout, seed, dim);
  }
}

}  // namespace hdfuse
