#pragma once

// Spatial and temporal encoding. Per channel the iM vector is bound with the
// sign-selected FP vector; channel vectors bundle into a modality vector;
// modality vectors fuse (early: bundled before one temporal encoder; late:
// per-modality temporal encoders whose outputs are bundled). The temporal
// encoder XORs the last N fused vectors, each rotated by its age.

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "hdfuse/error.hpp"
#include "hdfuse/hypervector.hpp"
#include "hdfuse/imstore.hpp"
#include "hdfuse/layout.hpp"

namespace hdfuse {

/// Temporally encoded sample ready for the associative memory.
struct EncodedSample {
  Hypervector vec;
  int label = 0;
  int sample_index = 0;
};

/// Sign mux: non-negative values select the positive FP vector.
inline const Hypervector& select_fp(const ChannelVectorSet& set, double value) {
  return value >= 0.0 ? set.pfp : set.nfp;
}

/// Spatial encoding of one channel: iM XOR sign-selected FP.
inline Hypervector encode_channel(const ChannelVectorSet& set, double value) {
  return bind(set.im, select_fp(set, value));
}

/// Majority-bundle the spatially encoded channels of one modality.
inline Hypervector encode_modality(std::span<const ChannelVectorSet> sets,
                                   std::span<const double> values, const Hypervector& tiebreak) {
  if (sets.empty()) throw UsageError("encode_modality: empty modality");
  if (sets.size() != values.size())
    throw UsageError("encode_modality: sets and values length mismatch");
  BundleAccumulator acc(sets.front().im.dim());
  for (std::size_t i = 0; i < sets.size(); ++i) acc.accumulate(encode_channel(sets[i], values[i]));
  return bundle_finalize(acc, tiebreak);
}

/// Majority-bundle across modality vectors, weighting each modality equally.
inline Hypervector fuse_early(std::span<const Hypervector> modality_vectors,
                              const Hypervector& tiebreak) {
  if (modality_vectors.empty()) throw UsageError("fuse_early: no modality vectors");
  BundleAccumulator acc(modality_vectors.front().dim());
  for (const auto& v : modality_vectors) acc.accumulate(v);
  return bundle_finalize(acc, tiebreak);
}

/// Sliding n-gram window over fused spatial vectors. Emits nothing during the
/// first N-1 pushes after a reset; afterwards every push emits the XOR of the
/// newest vector with the previous N-1, each rotated by its age.
class NgramState {
 public:
  explicit NgramState(int n) : n_(n) {
    if (n < 1) throw UsageError("n-gram length must be >= 1");
  }

  int n() const { return n_; }
  std::size_t held() const { return history_.size(); }

  void reset_history() { history_.clear(); }

  std::optional<Hypervector> push(const Hypervector& se) {
    if (static_cast<int>(history_.size()) < n_ - 1) {
      history_.push_back(se);
      return std::nullopt;
    }
    Hypervector te = se;
    for (int age = 1; age < n_; ++age)
      te = bind(te, permute(history_[history_.size() - static_cast<std::size_t>(age)], age));
    if (n_ > 1) {
      history_.pop_front();
      history_.push_back(se);
    }
    return te;
  }

 private:
  int n_;
  std::deque<Hypervector> history_;
};

/// One feature sample entering the encoder. Values are already scaled.
struct Sample {
  std::span<const double> values;
  int label = 0;
  int sample_index = 0;
};

namespace detail {

inline void check_sample(const VectorProvider& provider, const DatasetLayout& layout,
                         const Sample& sample) {
  if (provider.layout() != layout) throw UsageError("provider layout does not match");
  if (static_cast<int>(sample.values.size()) != layout.total_channels())
    throw UsageError("sample has " + std::to_string(sample.values.size()) + " values, layout has " +
                     std::to_string(layout.total_channels()) + " channels");
}

/// One sequential provider pass producing all modality vectors of a sample.
inline std::vector<Hypervector> spatial_modality_vectors(VectorProvider& provider,
                                                         const DatasetLayout& layout,
                                                         const Sample& sample, int dim,
                                                         const Hypervector& tiebreak) {
  provider.begin_pass();
  std::vector<Hypervector> modality_vectors;
  modality_vectors.reserve(static_cast<std::size_t>(layout.modality_count()));
  BundleAccumulator acc(dim);
  int channel_id = 0;
  for (const auto& modality : layout.modalities) {
    acc.reset();
    for (int j = 0; j < modality.channels; ++j, ++channel_id) {
      const ChannelVectorSet& set = provider.get_channel_set(channel_id);
      acc.accumulate(encode_channel(set, sample.values[static_cast<std::size_t>(channel_id)]));
    }
    modality_vectors.push_back(bundle_finalize(acc, tiebreak));
  }
  return modality_vectors;
}

}  // namespace detail

/// Early fusion: bundle modality vectors, then a single temporal encoder.
inline std::optional<EncodedSample> encode_sample_early(VectorProvider& provider,
                                                        const DatasetLayout& layout,
                                                        const Sample& sample,
                                                        const Hypervector& tiebreak,
                                                        NgramState& state) {
  detail::check_sample(provider, layout, sample);
  const int dim = tiebreak.dim();
  const auto modality_vectors =
      detail::spatial_modality_vectors(provider, layout, sample, dim, tiebreak);
  const Hypervector fused = fuse_early(modality_vectors, tiebreak);
  auto te = state.push(fused);
  if (!te) return std::nullopt;
  return EncodedSample{std::move(*te), sample.label, sample.sample_index};
}

/// Late fusion baseline: one temporal encoder per modality, outputs bundled.
/// Emits only once every modality's window is warm.
inline std::optional<EncodedSample> encode_sample_late(VectorProvider& provider,
                                                       const DatasetLayout& layout,
                                                       const Sample& sample,
                                                       const Hypervector& tiebreak,
                                                       std::span<NgramState> states) {
  detail::check_sample(provider, layout, sample);
  if (static_cast<int>(states.size()) != layout.modality_count())
    throw UsageError("late fusion needs one NgramState per modality");
  const int dim = tiebreak.dim();
  const auto modality_vectors =
      detail::spatial_modality_vectors(provider, layout, sample, dim, tiebreak);
  std::vector<Hypervector> te_vectors;
  te_vectors.reserve(states.size());
  bool all_emitted = true;
  for (std::size_t m = 0; m < states.size(); ++m) {
    auto te = states[m].push(modality_vectors[m]);
    if (te)
      te_vectors.push_back(std::move(*te));
    else
      all_emitted = false;
  }
  if (!all_emitted) return std::nullopt;
  BundleAccumulator acc(dim);
  for (const auto& v : te_vectors) acc.accumulate(v);
  return EncodedSample{bundle_finalize(acc, tiebreak), sample.label, sample.sample_index};
}

}  // namespace hdfuse
