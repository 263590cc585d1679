#pragma once

// Associative memory: one majority-bundled prototype per class, queried by
// minimum Hamming distance. Training shards can be merged exactly because
// bundle accumulators add.

#include <string>
#include <vector>

#include "hdfuse/encoder.hpp"
#include "hdfuse/error.hpp"
#include "hdfuse/hypervector.hpp"

namespace hdfuse {

struct InferenceResult {
  int label = 0;
  std::vector<int> distances;  // Hamming distance to every class prototype
};

class AssociativeMemory {
 public:
  AssociativeMemory(int num_classes, int dim) : dim_(dim) {
    if (num_classes < 1) throw UsageError("associative memory needs at least one class");
    accumulators_.reserve(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) accumulators_.emplace_back(dim);
  }

  int num_classes() const { return static_cast<int>(accumulators_.size()); }
  int dim() const { return dim_; }
  bool finalized() const { return finalized_; }

  void add(const Hypervector& vec, int label) {
    if (finalized_) throw UsageError("associative memory is finalized; no retraining");
    if (label < 0 || label >= num_classes())
      throw UsageError("label " + std::to_string(label) + " out of range");
    accumulators_[static_cast<std::size_t>(label)].accumulate(vec);
  }

  void add(const EncodedSample& sample) { add(sample.vec, sample.label); }

  /// Exact shard merge: training on two shards then merging equals training
  /// on their concatenation.
  void merge(const AssociativeMemory& other) {
    if (finalized_ || other.finalized_) throw UsageError("cannot merge finalized memories");
    if (other.num_classes() != num_classes() || other.dim_ != dim_)
      throw UsageError("merge: shape mismatch");
    for (int c = 0; c < num_classes(); ++c)
      accumulators_[static_cast<std::size_t>(c)].merge(other.accumulators_[static_cast<std::size_t>(c)]);
  }

  void finalize(const Hypervector& tiebreak) {
    if (finalized_) throw UsageError("associative memory already finalized");
    prototypes_.reserve(accumulators_.size());
    for (int c = 0; c < num_classes(); ++c) {
      const auto& acc = accumulators_[static_cast<std::size_t>(c)];
      if (acc.total() == 0)
        throw TrainingError("class " + std::to_string(c) + " has no training samples");
      prototypes_.push_back(bundle_finalize(acc, tiebreak));
    }
    finalized_ = true;
  }

  /// Argmin over class Hamming distances; ties go to the lowest class id.
  InferenceResult infer(const Hypervector& query) const {
    if (!finalized_) throw UsageError("associative memory not finalized");
    InferenceResult result;
    result.distances.reserve(prototypes_.size());
    int best = -1;
    for (int c = 0; c < num_classes(); ++c) {
      const int d = hamming(prototypes_[static_cast<std::size_t>(c)], query);
      result.distances.push_back(d);
      if (best < 0 || d < result.distances[static_cast<std::size_t>(best)]) best = c;
    }
    result.label = best;
    return result;
  }

  const Hypervector& prototype(int c) const { return prototypes_.at(static_cast<std::size_t>(c)); }
  int class_total(int c) const { return accumulators_.at(static_cast<std::size_t>(c)).total(); }

 private:
  int dim_;
  std::vector<BundleAccumulator> accumulators_;
  std::vector<Hypervector> prototypes_;
  bool finalized_ = false;
};

/// Bundle every sample into its class prototype and finalize.
inline AssociativeMemory train(std::span<const EncodedSample> samples, int num_classes,
                               const Hypervector& tiebreak) {
  if (samples.empty()) throw TrainingError("no training samples");
  AssociativeMemory am(num_classes, samples.front().vec.dim());
  for (const auto& s : samples) am.add(s);
  am.finalize(tiebreak);
  return am;
}

}  // namespace hdfuse
