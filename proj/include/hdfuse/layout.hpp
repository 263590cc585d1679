#pragma once

// Dataset layout: an ordered list of sensor modalities, each with an ordered
// channel list. Global channel ids follow modality order then channel order,
// which is the fixed sequential access pattern the item-memory providers rely
// on.

#include <string>
#include <vector>

#include "hdfuse/error.hpp"

namespace hdfuse {

struct Modality {
  std::string name;
  int channels = 0;

  bool operator==(const Modality&) const = default;
};

struct DatasetLayout {
  std::vector<Modality> modalities;

  bool operator==(const DatasetLayout&) const = default;

  int modality_count() const { return static_cast<int>(modalities.size()); }

  int total_channels() const {
    int n = 0;
    for (const auto& m : modalities) n += m.channels;
    return n;
  }

  int max_modality_channels() const {
    int n = 0;
    for (const auto& m : modalities) n = std::max(n, m.channels);
    return n;
  }

  struct ChannelRef {
    int modality = 0;          // index into modalities
    int index_in_modality = 0; // channel position within that modality
  };

  ChannelRef locate(int channel_id) const {
    int base = 0;
    for (int m = 0; m < modality_count(); ++m) {
      if (channel_id < base + modalities[m].channels)
        return {m, channel_id - base};
      base += modalities[m].channels;
    }
    throw UsageError("channel id " + std::to_string(channel_id) + " out of range (total " +
                     std::to_string(total_channels()) + ")");
  }

  void validate() const {
    if (modalities.empty()) throw UsageError("layout must have at least one modality");
    for (const auto& m : modalities) {
      if (m.channels < 1)
        throw UsageError("modality '" + m.name + "' must have at least one channel");
      if (m.name.empty()) throw UsageError("modality name must be non-empty");
    }
  }

  // Feature-channel counts of the two benchmark datasets.
  static DatasetLayout amigos() {
    return {{{"GSR", 32}, {"ECG", 77}, {"EEG", 105}}};
  }
  static DatasetLayout deap() {
    return {{{"EMG", 10}, {"EEG", 192}, {"GSR", 7}, {"BVP", 17}, {"RSP", 12}}};
  }
};

}  // namespace hdfuse
