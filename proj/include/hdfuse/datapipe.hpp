#pragma once

// Feature ingestion and preprocessing: CSV load/save, per-channel min-max
// scaling fitted on the training fold, moving-average smoothing with
// downsampling, label thresholding, split generation (leave-one-subject-out
// and per-subject holdout), n-gram emission masks, and a synthetic two-class
// dataset generator used as the end-to-end oracle.
//
// CSV schema: header row 1 tags every value column with `modality:<name>`
// (the four leading id columns are left blank), header row 2 names the
// columns, then one row per time window:
//   subject_id, segment_id, valence_raw, arousal_raw, v_1, ..., v_C
// UTF-8, '.' decimal, comma separator, no quoting.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hdfuse/error.hpp"
#include "hdfuse/layout.hpp"
#include "hdfuse/rng.hpp"

namespace hdfuse {

struct FeatureRow {
  int subject_id = 0;
  int segment_id = 0;
  double valence_raw = 0.0;
  double arousal_raw = 0.0;
  std::vector<double> values;

  bool operator==(const FeatureRow&) const = default;
};

struct FeatureTable {
  DatasetLayout layout;
  std::vector<FeatureRow> rows;
  double sample_period_s = 1.0;  // seconds per row; not stored in the CSV

  bool operator==(const FeatureTable&) const = default;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

inline double parse_double(const std::string& cell, int row, int col) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                    ": non-numeric cell '" + cell + "'");
  return out;
}

inline int parse_int(const std::string& cell, int row, int col) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                    ": non-integer cell '" + cell + "'");
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Contiguous runs of identical (subject, segment); smoothing and n-gram
// windows never cross a run boundary.
struct SegmentRun {
  int begin = 0;
  int end = 0;  // exclusive
  int subject_id = 0;
  int segment_id = 0;
};

inline std::vector<SegmentRun> segment_runs(const FeatureTable& table) {
  std::vector<SegmentRun> runs;
  for (int r = 0; r < static_cast<int>(table.rows.size()); ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    if (runs.empty() || runs.back().subject_id != row.subject_id ||
        runs.back().segment_id != row.segment_id)
      runs.push_back({r, r + 1, row.subject_id, row.segment_id});
    else
      runs.back().end = r + 1;
  }
  return runs;
}

}  // namespace detail

inline std::string to_csv(const FeatureTable& table) {
  std::string out;
  out += ",,,";  // four blank id-column cells in the modality header
  for (const auto& m : table.layout.modalities)
    for (int j = 0; j < m.channels; ++j) out += ",modality:" + m.name;
  out += "\n";
  out += "subject_id,segment_id,valence_raw,arousal_raw";
  for (const auto& m : table.layout.modalities)
    for (int j = 0; j < m.channels; ++j) out += "," + m.name + "_" + std::to_string(j);
  out += "\n";
  for (const auto& row : table.rows) {
    out += std::to_string(row.subject_id) + "," + std::to_string(row.segment_id) + "," +
           detail::format_double(row.valence_raw) + "," + detail::format_double(row.arousal_raw);
    for (double v : row.values) out += "," + detail::format_double(v);
    out += "\n";
  }
  return out;
}

inline FeatureTable from_csv_text(const std::string& text,
                                  const std::optional<DatasetLayout>& expected = std::nullopt) {
  std::istringstream in(text);
  std::string line;

  if (!std::getline(in, line)) throw DataError("empty file: missing modality header");
  const auto mod_cells = detail::split_csv_line(line);
  if (mod_cells.size() < 5) throw DataError("modality header has no value columns");

  DatasetLayout layout;
  for (std::size_t i = 4; i < mod_cells.size(); ++i) {
    const auto& cell = mod_cells[i];
    if (cell.rfind("modality:", 0) != 0)
      throw DataError("modality header column " + std::to_string(i + 1) +
                      ": expected 'modality:<name>', got '" + cell + "'");
    const std::string name = cell.substr(9);
    if (!layout.modalities.empty() && layout.modalities.back().name == name)
      ++layout.modalities.back().channels;
    else
      layout.modalities.push_back({name, 1});
  }
  layout.validate();
  if (expected && !(layout == *expected)) {
    std::string names;
    for (const auto& m : layout.modalities)
      names += (names.empty() ? "" : ",") + m.name + ":" + std::to_string(m.channels);
    throw DataError("layout mismatch: file declares " + names);
  }

  if (!std::getline(in, line)) throw DataError("missing column-name header");
  const auto name_cells = detail::split_csv_line(line);
  if (name_cells.size() != mod_cells.size())
    throw DataError("column-name header has " + std::to_string(name_cells.size()) +
                    " columns, modality header has " + std::to_string(mod_cells.size()));

  FeatureTable table;
  table.layout = layout;
  const std::size_t expected_cols = mod_cells.size();
  int data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++data_row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != expected_cols)
      throw DataError("row " + std::to_string(data_row) + ": expected " +
                      std::to_string(expected_cols) + " columns, got " +
                      std::to_string(cells.size()) + " (first missing column index " +
                      std::to_string(cells.size() + 1) + ")");
    FeatureRow row;
    row.subject_id = detail::parse_int(cells[0], data_row, 1);
    row.segment_id = detail::parse_int(cells[1], data_row, 2);
    row.valence_raw = detail::parse_double(cells[2], data_row, 3);
    row.arousal_raw = detail::parse_double(cells[3], data_row, 4);
    row.values.reserve(expected_cols - 4);
    for (std::size_t i = 4; i < expected_cols; ++i)
      row.values.push_back(detail::parse_double(cells[i], data_row, static_cast<int>(i + 1)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void save_features(const FeatureTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  const std::string text = to_csv(table);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

inline FeatureTable load_features(const std::string& path,
                                  const std::optional<DatasetLayout>& expected = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_csv_text(buf.str(), expected);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

/// Per-channel affine map fitted so the fitting rows span exactly [-1, +1].
/// Constant channels map to 0 everywhere (with a warning). Rows outside the
/// fitting set are mapped with the fitted parameters and clamped.
class MinMaxScaler {
 public:
  static MinMaxScaler fit(const FeatureTable& table, std::span<const int> row_ids) {
    if (row_ids.empty()) throw UsageError("scaler: empty fitting set");
    const int channels = table.layout.total_channels();
    MinMaxScaler s;
    s.min_.assign(static_cast<std::size_t>(channels), std::numeric_limits<double>::infinity());
    s.max_.assign(static_cast<std::size_t>(channels), -std::numeric_limits<double>::infinity());
    for (int r : row_ids) {
      const auto& values = table.rows[static_cast<std::size_t>(r)].values;
      for (int c = 0; c < channels; ++c) {
        s.min_[static_cast<std::size_t>(c)] = std::min(s.min_[static_cast<std::size_t>(c)], values[static_cast<std::size_t>(c)]);
        s.max_[static_cast<std::size_t>(c)] = std::max(s.max_[static_cast<std::size_t>(c)], values[static_cast<std::size_t>(c)]);
      }
    }
    for (int c = 0; c < channels; ++c) {
      if (s.min_[static_cast<std::size_t>(c)] == s.max_[static_cast<std::size_t>(c)])
        s.warnings_.push_back("channel " + std::to_string(c) +
                              " is constant on the fitting set; mapping to 0");
    }
    return s;
  }

  double apply_value(int channel, double x, bool clamp) const {
    const double lo = min_[static_cast<std::size_t>(channel)];
    const double hi = max_[static_cast<std::size_t>(channel)];
    if (lo == hi) return 0.0;
    double y = -1.0 + 2.0 * (x - lo) / (hi - lo);
    if (clamp) y = std::clamp(y, -1.0, 1.0);
    return y;
  }

  std::vector<double> apply_row(std::span<const double> values, bool clamp) const {
    std::vector<double> out(values.size());
    for (std::size_t c = 0; c < values.size(); ++c)
      out[c] = apply_value(static_cast<int>(c), values[c], clamp);
    return out;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<double> min_, max_;
  std::vector<std::string> warnings_;
};

/// Fit on the whole table and rescale it in place-as-a-copy.
inline FeatureTable scale_minmax(const FeatureTable& table,
                                 std::vector<std::string>* warnings = nullptr) {
  std::vector<int> all(table.rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const auto scaler = MinMaxScaler::fit(table, all);
  if (warnings)
    warnings->insert(warnings->end(), scaler.warnings().begin(), scaler.warnings().end());
  FeatureTable out = table;
  for (auto& row : out.rows) row.values = scaler.apply_row(row.values, false);
  return out;
}

// ---------------------------------------------------------------------------
// Smoothing + downsampling
// ---------------------------------------------------------------------------

/// Sliding mean of window_s seconds advanced by step_s per emitted row, then
/// keep every factor-th emitted row. Windows never cross segment boundaries;
/// segments shorter than the window are skipped with a warning. Row metadata
/// comes from the last row of each window.
inline FeatureTable smooth_downsample(const FeatureTable& table, double window_s = 30.0,
                                      double step_s = 15.0, int factor = 8,
                                      std::vector<std::string>* warnings = nullptr) {
  if (window_s < step_s) throw UsageError("smoothing window must be >= step");
  if (step_s <= 0.0) throw UsageError("smoothing step must be positive");
  if (factor < 1) throw UsageError("downsampling factor must be >= 1");
  const double period = table.sample_period_s;
  if (period <= 0.0) throw UsageError("sample period must be positive");

  const int window_rows = std::max(1, static_cast<int>(std::llround(window_s / period)));
  const int step_rows = std::max(1, static_cast<int>(std::llround(step_s / period)));
  const int channels = table.layout.total_channels();

  FeatureTable out;
  out.layout = table.layout;
  out.sample_period_s = period * step_rows * factor;

  for (const auto& run : detail::segment_runs(table)) {
    const int len = run.end - run.begin;
    if (len < window_rows) {
      if (warnings)
        warnings->push_back("segment (subject " + std::to_string(run.subject_id) + ", segment " +
                            std::to_string(run.segment_id) + ") shorter than the window; skipped");
      continue;
    }
    int emitted = 0;
    for (int start = run.begin; start + window_rows <= run.end; start += step_rows, ++emitted) {
      if (emitted % factor != 0) continue;
      FeatureRow row = table.rows[static_cast<std::size_t>(start + window_rows - 1)];
      std::vector<double> mean(static_cast<std::size_t>(channels), 0.0);
      for (int r = start; r < start + window_rows; ++r)
        for (int c = 0; c < channels; ++c)
          mean[static_cast<std::size_t>(c)] +=
              table.rows[static_cast<std::size_t>(r)].values[static_cast<std::size_t>(c)];
      for (auto& v : mean) v /= window_rows;
      row.values = std::move(mean);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels, splits, masks
// ---------------------------------------------------------------------------

/// High class iff raw strictly exceeds the threshold.
inline int binarize_labels(double raw, double threshold) { return raw > threshold ? 1 : 0; }

enum class SplitKind { kLeaveOneSubjectOut, kPerSubjectHoldout };

struct SplitPlan {
  SplitKind kind = SplitKind::kLeaveOneSubjectOut;
  struct Fold {
    int test_subject = 0;
    std::vector<int> train_rows;
    std::vector<int> test_rows;
  };
  std::vector<Fold> folds;
};

/// LOSO: one fold per subject, its rows as the test set. Per-subject holdout:
/// one fold per subject, the last ceil(fraction * segments) segments of that
/// subject as test and its remaining segments as train (segment-granular).
inline SplitPlan make_splits(const FeatureTable& table, SplitKind kind,
                             double holdout_fraction = 0.2) {
  std::map<int, std::vector<int>> subject_rows;
  // per subject: segment ids in first-encounter order
  std::map<int, std::vector<int>> subject_segments;
  std::map<std::pair<int, int>, std::vector<int>> segment_rows;
  for (int r = 0; r < static_cast<int>(table.rows.size()); ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    subject_rows[row.subject_id].push_back(r);
    auto& segs = subject_segments[row.subject_id];
    if (std::find(segs.begin(), segs.end(), row.segment_id) == segs.end())
      segs.push_back(row.segment_id);
    segment_rows[{row.subject_id, row.segment_id}].push_back(r);
  }

  SplitPlan plan;
  plan.kind = kind;
  if (kind == SplitKind::kLeaveOneSubjectOut) {
    if (subject_rows.size() < 2)
      throw UsageError("leave-one-subject-out needs at least 2 subjects, got " +
                       std::to_string(subject_rows.size()));
    for (const auto& [subject, test_rows] : subject_rows) {
      SplitPlan::Fold fold;
      fold.test_subject = subject;
      fold.test_rows = test_rows;
      for (const auto& [other, rows] : subject_rows)
        if (other != subject) fold.train_rows.insert(fold.train_rows.end(), rows.begin(), rows.end());
      std::sort(fold.train_rows.begin(), fold.train_rows.end());
      plan.folds.push_back(std::move(fold));
    }
  } else {
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
      throw UsageError("holdout fraction must lie in (0, 1)");
    for (const auto& [subject, segs] : subject_segments) {
      const int n_seg = static_cast<int>(segs.size());
      const int n_test = static_cast<int>(std::ceil(holdout_fraction * n_seg));
      if (n_test >= n_seg)
        throw UsageError("holdout leaves no training segments for subject " +
                         std::to_string(subject));
      SplitPlan::Fold fold;
      fold.test_subject = subject;
      for (int i = 0; i < n_seg; ++i) {
        const auto& rows = segment_rows[{subject, segs[static_cast<std::size_t>(i)]}];
        auto& dst = i < n_seg - n_test ? fold.train_rows : fold.test_rows;
        dst.insert(dst.end(), rows.begin(), rows.end());
      }
      plan.folds.push_back(std::move(fold));
    }
  }
  return plan;
}

/// Emission mask for an n-gram of length n: row r emits iff rows
/// [r-n+1, r] lie inside one segment run and share one label. The encoder
/// realizes the same mask by resetting its state at every boundary.
inline std::vector<char> segment_ngram_mask(const FeatureTable& table, int n,
                                            std::span<const int> labels) {
  if (n < 1) throw UsageError("n-gram length must be >= 1");
  if (labels.size() != table.rows.size()) throw UsageError("labels size mismatch");
  std::vector<char> mask(table.rows.size(), 0);
  for (const auto& run : detail::segment_runs(table)) {
    int run_start = run.begin;
    for (int r = run.begin; r < run.end; ++r) {
      if (r > run.begin && labels[static_cast<std::size_t>(r)] != labels[static_cast<std::size_t>(r - 1)])
        run_start = r;
      if (r - run_start + 1 >= n) mask[static_cast<std::size_t>(r)] = 1;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Synthetic oracle dataset
// ---------------------------------------------------------------------------

/// Two classes defined by fixed per-channel sign templates differing on 75%
/// of channels. Each row is its class template with every channel's sign
/// flipped independently with probability noise_p and a magnitude uniform in
/// (0, 1]. Segments are assigned round-robin to subjects with the class
/// alternating each round, so every subject holds both classes.
struct SynthSpec {
  DatasetLayout layout;
  int num_segments = 32;
  int rows_per_segment = 30;
  double noise_p = 0.15;
  int num_subjects = 8;
  std::uint64_t seed = 1;
};

inline FeatureTable synth_generate(const SynthSpec& spec) {
  spec.layout.validate();
  if (spec.noise_p < 0.0 || spec.noise_p >= 0.5)
    throw UsageError("noise_p must lie in [0, 0.5)");
  if (spec.num_segments < 1 || spec.rows_per_segment < 1)
    throw UsageError("synthetic spec needs at least one segment and one row");
  if (spec.num_subjects < 1 || spec.num_subjects > spec.num_segments)
    throw UsageError("num_subjects must lie in [1, num_segments]");

  WordRng rng(derive_seed(spec.seed, SeedStream::kSynthData));
  const int channels = spec.layout.total_channels();

  std::vector<int> tmpl0(static_cast<std::size_t>(channels));
  for (auto& s : tmpl0) s = (rng.next_word() & 1u) ? 1 : -1;
  std::vector<int> tmpl1 = tmpl0;
  const int differing = (3 * channels + 3) / 4;  // 75% of channels, rounded up
  std::vector<int> idx(static_cast<std::size_t>(channels));
  for (int i = 0; i < channels; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < differing; ++i) {
    const auto j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(channels - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    tmpl1[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] *= -1;
  }

  FeatureTable table;
  table.layout = spec.layout;
  table.rows.reserve(static_cast<std::size_t>(spec.num_segments) *
                     static_cast<std::size_t>(spec.rows_per_segment));
  for (int g = 0; g < spec.num_segments; ++g) {
    const int klass = (g / spec.num_subjects) % 2;
    const auto& tmpl = klass == 0 ? tmpl0 : tmpl1;
    for (int r = 0; r < spec.rows_per_segment; ++r) {
      FeatureRow row;
      row.subject_id = g % spec.num_subjects;
      row.segment_id = g;
      row.valence_raw = row.arousal_raw = static_cast<double>(klass);
      row.values.resize(static_cast<std::size_t>(channels));
      for (int c = 0; c < channels; ++c) {
        const bool flip = rng.next_unit() < spec.noise_p;
        const double magnitude = 1.0 - rng.next_unit();  // (0, 1]
        row.values[static_cast<std::size_t>(c)] =
            (flip ? -tmpl[static_cast<std::size_t>(c)] : tmpl[static_cast<std::size_t>(c)]) *
            magnitude;
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace hdfuse
