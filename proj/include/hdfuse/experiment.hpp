#pragma once

// Experiment runner: configuration, the train/infer loop over splits, memory
// reports, and the dimension sweep. Reports serialize to JSON (stable field
// order) and CSV; identical config + seed reproduces byte-identical output up
// to the wall-time field.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdfuse/amem.hpp"
#include "hdfuse/datapipe.hpp"
#include "hdfuse/encoder.hpp"
#include "hdfuse/error.hpp"
#include "hdfuse/imstore.hpp"
#include "hdfuse/layout.hpp"
#include "hdfuse/rng.hpp"

namespace hdfuse {

using ordered_json = nlohmann::ordered_json;

enum class Fusion { kEarly, kLate };
enum class LabelTarget { kValence, kArousal };
enum class ScalePolicy { kAuto, kOn, kOff };

struct SmoothingConfig {
  bool enabled = false;
  double window_s = 30.0;
  double step_s = 15.0;
  int factor = 8;
};

struct ExperimentConfig {
  // data source: a feature CSV or the synthetic generator
  std::string csv_path;  // empty -> synthetic
  std::optional<DatasetLayout> layout;  // synth layout / csv schema check
  int synth_segments = 32;
  int synth_rows = 30;
  double synth_noise = 0.15;
  int synth_subjects = 8;

  StrategySpec strategy{Strategy::kRule90, 0};
  Fusion fusion = Fusion::kEarly;
  int dim = 10000;
  int ngram = 3;                        // early fusion
  std::vector<int> ngram_per_modality;  // late fusion; empty -> all 4
  SplitKind split = SplitKind::kLeaveOneSubjectOut;
  double holdout_fraction = 0.2;
  LabelTarget label = LabelTarget::kValence;
  std::optional<double> label_threshold;  // default 0.5 synth, 5.0 csv
  std::uint64_t seed = 1;
  ScalePolicy scale = ScalePolicy::kAuto;
  SmoothingConfig smoothing;
  double sample_period_s = 1.0;
  std::string out_path;

  bool is_synth() const { return csv_path.empty(); }

  double resolved_threshold() const {
    return label_threshold.value_or(is_synth() ? 0.5 : 5.0);
  }

  bool resolved_scaling() const {
    if (scale == ScalePolicy::kAuto) return !is_synth();
    return scale == ScalePolicy::kOn;
  }

  void validate() const {
    if (dim < 64) throw UsageError("dimension must be >= 64, got " + std::to_string(dim));
    if (ngram < 1) throw UsageError("n-gram length must be >= 1");
    for (int n : ngram_per_modality)
      if (n < 1) throw UsageError("per-modality n-gram lengths must be >= 1");
    if (strategy.kind == Strategy::kHybrid && strategy.bank_size != 0 && strategy.bank_size < 3)
      throw UsageError("hybrid bank size must be >= 3");
    if (is_synth()) {
      if (synth_segments < 1 || synth_rows < 1) throw UsageError("synthetic spec needs rows");
      if (synth_noise < 0.0 || synth_noise >= 0.5) throw UsageError("noise_p must lie in [0, 0.5)");
      if (synth_subjects < 1) throw UsageError("synthetic spec needs subjects");
    }
    if (layout) layout->validate();
    if (split == SplitKind::kPerSubjectHoldout &&
        (holdout_fraction <= 0.0 || holdout_fraction >= 1.0))
      throw UsageError("holdout fraction must lie in (0, 1)");
    if (smoothing.enabled && smoothing.window_s < smoothing.step_s)
      throw UsageError("smoothing window must be >= step");
  }
};

struct FoldResult {
  int fold = 0;
  int test_subject = 0;
  long long train_emitted = 0;
  long long test_emitted = 0;
  long long correct = 0;
  double accuracy = 0.0;
};

struct MetricsReport {
  long long stored_vectors = 0;
  long long vector_requests_per_pass = 0;
  long long channels = 0;
  double request_rate = 0.0;
};

struct RunReport {
  ExperimentConfig config;
  DatasetLayout layout;  // the layout actually used
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  MetricsReport metrics;
  double wall_time_s = 0.0;

  ordered_json to_json(bool include_timing = true) const;
  std::string to_csv() const;
};

// ---------------------------------------------------------------------------
// Config (de)serialization helpers
// ---------------------------------------------------------------------------

inline std::string fusion_name(Fusion f) { return f == Fusion::kEarly ? "early" : "late"; }
inline std::string label_name(LabelTarget l) {
  return l == LabelTarget::kValence ? "valence" : "arousal";
}
inline std::string split_name(SplitKind k) {
  return k == SplitKind::kLeaveOneSubjectOut ? "loso" : "holdout";
}
inline std::string scale_name(ScalePolicy s) {
  switch (s) {
    case ScalePolicy::kAuto: return "auto";
    case ScalePolicy::kOn: return "on";
    case ScalePolicy::kOff: return "off";
  }
  return "?";
}

inline DatasetLayout parse_layout(const std::string& text) {
  if (text == "amigos") return DatasetLayout::amigos();
  if (text == "deap") return DatasetLayout::deap();
  DatasetLayout layout;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw UsageError("layout item '" + item + "' must be NAME:CHANNELS");
    int channels = 0;
    try {
      channels = std::stoi(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("layout item '" + item + "' has a non-numeric channel count");
    }
    layout.modalities.push_back({item.substr(0, colon), channels});
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  layout.validate();
  return layout;
}

inline std::string layout_to_string(const DatasetLayout& layout) {
  std::string out;
  for (const auto& m : layout.modalities)
    out += (out.empty() ? "" : ",") + m.name + ":" + std::to_string(m.channels);
  return out;
}

/// Apply one `key = value` pair (config file or CLI override) to a config.
inline void apply_config_kv(ExperimentConfig& cfg, const std::string& key,
                            const std::string& value) {
  const auto parse_i = [&](const std::string& v) {
    try {
      return std::stoi(v);
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': expected integer, got '" + v + "'");
    }
  };
  const auto parse_d = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': expected number, got '" + v + "'");
    }
  };

  if (key == "dataset") {
    if (value == "synth")
      cfg.csv_path.clear();
    else if (value != "csv")
      throw UsageError("dataset must be 'synth' or 'csv'");
  } else if (key == "csv") {
    cfg.csv_path = value;
  } else if (key == "layout") {
    cfg.layout = parse_layout(value);
  } else if (key == "strategy") {
    cfg.strategy.kind = parse_strategy(value);
  } else if (key == "bank") {
    cfg.strategy.bank_size = parse_i(value);
  } else if (key == "fusion") {
    if (value == "early")
      cfg.fusion = Fusion::kEarly;
    else if (value == "late")
      cfg.fusion = Fusion::kLate;
    else
      throw UsageError("fusion must be 'early' or 'late'");
  } else if (key == "dim") {
    cfg.dim = parse_i(value);
  } else if (key == "ngram") {
    cfg.ngram = parse_i(value);
  } else if (key == "ngram_late") {
    cfg.ngram_per_modality.clear();
    std::size_t pos = 0;
    while (pos < value.size()) {
      const auto comma = value.find(',', pos);
      cfg.ngram_per_modality.push_back(
          parse_i(value.substr(pos, comma == std::string::npos ? comma : comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  } else if (key == "split") {
    if (value == "loso")
      cfg.split = SplitKind::kLeaveOneSubjectOut;
    else if (value == "holdout")
      cfg.split = SplitKind::kPerSubjectHoldout;
    else
      throw UsageError("split must be 'loso' or 'holdout'");
  } else if (key == "holdout") {
    cfg.holdout_fraction = parse_d(value);
  } else if (key == "label") {
    if (value == "valence")
      cfg.label = LabelTarget::kValence;
    else if (value == "arousal")
      cfg.label = LabelTarget::kArousal;
    else
      throw UsageError("label must be 'valence' or 'arousal'");
  } else if (key == "threshold") {
    cfg.label_threshold = parse_d(value);
  } else if (key == "seed") {
    try {
      cfg.seed = std::stoull(value);
    } catch (const std::exception&) {
      throw UsageError("config key 'seed': expected integer, got '" + value + "'");
    }
  } else if (key == "scale") {
    if (value == "auto")
      cfg.scale = ScalePolicy::kAuto;
    else if (value == "on")
      cfg.scale = ScalePolicy::kOn;
    else if (value == "off")
      cfg.scale = ScalePolicy::kOff;
    else
      throw UsageError("scale must be 'auto', 'on' or 'off'");
  } else if (key == "synth_segments") {
    cfg.synth_segments = parse_i(value);
  } else if (key == "synth_rows") {
    cfg.synth_rows = parse_i(value);
  } else if (key == "synth_noise") {
    cfg.synth_noise = parse_d(value);
  } else if (key == "synth_subjects") {
    cfg.synth_subjects = parse_i(value);
  } else if (key == "period") {
    cfg.sample_period_s = parse_d(value);
  } else if (key == "smooth") {
    cfg.smoothing.enabled = value == "on";
    if (value != "on" && value != "off") throw UsageError("smooth must be 'on' or 'off'");
  } else if (key == "smooth_window") {
    cfg.smoothing.window_s = parse_d(value);
    cfg.smoothing.enabled = true;
  } else if (key == "smooth_step") {
    cfg.smoothing.step_s = parse_d(value);
    cfg.smoothing.enabled = true;
  } else if (key == "downsample") {
    cfg.smoothing.factor = parse_i(value);
    cfg.smoothing.enabled = true;
  } else if (key == "out") {
    cfg.out_path = value;
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

/// key = value lines, '#' comments, blank lines ignored.
inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_config_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------------------
// The run loop
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> resolved_late_ngrams(const ExperimentConfig& cfg,
                                             const DatasetLayout& layout) {
  const int m = layout.modality_count();
  if (cfg.ngram_per_modality.empty()) return std::vector<int>(static_cast<std::size_t>(m), 4);
  if (static_cast<int>(cfg.ngram_per_modality.size()) == 1)
    return std::vector<int>(static_cast<std::size_t>(m), cfg.ngram_per_modality.front());
  if (static_cast<int>(cfg.ngram_per_modality.size()) != m)
    throw UsageError("late fusion needs one n-gram length per modality (" + std::to_string(m) +
                     "), got " + std::to_string(cfg.ngram_per_modality.size()));
  return cfg.ngram_per_modality;
}

inline FeatureTable load_source(const ExperimentConfig& cfg) {
  if (cfg.is_synth()) {
    SynthSpec spec;
    spec.layout = cfg.layout.value_or(DatasetLayout::amigos());
    spec.num_segments = cfg.synth_segments;
    spec.rows_per_segment = cfg.synth_rows;
    spec.noise_p = cfg.synth_noise;
    spec.num_subjects = cfg.synth_subjects;
    spec.seed = cfg.seed;
    return synth_generate(spec);
  }
  FeatureTable table = load_features(cfg.csv_path, cfg.layout);
  table.sample_period_s = cfg.sample_period_s;
  return table;
}

}  // namespace detail

inline RunReport run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  FeatureTable table = detail::load_source(cfg);
  if (cfg.smoothing.enabled)
    table = smooth_downsample(table, cfg.smoothing.window_s, cfg.smoothing.step_s,
                              cfg.smoothing.factor);
  if (table.rows.empty()) throw DataError("dataset has no rows");

  const DatasetLayout& layout = table.layout;
  const double threshold = cfg.resolved_threshold();
  std::vector<int> labels(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    labels[r] = binarize_labels(
        cfg.label == LabelTarget::kValence ? row.valence_raw : row.arousal_raw, threshold);
  }

  const SplitPlan plan = make_splits(table, cfg.split, cfg.holdout_fraction);
  const Hypervector tiebreak =
      [&] {
        WordRng rng(derive_seed(cfg.seed, SeedStream::kTiebreak));
        return Hypervector::random(cfg.dim, rng);
      }();
  const auto late_ngrams = cfg.fusion == Fusion::kLate
                               ? detail::resolved_late_ngrams(cfg, layout)
                               : std::vector<int>{};

  RunReport report;
  report.config = cfg;
  report.layout = layout;

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    try {
      std::vector<char> in_test(table.rows.size(), 0);
      for (int r : fold.test_rows) in_test[static_cast<std::size_t>(r)] = 1;
      std::vector<char> in_fold(table.rows.size(), 0);
      for (int r : fold.train_rows) in_fold[static_cast<std::size_t>(r)] = 1;
      for (int r : fold.test_rows) in_fold[static_cast<std::size_t>(r)] = 1;

      std::optional<MinMaxScaler> scaler;
      if (cfg.resolved_scaling()) scaler = MinMaxScaler::fit(table, fold.train_rows);

      auto provider = make_provider(cfg.strategy, layout, cfg.dim, cfg.seed);
      NgramState early_state(cfg.ngram);
      std::vector<NgramState> late_states;
      for (int n : late_ngrams) late_states.emplace_back(n);

      AssociativeMemory am(2, cfg.dim);
      std::vector<EncodedSample> test_samples;
      FoldResult result;
      result.fold = static_cast<int>(f);
      result.test_subject = fold.test_subject;

      int prev_subject = -1, prev_segment = -1, prev_label = -1;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (!in_fold[r]) continue;
        const auto& row = table.rows[r];
        const int label = labels[r];
        const bool boundary =
            row.subject_id != prev_subject || row.segment_id != prev_segment || label != prev_label;
        if (boundary) {
          early_state.reset_history();
          for (auto& s : late_states) s.reset_history();
        }
        prev_subject = row.subject_id;
        prev_segment = row.segment_id;
        prev_label = label;

        const std::vector<double> scaled =
            scaler ? scaler->apply_row(row.values, in_test[r] != 0)
                   : row.values;
        const Sample sample{scaled, label, static_cast<int>(r)};
        std::optional<EncodedSample> encoded =
            cfg.fusion == Fusion::kEarly
                ? encode_sample_early(*provider, layout, sample, tiebreak, early_state)
                : encode_sample_late(*provider, layout, sample, tiebreak, late_states);
        if (!encoded) continue;
        if (in_test[r]) {
          test_samples.push_back(std::move(*encoded));
          ++result.test_emitted;
        } else {
          am.add(*encoded);
          ++result.train_emitted;
        }
      }

      am.finalize(tiebreak);
      if (test_samples.empty()) throw DataError("no test emissions");
      for (const auto& s : test_samples)
        if (am.infer(s.vec).label == s.label) ++result.correct;
      result.accuracy = static_cast<double>(result.correct) / result.test_emitted;
      report.folds.push_back(result);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError("fold " + std::to_string(f) + " (subject " +
                      std::to_string(fold.test_subject) + "): " + e.what());
    }
  }

  double sum = 0.0;
  for (const auto& fr : report.folds) sum += fr.accuracy;
  report.mean_accuracy = sum / static_cast<double>(report.folds.size());

  report.metrics.stored_vectors = stored_vector_count(cfg.strategy, layout);
  report.metrics.vector_requests_per_pass = one_pass_vector_requests(cfg.strategy, layout);
  report.metrics.channels = layout.total_channels();
  report.metrics.request_rate = steady_request_rate(cfg.strategy, layout);

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline ordered_json layout_json(const DatasetLayout& layout) {
  ordered_json arr = ordered_json::array();
  for (const auto& m : layout.modalities)
    arr.push_back(ordered_json{{"name", m.name}, {"channels", m.channels}});
  return arr;
}

inline ordered_json RunReport::to_json(bool include_timing) const {
  ordered_json cfg_j;
  cfg_j["dataset"] = config.is_synth() ? "synth" : "csv";
  if (!config.is_synth()) cfg_j["csv_path"] = config.csv_path;
  if (config.is_synth()) {
    cfg_j["synth"] = ordered_json{{"segments", config.synth_segments},
                                  {"rows_per_segment", config.synth_rows},
                                  {"noise_p", config.synth_noise},
                                  {"subjects", config.synth_subjects}};
  }
  cfg_j["layout"] = layout_json(layout);
  cfg_j["strategy"] = strategy_name(config.strategy.kind);
  if (config.strategy.kind == Strategy::kHybrid)
    cfg_j["bank_size"] = resolved_bank_size(config.strategy, layout);
  cfg_j["fusion"] = fusion_name(config.fusion);
  cfg_j["dim"] = config.dim;
  if (config.fusion == Fusion::kEarly)
    cfg_j["ngram"] = config.ngram;
  else
    cfg_j["ngram_per_modality"] = detail::resolved_late_ngrams(config, layout);
  cfg_j["split"] = split_name(config.split);
  if (config.split == SplitKind::kPerSubjectHoldout)
    cfg_j["holdout_fraction"] = config.holdout_fraction;
  cfg_j["label"] = label_name(config.label);
  cfg_j["label_threshold"] = config.resolved_threshold();
  cfg_j["seed"] = config.seed;
  cfg_j["scale"] = config.resolved_scaling() ? "on" : "off";
  if (config.smoothing.enabled) {
    cfg_j["smoothing"] = ordered_json{{"window_s", config.smoothing.window_s},
                                      {"step_s", config.smoothing.step_s},
                                      {"factor", config.smoothing.factor}};
  }

  ordered_json folds_j = ordered_json::array();
  for (const auto& fr : folds) {
    folds_j.push_back(ordered_json{{"fold", fr.fold},
                                   {"test_subject", fr.test_subject},
                                   {"train_emitted", fr.train_emitted},
                                   {"test_emitted", fr.test_emitted},
                                   {"correct", fr.correct},
                                   {"accuracy", fr.accuracy}});
  }

  ordered_json out;
  out["config"] = std::move(cfg_j);
  out["folds"] = std::move(folds_j);
  out["mean_accuracy"] = mean_accuracy;
  out["metrics"] = ordered_json{{"stored_vectors", metrics.stored_vectors},
                                {"vector_requests_per_pass", metrics.vector_requests_per_pass},
                                {"channels", metrics.channels},
                                {"request_rate", metrics.request_rate}};
  if (include_timing) out["wall_time_s"] = wall_time_s;
  return out;
}

inline std::string RunReport::to_csv() const {
  std::string out = "fold,test_subject,train_emitted,test_emitted,correct,accuracy\n";
  for (const auto& fr : folds) {
    out += std::to_string(fr.fold) + "," + std::to_string(fr.test_subject) + "," +
           std::to_string(fr.train_emitted) + "," + std::to_string(fr.test_emitted) + "," +
           std::to_string(fr.correct) + "," + detail::format_double(fr.accuracy) + "\n";
  }
  out += "mean,,,,," + detail::format_double(mean_accuracy) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Memory report
// ---------------------------------------------------------------------------

struct MemReportRow {
  std::string dataset;
  std::string strategy;
  long long stored_vectors = 0;
  long long vector_requests = 0;  // one full pass
  long long channels = 0;
  double request_rate = 0.0;
};

struct MemReport {
  std::vector<MemReportRow> rows;

  std::string to_csv() const {
    std::string out = "dataset,strategy,stored_vectors,vector_requests,channels,request_rate\n";
    for (const auto& r : rows) {
      out += r.dataset + "," + r.strategy + "," + std::to_string(r.stored_vectors) + "," +
             std::to_string(r.vector_requests) + "," + std::to_string(r.channels) + "," +
             detail::format_double(r.request_rate) + "\n";
    }
    return out;
  }

  ordered_json to_json() const {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back(ordered_json{{"dataset", r.dataset},
                                 {"strategy", r.strategy},
                                 {"stored_vectors", r.stored_vectors},
                                 {"vector_requests", r.vector_requests},
                                 {"channels", r.channels},
                                 {"request_rate", r.request_rate}});
    }
    return arr;
  }
};

/// Stored-vector and request-rate accounting per (layout, strategy); pure
/// arithmetic, no data and no RNG.
inline MemReport mem_report(const std::vector<std::pair<std::string, DatasetLayout>>& layouts,
                            const std::vector<StrategySpec>& strategies) {
  MemReport report;
  for (const auto& [name, layout] : layouts) {
    for (const auto& spec : strategies) {
      MemReportRow row;
      row.dataset = name;
      row.strategy = strategy_name(spec.kind);
      if (spec.kind == Strategy::kHybrid)
        row.strategy += "(" + std::to_string(resolved_bank_size(spec, layout)) + ")";
      row.stored_vectors = stored_vector_count(spec, layout);
      row.vector_requests = one_pass_vector_requests(spec, layout);
      row.channels = layout.total_channels();
      row.request_rate = steady_request_rate(spec, layout);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

inline std::vector<StrategySpec> all_strategies() {
  return {{Strategy::kUnoptimized}, {Strategy::kSharedIm},      {Strategy::kSharedFp},
          {Strategy::kCombinatorial}, {Strategy::kRule90},      {Strategy::kHybrid, 0}};
}

// ---------------------------------------------------------------------------
// Dimension sweep
// ---------------------------------------------------------------------------

/// One run per dimension; each dimension gets an independent child seed
/// derived from the experiment seed and the dimension.
inline std::vector<RunReport> sweep_dim(const ExperimentConfig& cfg, const std::vector<int>& dims) {
  if (dims.empty()) throw UsageError("sweep-dim needs at least one dimension");
  for (int d : dims)
    if (d < 64) throw UsageError("dimension must be >= 64, got " + std::to_string(d));
  std::vector<RunReport> reports;
  reports.reserve(dims.size());
  for (int d : dims) {
    ExperimentConfig child = cfg;
    child.dim = d;
    child.seed = derive_dim_seed(cfg.seed, d);
    reports.push_back(run(child));
  }
  return reports;
}

inline std::string sweep_csv(const std::vector<RunReport>& reports) {
  std::string out = "dim,mean_accuracy\n";
  for (const auto& r : reports)
    out += std::to_string(r.config.dim) + "," + detail::format_double(r.mean_accuracy) + "\n";
  return out;
}

}  // namespace hdfuse
