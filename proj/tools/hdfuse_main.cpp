// hdfuse command-line runner.
//
// Subcommands:
//   run         train + infer over splits, emit a JSON/CSV report
//   mem-report  stored-vector and request-rate table per layout x strategy
//   sweep-dim   rerun the experiment across hypervector dimensions
//   gen-synth   write a synthetic feature CSV
//
// Exit codes: 0 success, 1 validation/usage error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hdfuse/hdfuse.hpp"

namespace {

using hdfuse::ExperimentConfig;

struct KvOverrides {
  std::vector<std::pair<std::string, std::string>> kvs;

  void bind_flag(CLI::App* app, const std::string& flag, const std::string& key,
                 const std::string& description) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { kvs.emplace_back(key, v); }, description);
  }
};

void add_experiment_flags(CLI::App* app, std::string& config_path, KvOverrides& overrides) {
  app->add_option("--config", config_path, "key = value config file; flags override it");
  overrides.bind_flag(app, "--seed", "seed", "64-bit experiment seed");
  overrides.bind_flag(app, "--dim", "dim", "hypervector dimension (>= 64)");
  overrides.bind_flag(app, "--strategy", "strategy",
                      "unoptimized|shared_im|shared_fp|combinatorial|rule90|hybrid");
  overrides.bind_flag(app, "--bank", "bank", "hybrid vector bank size (default 2m+1)");
  overrides.bind_flag(app, "--fusion", "fusion", "early|late");
  overrides.bind_flag(app, "--ngram", "ngram", "temporal n-gram length (early fusion)");
  overrides.bind_flag(app, "--ngram-late", "ngram_late",
                      "per-modality n-gram lengths for late fusion, e.g. 4,4,4");
  overrides.bind_flag(app, "--label", "label", "valence|arousal");
  overrides.bind_flag(app, "--threshold", "threshold", "label binarization threshold");
  overrides.bind_flag(app, "--split", "split", "loso|holdout");
  overrides.bind_flag(app, "--holdout", "holdout", "per-subject holdout fraction");
  overrides.bind_flag(app, "--csv", "csv", "feature CSV path (omit for synthetic data)");
  overrides.bind_flag(app, "--layout", "layout", "amigos|deap|NAME:N,NAME:N,...");
  overrides.bind_flag(app, "--synth-segments", "synth_segments", "synthetic segment count");
  overrides.bind_flag(app, "--synth-rows", "synth_rows", "rows per synthetic segment");
  overrides.bind_flag(app, "--synth-noise", "synth_noise", "synthetic sign-flip probability");
  overrides.bind_flag(app, "--synth-subjects", "synth_subjects", "synthetic subject count");
  overrides.bind_flag(app, "--scale", "scale", "min-max scaling: auto|on|off");
  overrides.bind_flag(app, "--period", "period", "seconds per CSV row");
  overrides.bind_flag(app, "--smooth-window", "smooth_window", "moving-average window (s)");
  overrides.bind_flag(app, "--smooth-step", "smooth_step", "moving-average step (s)");
  overrides.bind_flag(app, "--downsample", "downsample", "keep every k-th smoothed row");
  overrides.bind_flag(app, "--out", "out", "write the report here (plus CSV alongside)");
}

ExperimentConfig build_config(const std::string& config_path, const KvOverrides& overrides) {
  ExperimentConfig cfg;
  if (!config_path.empty()) hdfuse::load_config_file(cfg, config_path);
  for (const auto& [key, value] : overrides.kvs) hdfuse::apply_config_kv(cfg, key, value);
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hdfuse::DataError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw hdfuse::DataError("write failed for '" + path + "'");
}

std::string csv_sibling(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".csv");
  return p.string();
}

void emit_report(const std::string& out_path, const std::string& format,
                 const std::string& json_text, const std::string& csv_text) {
  if (!out_path.empty()) {
    write_file(out_path, json_text);
    write_file(csv_sibling(out_path), csv_text);
    std::cerr << "wrote " << out_path << " and " << csv_sibling(out_path) << "\n";
  } else {
    std::cout << (format == "csv" ? csv_text : json_text);
  }
}

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      dims.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw hdfuse::UsageError("--dims item '" + item + "' is not an integer");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return dims;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"hyperdimensional-computing engine for multimodal emotion recognition"};
  app.require_subcommand(1);

  // --- run ---
  auto* run_cmd = app.add_subcommand("run", "train and evaluate one configuration");
  std::string run_config;
  KvOverrides run_overrides;
  std::string run_format = "json";
  add_experiment_flags(run_cmd, run_config, run_overrides);
  run_cmd->add_option("--format", run_format, "stdout format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  // --- mem-report ---
  auto* mem_cmd = app.add_subcommand("mem-report", "memory accounting per layout and strategy");
  std::vector<std::string> mem_datasets;
  std::vector<std::string> mem_strategies;
  int mem_bank = 0;
  std::string mem_format = "csv";
  std::string mem_out;
  mem_cmd->add_option("--dataset", mem_datasets,
                      "amigos|deap|name=NAME:N,... (default: amigos and deap)");
  mem_cmd->add_option("--strategy", mem_strategies, "strategies to include (default: all six)");
  mem_cmd->add_option("--bank", mem_bank, "hybrid bank size (default 2m+1 per layout)");
  mem_cmd->add_option("--format", mem_format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  mem_cmd->add_option("--out", mem_out, "write the table here");

  // --- sweep-dim ---
  auto* sweep_cmd = app.add_subcommand("sweep-dim", "rerun across hypervector dimensions");
  std::string sweep_config;
  KvOverrides sweep_overrides;
  std::string sweep_dims_text;
  std::string sweep_format = "csv";
  add_experiment_flags(sweep_cmd, sweep_config, sweep_overrides);
  sweep_cmd->add_option("--dims", sweep_dims_text, "comma-separated dimensions")->required();
  sweep_cmd->add_option("--format", sweep_format, "stdout format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  // --- gen-synth ---
  auto* gen_cmd = app.add_subcommand("gen-synth", "write a synthetic feature CSV");
  std::string gen_layout = "amigos";
  hdfuse::SynthSpec gen_spec;
  std::string gen_out;
  gen_cmd->add_option("--layout", gen_layout, "amigos|deap|NAME:N,NAME:N,...");
  gen_cmd->add_option("--segments", gen_spec.num_segments, "segment count");
  gen_cmd->add_option("--rows", gen_spec.rows_per_segment, "rows per segment");
  gen_cmd->add_option("--noise", gen_spec.noise_p, "sign-flip probability");
  gen_cmd->add_option("--subjects", gen_spec.num_subjects, "subject count");
  gen_cmd->add_option("--seed", gen_spec.seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (run_cmd->parsed()) {
    auto cfg = build_config(run_config, run_overrides);
    const auto report = hdfuse::run(cfg);
    emit_report(cfg.out_path, run_format, report.to_json().dump(2) + "\n", report.to_csv());
    return 0;
  }

  if (mem_cmd->parsed()) {
    std::vector<std::pair<std::string, hdfuse::DatasetLayout>> layouts;
    if (mem_datasets.empty()) mem_datasets = {"amigos", "deap"};
    for (const auto& d : mem_datasets) {
      const auto eq = d.find('=');
      if (eq == std::string::npos)
        layouts.emplace_back(d, hdfuse::parse_layout(d));
      else
        layouts.emplace_back(d.substr(0, eq), hdfuse::parse_layout(d.substr(eq + 1)));
    }
    std::vector<hdfuse::StrategySpec> specs;
    if (mem_strategies.empty()) {
      specs = hdfuse::all_strategies();
      if (mem_bank > 0)
        for (auto& s : specs)
          if (s.kind == hdfuse::Strategy::kHybrid) s.bank_size = mem_bank;
    } else {
      for (const auto& s : mem_strategies) specs.push_back({hdfuse::parse_strategy(s), mem_bank});
    }
    const auto report = hdfuse::mem_report(layouts, specs);
    const std::string json_text = report.to_json().dump(2) + "\n";
    const std::string csv_text = report.to_csv();
    if (!mem_out.empty()) {
      write_file(mem_out, mem_format == "csv" ? csv_text : json_text);
      std::cerr << "wrote " << mem_out << "\n";
    } else {
      std::cout << (mem_format == "csv" ? csv_text : json_text);
    }
    return 0;
  }

  if (sweep_cmd->parsed()) {
    auto cfg = build_config(sweep_config, sweep_overrides);
    const auto dims = parse_dims(sweep_dims_text);
    const auto reports = hdfuse::sweep_dim(cfg, dims);
    hdfuse::ordered_json arr = hdfuse::ordered_json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    emit_report(cfg.out_path, sweep_format, arr.dump(2) + "\n", hdfuse::sweep_csv(reports));
    return 0;
  }

  if (gen_cmd->parsed()) {
    gen_spec.layout = hdfuse::parse_layout(gen_layout);
    const auto table = hdfuse::synth_generate(gen_spec);
    hdfuse::save_features(table, gen_out);
    std::cerr << "wrote " << gen_out << " (" << table.rows.size() << " rows, "
              << table.layout.total_channels() << " channels)\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const hdfuse::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const hdfuse::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hdfuse::TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
