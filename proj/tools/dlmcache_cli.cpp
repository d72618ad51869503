// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: run / sweep / trace.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dlmcache/analysis.hpp"
#include "dlmcache/errors.hpp"
#include "dlmcache/harness.hpp"

namespace {

using namespace dlmcache;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::string> policy;
  std::optional<double> retention_ratio;
  std::optional<std::size_t> kernel_size;
  std::optional<std::size_t> delay;
  std::optional<std::size_t> block_len;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> gen_len;
  std::optional<std::size_t> seq_len;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> report;
  std::optional<std::string> format;
  bool count_ops = false;
  std::optional<std::size_t> jobs;
};

void add_override_flags(CLI::App& cmd, Overrides& o, bool with_steps) {
  cmd.add_option("--policy", o.policy, "Comma-separated policies (no_cache,full_cache,prefix_sparse,sparse_bidirectional)");
  cmd.add_option("--retention-ratio", o.retention_ratio, "Retention ratio r in [0,1]");
  cmd.add_option("--kernel-size", o.kernel_size, "Odd max-pooling kernel size");
  cmd.add_option("--delay", o.delay, "Cache write delay in steps");
  cmd.add_option("--block-len", o.block_len, "Decoding block length");
  if (with_steps) cmd.add_option("--steps", o.steps, "Total decoding steps");
  cmd.add_option("--gen-len", o.gen_len, "Generated tokens");
  cmd.add_option("--seq-len", o.seq_len, "Total sequence length (prompt is cycled to fit)");
  cmd.add_option("--seed", o.seed, "Decode RNG seed");
  cmd.add_option("--report", o.report, "Report output path");
  cmd.add_option("--format", o.format, "Report format: json or csv");
  cmd.add_flag("--count-ops", o.count_ops, "Count multiply-adds");
  cmd.add_option("--jobs", o.jobs, "Worker threads for independent runs");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> parse_numbers(const std::string& text, const char* what) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(static_cast<T>(std::stod(item, &used)));
      } else {
        out.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("invalid value '") + item + "' in " + what);
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

ExperimentConfig load_config(const std::string& path, const Overrides& o) {
  ExperimentConfig cfg = ExperimentConfig::from_json_file(path);
  if (o.policy) {
    cfg.policies.clear();
    for (const auto& name : split_list(*o.policy)) cfg.policies.push_back(parse_policy_kind(name));
  }
  if (o.retention_ratio) cfg.eviction.retention_ratio = *o.retention_ratio;
  if (o.kernel_size) cfg.eviction.kernel_size = *o.kernel_size;
  if (o.delay) cfg.delay_steps = *o.delay;
  if (o.block_len) cfg.decode.block_len = *o.block_len;
  if (o.steps) cfg.decode.total_steps = *o.steps;
  if (o.gen_len) cfg.decode.gen_len = *o.gen_len;
  if (o.seq_len) cfg.seq_len = *o.seq_len;
  if (o.seed) cfg.decode.rng_seed = *o.seed;
  if (o.report) cfg.report_path = *o.report;
  if (o.format) cfg.report_format = parse_report_format(*o.format);
  if (o.count_ops) cfg.count_ops = true;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& config_path, const Overrides& o) {
  const ExperimentConfig cfg = load_config(config_path, o);
  const auto reports = run_experiment(cfg);
  if (!cfg.report_path.empty()) append_reports(cfg.report_path, cfg.report_format, reports);
  write_reports_csv(std::cout, reports);
  std::set<std::string> names;
  for (const auto& r : reports) names.insert(r.policy);
  if (names.size() >= 2) {
    std::cout << '\n';
    const auto table = compare_policies(reports);
    write_comparison_csv(std::cout, table);
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const Overrides& o, const std::string& axis_name,
              const std::string& values_text) {
  const ExperimentConfig cfg = load_config(config_path, o);
  const SweepAxis axis = parse_sweep_axis(axis_name);
  const auto values = parse_numbers<double>(values_text, "--values");
  for (double v : values) with_axis_value(cfg, axis, v).validate();
  const auto points = sweep(cfg, axis, values);

  std::ostringstream table;
  write_sweep_csv(table, points);
  if (!cfg.report_path.empty()) {
    if (cfg.report_format == ReportFormat::kCsv) {
      write_file_atomic(cfg.report_path, table.str());
    } else {
      write_file_atomic(cfg.report_path, sweep_to_json(points) + "\n");
    }
  }
  std::cout << table.str();
  return 0;
}

int cmd_trace(const std::string& config_path, const Overrides& o, const std::string& layers_text,
              const std::string& steps_text, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path, o);
  const ModelWeights weights = init_weights(cfg.model);
  const auto prompt = cfg.resolve_prompt();
  const CachePolicy policy = cfg.policy(cfg.policies.front());
  const CachePolicy uncached = cfg.policy(PolicyKind::kNoCache);

  TraceRequest request;
  request.layers = parse_numbers<std::size_t>(layers_text, "--layers");
  request.steps = parse_numbers<std::size_t>(steps_text, "--steps");
  const auto traces = capture_attention(weights, prompt, cfg.decode, policy, request);
  const auto drift = kv_drift(weights, prompt, cfg.decode, uncached);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::ostringstream attn, mass, drift_csv, overlap;
  write_attention_csv(attn, traces);
  write_top_mass_csv(mass, traces, cfg.eviction.retention_ratio);
  write_kv_drift_csv(drift_csv, drift);
  overlap << "layer,block,step_a,step_b,overlap\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (std::size_t j = i + 1; j < traces.size(); ++j) {
      const auto& a = traces[i];
      const auto& b = traces[j];
      if (a.layer != b.layer || a.block_index != b.block_index) continue;
      overlap << a.layer << ',' << a.block_index << ',' << a.step << ',' << b.step << ','
              << saliency_overlap(a, b, weights.config.n_heads, cfg.eviction) << '\n';
    }
  }
  write_file_atomic((dir / "attention_trace.csv").string(), attn.str());
  write_file_atomic((dir / "attention_top_mass.csv").string(), mass.str());
  write_file_atomic((dir / "kv_drift.csv").string(), drift_csv.str());
  write_file_atomic((dir / "saliency_overlap.csv").string(), overlap.str());
  std::cout << "wrote " << traces.size() << " traces and " << drift.size() << " drift points to " << out_dir << '\n';
  std::cout << overlap.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-wise diffusion decoding with sparse KV caches"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, trace_o;
  std::string run_config, sweep_config, trace_config;
  std::string axis, values, layers, steps, out_dir = ".";

  auto* run = app.add_subcommand("run", "Decode under each configured policy and report");
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  add_override_flags(*run, run_o, true);

  auto* sw = app.add_subcommand("sweep", "Repeat the experiment along one ablation axis");
  sw->add_option("--config", sweep_config, "Experiment config (JSON)")->required();
  sw->add_option("--axis", axis, "retention_ratio | kernel_size | delay_steps | seq_len")->required();
  sw->add_option("--values", values, "Comma-separated axis values")->required();
  add_override_flags(*sw, sweep_o, true);

  auto* tr = app.add_subcommand("trace", "Capture attention maps, saliency overlap and KV drift");
  tr->add_option("--config", trace_config, "Experiment config (JSON)")->required();
  tr->add_option("--layers", layers, "Comma-separated layer ids")->required();
  tr->add_option("--steps", steps, "Comma-separated global step indices")->required();
  tr->add_option("--out-dir", out_dir, "Directory for the CSV outputs");
  add_override_flags(*tr, trace_o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_config, run_o);
    if (*sw) return cmd_sweep(sweep_config, sweep_o, axis, values);
    if (*tr) return cmd_trace(trace_config, trace_o, layers, steps, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
