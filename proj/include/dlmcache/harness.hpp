// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlmcache/cache.hpp"
#include "dlmcache/decoder.hpp"
#include "dlmcache/model.hpp"

namespace dlmcache {

enum class ReportFormat { kJson, kCsv };
ReportFormat parse_report_format(std::string_view name);

// Each byte becomes one token id; needs vocab_size >= 257.
std::vector<int> byte_tokenize(std::string_view text);

// FNV-1a over the token ids (4 little-endian bytes each).
std::uint64_t token_checksum(std::span<const int> tokens);
std::string checksum_hex(std::uint64_t checksum);

struct ExperimentConfig {
  std::string model_config_path;
  ModelConfig model;  // loaded from model_config_path
  std::vector<int> prompt_tokens;
  std::optional<std::string> prompt_text;
  // Total sequence length; the prompt is cycled or truncated to seq_len - gen_len.
  std::optional<std::size_t> seq_len;
  DecodeConfig decode;
  std::vector<PolicyKind> policies{PolicyKind::kNoCache, PolicyKind::kSparseBidirectional};
  EvictionConfig eviction;
  std::size_t delay_steps = 1;
  std::optional<CacheState> forced_state;
  std::size_t repetitions = 1;
  std::string report_path;
  ReportFormat report_format = ReportFormat::kCsv;
  bool count_ops = false;
  std::size_t jobs = 1;

  // Unknown keys raise ConfigError naming the key. Relative model paths
  // resolve against `base_dir`.
  static ExperimentConfig from_json_string(std::string_view text, const std::string& base_dir = ".");
  static ExperimentConfig from_json_file(const std::string& path);

  void load_model();
  CachePolicy policy(PolicyKind kind) const;
  std::vector<int> resolve_prompt() const;
  // Ties reports to the decode inputs so comparisons can refuse mismatches.
  std::string signature() const;
  void validate() const;
};

struct RunReport {
  std::string policy;
  std::size_t repetition = 0;
  std::size_t tokens_generated = 0;
  double wall_seconds = 0.0;
  double throughput_tps = 0.0;
  std::uint64_t attention_multiply_adds = 0;
  std::uint64_t linear_multiply_adds = 0;
  std::size_t peak_cache_entries = 0;
  std::uint64_t peak_cache_bytes = 0;  // 8-byte reals x d_model per K or V row
  std::vector<std::size_t> eviction_sizes;  // rows per layer, one per block
  std::uint64_t checksum = 0;
  std::string config_signature;
  DecodeReport decode;
};

// One report per (policy x repetition); wall time covers decode() only.
std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, const ModelWeights& weights);
std::vector<RunReport> run_experiment(const ExperimentConfig& cfg);

struct ComparisonRow {
  std::string policy;
  std::size_t runs = 0;
  double mean_tps = 0.0;
  double speedup = 0.0;  // vs the baseline policy's mean_tps
  double mean_multiply_adds = 0.0;
  std::size_t peak_cache_entries = 0;
  std::uint64_t checksum = 0;
  bool checksum_match = false;  // equals the baseline's checksum
  bool repeatable = false;      // identical checksum over repetitions
};

// Per-policy summary without the two-policy requirement. Baseline is
// no_cache when present, otherwise the first policy seen.
std::vector<ComparisonRow> summarize_runs(std::span<const RunReport> reports);
// Needs >= 2 policies run on identical decode inputs (ComparisonError otherwise).
std::vector<ComparisonRow> compare_policies(std::span<const RunReport> reports);

enum class SweepAxis { kRetentionRatio, kKernelSize, kDelaySteps, kSeqLen };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view sweep_axis_name(SweepAxis axis);

struct SweepPoint {
  SweepAxis axis = SweepAxis::kRetentionRatio;
  double value = 0.0;
  std::vector<RunReport> reports;
  std::vector<ComparisonRow> table;
  // Kernel axis only: mean Jaccard distance of retained sets vs kernel 1, per table row.
  std::vector<std::optional<double>> jaccard_vs_k1;
};

ExperimentConfig with_axis_value(const ExperimentConfig& cfg, SweepAxis axis, double value);
std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values);

// Mean over (block, layer) of 1 - |A ∩ B| / |A ∪ B|.
double mean_jaccard_distance(const DecodeReport& a, const DecodeReport& b);

inline constexpr std::string_view kReportCsvHeader =
    "policy,repetition,tokens,wall_seconds,tps,mul_adds,peak_cache_entries,peak_cache_bytes,checksum";

void write_reports_csv(std::ostream& out, std::span<const RunReport> reports, bool header = true);
std::string reports_to_json(std::span<const RunReport> reports);
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);
void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points);
std::string comparison_to_json(std::span<const ComparisonRow> rows);
std::string sweep_to_json(std::span<const SweepPoint> points);

// Appends to `path` by writing existing content plus `reports` to a temporary
// file and renaming it over the original. JSON files hold a single array.
void append_reports(const std::string& path, ReportFormat format, std::span<const RunReport> reports);
// Replaces `path` atomically with `content`.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace dlmcache
