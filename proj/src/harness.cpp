// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlmcache/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dlmcache/errors.hpp"

namespace dlmcache {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const std::set<std::string>& experiment_fields() {
  static const std::set<std::string> fields = {
      "model_config", "prompt_tokens",     "prompt_text", "seq_len",     "total_steps",   "gen_len",
      "block_len",    "unmask_rule",       "rng_seed",    "policies",    "retention_ratio", "kernel_size",
      "head_aggregation", "scoring",       "delay_steps", "force_cache_state", "repetitions", "report_path",
      "report_format", "count_ops",        "jobs"};
  return fields;
}

template <typename T>
T field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("experiment config field '") + key + "' has the wrong type");
  }
}

std::size_t count_field(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string("experiment config field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string read_text(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot read ") + what + " '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json report_to_json(const RunReport& r) {
  return {{"policy", r.policy},
          {"repetition", r.repetition},
          {"tokens", r.tokens_generated},
          {"wall_seconds", r.wall_seconds},
          {"tps", r.throughput_tps},
          {"mul_adds", r.attention_multiply_adds},
          {"linear_mul_adds", r.linear_multiply_adds},
          {"peak_cache_entries", r.peak_cache_entries},
          {"peak_cache_bytes", r.peak_cache_bytes},
          {"eviction_sizes", r.eviction_sizes},
          {"checksum", checksum_hex(r.checksum)},
          {"config_signature", r.config_signature}};
}

json row_to_json(const ComparisonRow& row) {
  return {{"policy", row.policy},
          {"runs", row.runs},
          {"mean_tps", row.mean_tps},
          {"speedup", row.speedup},
          {"mean_mul_adds", row.mean_multiply_adds},
          {"peak_cache_entries", row.peak_cache_entries},
          {"checksum", checksum_hex(row.checksum)},
          {"checksum_match", row.checksum_match},
          {"repeatable", row.repeatable}};
}

RunReport run_one(const ExperimentConfig& cfg, const ModelWeights& weights, std::span<const int> prompt,
                  PolicyKind kind, std::size_t repetition) {
  const CachePolicy policy = cfg.policy(kind);
  const auto start = std::chrono::steady_clock::now();
  DecodeResult result = decode(weights, prompt, cfg.decode, policy, nullptr, cfg.count_ops);
  const auto stop = std::chrono::steady_clock::now();

  RunReport r;
  r.policy = policy.name();
  r.repetition = repetition;
  r.tokens_generated = result.report.tokens_generated;
  r.wall_seconds = std::chrono::duration<double>(stop - start).count();
  r.throughput_tps = r.wall_seconds > 0.0 ? static_cast<double>(r.tokens_generated) / r.wall_seconds : 0.0;
  r.attention_multiply_adds = result.report.attention_multiply_adds;
  r.linear_multiply_adds = result.report.linear_multiply_adds;
  r.peak_cache_entries = result.report.peak_cache_entries;
  r.peak_cache_bytes = static_cast<std::uint64_t>(r.peak_cache_entries) * weights.config.d_model * sizeof(double);
  for (const auto& sizes : result.report.eviction_sizes) r.eviction_sizes.push_back(sizes.empty() ? 0 : sizes[0]);
  r.checksum = token_checksum(result.state.tokens);
  r.config_signature = cfg.signature();
  r.decode = std::move(result.report);
  return r;
}

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw ConfigError("report_format must be 'json' or 'csv', got '" + std::string(name) + "'");
}

std::vector<int> byte_tokenize(std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(static_cast<int>(c));
  return ids;
}

std::uint64_t token_checksum(std::span<const int> tokens) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (int tok : tokens) {
    const auto u = static_cast<std::uint32_t>(tok);
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (u >> shift) & 0xFFu;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

std::string checksum_hex(std::uint64_t checksum) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(checksum));
  return buf;
}

ExperimentConfig ExperimentConfig::from_json_string(std::string_view text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("experiment config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("experiment config: expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!experiment_fields().contains(key)) throw ConfigError("experiment config: unknown key '" + key + "'");
  }

  ExperimentConfig cfg;
  if (!doc.contains("model_config")) throw ConfigError("experiment config: missing field 'model_config'");
  cfg.model_config_path = field<std::string>(doc, "model_config");
  if (fs::path(cfg.model_config_path).is_relative()) {
    cfg.model_config_path = (fs::path(base_dir) / cfg.model_config_path).lexically_normal().string();
  }
  if (doc.contains("prompt_tokens")) cfg.prompt_tokens = field<std::vector<int>>(doc, "prompt_tokens");
  if (doc.contains("prompt_text")) cfg.prompt_text = field<std::string>(doc, "prompt_text");
  if (doc.contains("seq_len")) cfg.seq_len = count_field(doc, "seq_len");
  if (doc.contains("total_steps")) cfg.decode.total_steps = count_field(doc, "total_steps");
  if (doc.contains("gen_len")) cfg.decode.gen_len = count_field(doc, "gen_len");
  if (doc.contains("block_len")) cfg.decode.block_len = count_field(doc, "block_len");
  if (doc.contains("unmask_rule")) cfg.decode.unmask_rule = parse_unmask_rule(field<std::string>(doc, "unmask_rule"));
  if (doc.contains("rng_seed")) cfg.decode.rng_seed = count_field(doc, "rng_seed");
  if (doc.contains("policies")) {
    cfg.policies.clear();
    const auto& p = doc.at("policies");
    if (p.is_string()) {
      cfg.policies.push_back(parse_policy_kind(p.get<std::string>()));
    } else {
      for (const auto& name : field<std::vector<std::string>>(doc, "policies")) {
        cfg.policies.push_back(parse_policy_kind(name));
      }
    }
  }
  if (doc.contains("retention_ratio")) cfg.eviction.retention_ratio = field<double>(doc, "retention_ratio");
  if (doc.contains("kernel_size")) cfg.eviction.kernel_size = count_field(doc, "kernel_size");
  if (doc.contains("head_aggregation") && field<std::string>(doc, "head_aggregation") != "mean_over_heads") {
    throw ConfigError("experiment config field 'head_aggregation' only supports 'mean_over_heads'");
  }
  if (doc.contains("scoring")) cfg.eviction.scoring = parse_scoring_mode(field<std::string>(doc, "scoring"));
  if (doc.contains("delay_steps")) cfg.delay_steps = count_field(doc, "delay_steps");
  if (doc.contains("force_cache_state") && !doc.at("force_cache_state").is_null()) {
    const std::size_t s = count_field(doc, "force_cache_state");
    if (s > 2) throw ConfigError("experiment config field 'force_cache_state' must be 0, 1 or 2");
    cfg.forced_state = static_cast<CacheState>(s);
  }
  if (doc.contains("repetitions")) cfg.repetitions = count_field(doc, "repetitions");
  if (doc.contains("report_path")) cfg.report_path = field<std::string>(doc, "report_path");
  if (doc.contains("report_format")) cfg.report_format = parse_report_format(field<std::string>(doc, "report_format"));
  if (doc.contains("count_ops")) cfg.count_ops = field<bool>(doc, "count_ops");
  if (doc.contains("jobs")) cfg.jobs = count_field(doc, "jobs");
  cfg.load_model();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  const std::string text = read_text(path, "experiment config");
  return from_json_string(text, fs::path(path).parent_path().string().empty()
                                    ? std::string(".")
                                    : fs::path(path).parent_path().string());
}

void ExperimentConfig::load_model() { model = ModelConfig::from_json_file(model_config_path); }

CachePolicy ExperimentConfig::policy(PolicyKind kind) const {
  CachePolicy p;
  p.kind = kind;
  p.eviction = eviction;
  p.delay_steps = delay_steps;
  p.forced_state = forced_state;
  return p;
}

std::vector<int> ExperimentConfig::resolve_prompt() const {
  std::vector<int> base = prompt_text ? byte_tokenize(*prompt_text) : prompt_tokens;
  if (!seq_len) return base;
  if (base.empty()) throw ConfigError("experiment config: prompt is empty");
  const std::size_t want = *seq_len - decode.gen_len;
  std::vector<int> out;
  out.reserve(want);
  for (std::size_t i = 0; i < want; ++i) out.push_back(base[i % base.size()]);
  return out;
}

std::string ExperimentConfig::signature() const {
  json doc = {{"model", json::parse(model.to_json_string())},
              {"prompt_checksum", checksum_hex(token_checksum(resolve_prompt()))},
              {"total_steps", decode.total_steps},
              {"gen_len", decode.gen_len},
              {"block_len", decode.block_len},
              {"unmask_rule", unmask_rule_name(decode.unmask_rule)},
              {"rng_seed", decode.rng_seed}};
  return doc.dump();
}

void ExperimentConfig::validate() const {
  model.validate();
  if (prompt_text && !prompt_tokens.empty()) {
    throw ConfigError("experiment config: give either 'prompt_tokens' or 'prompt_text', not both");
  }
  if (prompt_text && model.vocab_size < 257) {
    throw ConfigError("experiment config field 'prompt_text' needs a byte-level vocabulary (vocab_size >= 257)");
  }
  if (!prompt_text && prompt_tokens.empty()) throw ConfigError("experiment config field 'prompt_tokens' is empty");
  if (prompt_text && prompt_text->empty()) throw ConfigError("experiment config field 'prompt_text' is empty");
  for (int tok : prompt_tokens) {
    if (tok < 0 || tok >= model.mask_token_id()) {
      throw ConfigError("experiment config field 'prompt_tokens' holds invalid id " + std::to_string(tok));
    }
  }
  if (seq_len && *seq_len <= decode.gen_len) throw ConfigError("experiment config field 'seq_len' must exceed gen_len");
  const std::size_t total_len = (seq_len ? *seq_len - decode.gen_len : resolve_prompt().size()) + decode.gen_len;
  if (total_len > model.max_seq_len) {
    throw ConfigError("experiment config field 'seq_len': sequence length " + std::to_string(total_len) +
                      " exceeds model max_seq_len " + std::to_string(model.max_seq_len));
  }
  decode.validate();
  if (policies.empty()) throw ConfigError("experiment config field 'policies' is empty");
  for (auto kind : policies) policy(kind).validate(decode.steps_per_block());
  if (repetitions < 1) throw ConfigError("experiment config field 'repetitions' must be >= 1");
  if (jobs < 1) throw ConfigError("experiment config field 'jobs' must be >= 1");
}

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, const ModelWeights& weights) {
  cfg.validate();
  const std::vector<int> prompt = cfg.resolve_prompt();
  struct Job {
    PolicyKind kind;
    std::size_t repetition;
  };
  std::vector<Job> jobs;
  for (auto kind : cfg.policies) {
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) jobs.push_back({kind, rep});
  }
  std::vector<RunReport> reports(jobs.size());
  const std::size_t workers = std::min(cfg.jobs, jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      try {
        reports[i] = run_one(cfg, weights, prompt, jobs[i].kind, jobs[i].repetition);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw Error(std::string(policy_name(jobs[i].kind)) + ": " + e.what());
      }
    }
    return reports;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        reports[i] = run_one(cfg, weights, prompt, jobs[i].kind, jobs[i].repetition);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return reports;
}

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, init_weights(cfg.model));
}

std::vector<ComparisonRow> summarize_runs(std::span<const RunReport> reports) {
  std::vector<ComparisonRow> rows;
  std::map<std::string, std::size_t> index;
  std::map<std::string, double> tps_sum, madd_sum;
  for (const auto& r : reports) {
    auto [it, inserted] = index.try_emplace(r.policy, rows.size());
    if (inserted) {
      ComparisonRow row;
      row.policy = r.policy;
      row.checksum = r.checksum;
      row.repeatable = true;
      rows.push_back(row);
    }
    ComparisonRow& row = rows[it->second];
    ++row.runs;
    tps_sum[r.policy] += r.throughput_tps;
    madd_sum[r.policy] += static_cast<double>(r.attention_multiply_adds);
    row.peak_cache_entries = std::max(row.peak_cache_entries, r.peak_cache_entries);
    if (r.checksum != row.checksum) row.repeatable = false;
  }
  if (rows.empty()) return rows;
  for (auto& row : rows) {
    row.mean_tps = tps_sum[row.policy] / static_cast<double>(row.runs);
    row.mean_multiply_adds = madd_sum[row.policy] / static_cast<double>(row.runs);
  }
  const std::string baseline_name = index.contains("no_cache") ? "no_cache" : rows.front().policy;
  const ComparisonRow baseline = rows[index[baseline_name]];
  for (auto& row : rows) {
    row.speedup = row.policy == baseline_name ? 1.0
                  : baseline.mean_tps > 0.0   ? row.mean_tps / baseline.mean_tps
                                              : 0.0;
    row.checksum_match = row.checksum == baseline.checksum;
  }
  return rows;
}

std::vector<ComparisonRow> compare_policies(std::span<const RunReport> reports) {
  std::set<std::string> policies;
  for (const auto& r : reports) {
    policies.insert(r.policy);
    if (r.config_signature != reports.front().config_signature) {
      throw ComparisonError("compare_policies: reports come from different decode configurations");
    }
  }
  if (policies.size() < 2) throw ComparisonError("compare_policies: need at least two policies");
  return summarize_runs(reports);
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "retention_ratio") return SweepAxis::kRetentionRatio;
  if (name == "kernel_size") return SweepAxis::kKernelSize;
  if (name == "delay_steps") return SweepAxis::kDelaySteps;
  if (name == "seq_len") return SweepAxis::kSeqLen;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

std::string_view sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRetentionRatio: return "retention_ratio";
    case SweepAxis::kKernelSize: return "kernel_size";
    case SweepAxis::kDelaySteps: return "delay_steps";
    case SweepAxis::kSeqLen: return "seq_len";
  }
  return "unknown";
}

ExperimentConfig with_axis_value(const ExperimentConfig& cfg, SweepAxis axis, double value) {
  ExperimentConfig out = cfg;
  auto as_count = [&](const char* name) {
    if (value < 0.0 || value != std::floor(value)) {
      throw ConfigError(std::string("sweep axis ") + name + " needs non-negative integer values");
    }
    return static_cast<std::size_t>(value);
  };
  switch (axis) {
    case SweepAxis::kRetentionRatio: out.eviction.retention_ratio = value; break;
    case SweepAxis::kKernelSize: out.eviction.kernel_size = as_count("kernel_size"); break;
    case SweepAxis::kDelaySteps: out.delay_steps = as_count("delay_steps"); break;
    case SweepAxis::kSeqLen: out.seq_len = as_count("seq_len"); break;
  }
  return out;
}

double mean_jaccard_distance(const DecodeReport& a, const DecodeReport& b) {
  if (a.retained_indices.size() != b.retained_indices.size()) {
    throw ComparisonError("jaccard: runs wrote caches for different block counts");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t blk = 0; blk < a.retained_indices.size(); ++blk) {
    for (std::size_t l = 0; l < a.retained_indices[blk].size(); ++l) {
      const auto& x = a.retained_indices[blk][l];
      const auto& y = b.retained_indices[blk].at(l);
      std::vector<std::size_t> inter, uni;
      std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(inter));
      std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(uni));
      total += uni.empty() ? 0.0 : 1.0 - static_cast<double>(inter.size()) / static_cast<double>(uni.size());
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values) {
  if (values.empty()) throw ConfigError("sweep needs at least one axis value");
  const ModelWeights weights = init_weights(cfg.model);

  std::vector<RunReport> kernel_reference;
  if (axis == SweepAxis::kKernelSize) {
    ExperimentConfig ref = with_axis_value(cfg, axis, 1.0);
    ref.repetitions = 1;
    kernel_reference = run_experiment(ref, weights);
  }

  std::vector<SweepPoint> points;
  for (double value : values) {
    SweepPoint point;
    point.axis = axis;
    point.value = value;
    point.reports = run_experiment(with_axis_value(cfg, axis, value), weights);
    point.table = summarize_runs(point.reports);
    for (const auto& row : point.table) {
      std::optional<double> distance;
      if (axis == SweepAxis::kKernelSize) {
        auto mine = std::find_if(point.reports.begin(), point.reports.end(),
                                 [&](const RunReport& r) { return r.policy == row.policy; });
        auto ref = std::find_if(kernel_reference.begin(), kernel_reference.end(),
                                [&](const RunReport& r) { return r.policy == row.policy; });
        if (mine != point.reports.end() && ref != kernel_reference.end() && !ref->decode.retained_indices.empty()) {
          distance = mean_jaccard_distance(mine->decode, ref->decode);
        }
      }
      point.jaccard_vs_k1.push_back(distance);
    }
    points.push_back(std::move(point));
  }
  return points;
}

void write_reports_csv(std::ostream& out, std::span<const RunReport> reports, bool header) {
  if (header) out << kReportCsvHeader << '\n';
  for (const auto& r : reports) {
    out << r.policy << ',' << r.repetition << ',' << r.tokens_generated << ',' << csv_double(r.wall_seconds) << ','
        << csv_double(r.throughput_tps) << ',' << r.attention_multiply_adds << ',' << r.peak_cache_entries << ','
        << r.peak_cache_bytes << ',' << checksum_hex(r.checksum) << '\n';
  }
}

std::string reports_to_json(std::span<const RunReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr.dump(2);
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << "policy,runs,mean_tps,speedup,mean_mul_adds,peak_cache_entries,checksum,checksum_match,repeatable\n";
  for (const auto& row : rows) {
    out << row.policy << ',' << row.runs << ',' << csv_double(row.mean_tps) << ',' << csv_double(row.speedup) << ','
        << csv_double(row.mean_multiply_adds) << ',' << row.peak_cache_entries << ',' << checksum_hex(row.checksum)
        << ',' << (row.checksum_match ? "true" : "false") << ',' << (row.repeatable ? "true" : "false") << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points) {
  out << "axis,value,policy,runs,mean_tps,speedup,mean_mul_adds,peak_cache_entries,checksum,checksum_match,"
         "jaccard_vs_k1\n";
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.table.size(); ++i) {
      const auto& row = p.table[i];
      out << sweep_axis_name(p.axis) << ',' << csv_double(p.value) << ',' << row.policy << ',' << row.runs << ','
          << csv_double(row.mean_tps) << ',' << csv_double(row.speedup) << ',' << csv_double(row.mean_multiply_adds)
          << ',' << row.peak_cache_entries << ',' << checksum_hex(row.checksum) << ','
          << (row.checksum_match ? "true" : "false") << ',';
      if (p.jaccard_vs_k1[i]) out << csv_double(*p.jaccard_vs_k1[i]);
      out << '\n';
    }
  }
}

std::string comparison_to_json(std::span<const ComparisonRow> rows) {
  json arr = json::array();
  for (const auto& row : rows) arr.push_back(row_to_json(row));
  return arr.dump(2);
}

std::string sweep_to_json(std::span<const SweepPoint> points) {
  json doc = json::array();
  for (const auto& p : points) {
    json rows = json::array();
    for (std::size_t i = 0; i < p.table.size(); ++i) {
      json entry = row_to_json(p.table[i]);
      if (p.jaccard_vs_k1[i]) entry["jaccard_vs_k1"] = *p.jaccard_vs_k1[i];
      rows.push_back(std::move(entry));
    }
    json reports = json::array();
    for (const auto& r : p.reports) reports.push_back(report_to_json(r));
    doc.push_back({{"axis", sweep_axis_name(p.axis)}, {"value", p.value}, {"table", rows}, {"reports", reports}});
  }
  return doc.dump(2);
}

void write_file_atomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void append_reports(const std::string& path, ReportFormat format, std::span<const RunReport> reports) {
  static std::mutex write_mutex;
  std::lock_guard lock(write_mutex);
  const bool exists = fs::exists(path) && fs::file_size(path) > 0;
  std::ostringstream content;
  if (format == ReportFormat::kCsv) {
    if (exists) content << read_text(path, "report");
    write_reports_csv(content, reports, !exists);
  } else {
    json arr = json::array();
    if (exists) {
      try {
        arr = json::parse(read_text(path, "report"));
      } catch (const json::parse_error&) {
        throw Error("existing report '" + path + "' is not valid JSON");
      }
      if (!arr.is_array()) throw Error("existing report '" + path + "' is not a JSON array");
    }
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    content << arr.dump(2) << '\n';
  }
  write_file_atomic(path, content.str());
}

}  // namespace dlmcache
