// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlmcache/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include "dlmcache/errors.hpp"

namespace dlmcache {
namespace {

class TraceRecorder : public DecodeObserver {
 public:
  explicit TraceRecorder(const TraceRequest& request)
      : layers_(request.layers.begin(), request.layers.end()),
        steps_(request.steps.begin(), request.steps.end()) {}

  ForwardOptions forward_options(const StepContext& ctx) override {
    ForwardOptions opts;
    if (steps_.contains(ctx.global_step)) {
      opts.capture_attention = true;
      opts.capture_qkv = true;
    }
    return opts;
  }

  void on_forward(const StepContext& ctx, const ForwardResult& fwd) override {
    if (!steps_.contains(ctx.global_step)) return;
    const std::size_t o = ctx.block.offset, b = ctx.block.length;
    for (std::size_t layer : layers_) {
      AttentionTrace t;
      t.layer = layer;
      t.step = ctx.global_step;
      t.block_index = ctx.block.block_index;
      t.block_offset = o;
      t.block_len = b;
      t.weights = fwd.attention.at(layer).slice_rows(o, o + b);
      t.block_queries = fwd.layers.at(layer).q.slice_rows(o, o + b);
      t.keys = fwd.layers.at(layer).k;
      traces.push_back(std::move(t));
    }
  }

  std::vector<AttentionTrace> traces;

 private:
  std::set<std::size_t> layers_;
  std::set<std::size_t> steps_;
};

Matrix outside_rows(const Matrix& m, std::size_t offset, std::size_t block_len) {
  return m.slice_rows(0, offset).vconcat(m.slice_rows(offset + block_len, m.rows()));
}

double diff_norm(const Matrix& a, const Matrix& b) {
  double sum = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

class DriftRecorder : public DecodeObserver {
 public:
  ForwardOptions forward_options(const StepContext&) override {
    ForwardOptions opts;
    opts.capture_qkv = true;
    return opts;
  }

  void on_forward(const StepContext& ctx, const ForwardResult& fwd) override {
    const std::size_t o = ctx.block.offset, b = ctx.block.length;
    std::vector<std::pair<Matrix, Matrix>> current;
    current.reserve(fwd.layers.size());
    for (const auto& qkv : fwd.layers) current.emplace_back(outside_rows(qkv.k, o, b), outside_rows(qkv.v, o, b));
    if (ctx.block.step_in_block > 0 && previous_block_ == ctx.block.block_index) {
      double total = 0.0;
      for (std::size_t l = 0; l < current.size(); ++l) {
        total += diff_norm(current[l].first, previous_[l].first) + diff_norm(current[l].second, previous_[l].second);
      }
      series.push_back({ctx.block.block_index, ctx.block.step_in_block - 1, total});
    }
    previous_ = std::move(current);
    previous_block_ = ctx.block.block_index;
  }

  KvDriftSeries series;

 private:
  std::vector<std::pair<Matrix, Matrix>> previous_;
  std::size_t previous_block_ = static_cast<std::size_t>(-1);
};

}  // namespace

CacheState planned_state(const CachePolicy& policy, const DecodeConfig& cfg, std::size_t global_step) {
  if (policy.kind == PolicyKind::kNoCache) return CacheState::kFull;
  if (policy.forced_state) return *policy.forced_state;
  const std::size_t spb = cfg.steps_per_block();
  return assign_cache_state(spb == 0 ? 0 : global_step % spb, policy.delay_steps);
}

std::vector<AttentionTrace> capture_attention(const ModelWeights& weights, std::span<const int> prompt,
                                              const DecodeConfig& cfg, const CachePolicy& policy,
                                              const TraceRequest& request) {
  cfg.validate();
  const std::size_t total = cfg.gen_len == 0 ? 0 : cfg.total_steps;
  for (std::size_t layer : request.layers) {
    if (layer >= weights.config.n_layers) throw InputError("trace layer " + std::to_string(layer) + " out of range");
  }
  for (std::size_t step : request.steps) {
    if (step >= total) throw InputError("trace step " + std::to_string(step) + " out of range");
    if (planned_state(policy, cfg, step) == CacheState::kReuse) {
      throw TraceUnavailableError("step " + std::to_string(step) +
                                  " runs cached attention; full attention rows are not computed");
    }
  }
  TraceRecorder recorder(request);
  decode(weights, prompt, cfg, policy, &recorder, false);
  return std::move(recorder.traces);
}

std::vector<double> top_mass(const AttentionTrace& trace, double retention_ratio) {
  const std::size_t keys = trace.weights.cols();
  const auto take = std::min(keys, static_cast<std::size_t>(std::ceil(retention_ratio * static_cast<double>(keys) - 1e-9)));
  std::vector<double> out;
  out.reserve(trace.weights.rows());
  std::vector<double> row;
  for (std::size_t r = 0; r < trace.weights.rows(); ++r) {
    auto src = trace.weights.row(r);
    row.assign(src.begin(), src.end());
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(take), row.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += row[i];
    out.push_back(sum);
  }
  return out;
}

double overlap_fraction(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw InputError("overlap_fraction: index sets differ in size");
  if (a.empty()) throw InputError("overlap_fraction: empty index sets");
  const std::set<std::size_t> sa(a.begin(), a.end());
  std::size_t shared = 0;
  for (std::size_t v : std::set<std::size_t>(b.begin(), b.end())) shared += sa.contains(v) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

double saliency_overlap(const AttentionTrace& a, const AttentionTrace& b, std::size_t n_heads,
                        const EvictionConfig& cfg) {
  if (a.layer != b.layer) throw InputError("saliency_overlap: traces come from different layers");
  if (a.block_index != b.block_index || a.block_offset != b.block_offset) {
    throw InputError("saliency_overlap: traces come from different blocks");
  }
  const LayerCache ca = evict_bidirectional(a.layer, a.block_queries, a.keys, a.keys, a.block_offset, a.block_len,
                                            n_heads, cfg);
  const LayerCache cb = evict_bidirectional(b.layer, b.block_queries, b.keys, b.keys, b.block_offset, b.block_len,
                                            n_heads, cfg);
  return overlap_fraction(ca.source_indices, cb.source_indices);
}

KvDriftSeries kv_drift(const ModelWeights& weights, std::span<const int> prompt, const DecodeConfig& cfg,
                       const CachePolicy& policy) {
  cfg.validate();
  const bool full_every_step = policy.kind == PolicyKind::kNoCache ||
                               (policy.forced_state && *policy.forced_state == CacheState::kFull);
  if (!full_every_step) {
    throw TraceUnavailableError("kv_drift needs full K/V at every step; run it with the no_cache policy");
  }
  DriftRecorder recorder;
  decode(weights, prompt, cfg, policy, &recorder, false);
  return std::move(recorder.series);
}

void write_attention_csv(std::ostream& out, std::span<const AttentionTrace> traces) {
  out << "layer,step,query_pos,key_pos,weight\n";
  out.precision(17);
  for (const auto& t : traces) {
    for (std::size_t r = 0; r < t.weights.rows(); ++r) {
      auto row = t.weights.row(r);
      for (std::size_t k = 0; k < row.size(); ++k) {
        out << t.layer << ',' << t.step << ',' << t.block_offset + r << ',' << k << ',' << row[k] << '\n';
      }
    }
  }
}

void write_top_mass_csv(std::ostream& out, std::span<const AttentionTrace> traces, double retention_ratio) {
  out << "layer,step,query_pos,top_mass\n";
  out.precision(17);
  for (const auto& t : traces) {
    const auto mass = top_mass(t, retention_ratio);
    for (std::size_t r = 0; r < mass.size(); ++r) {
      out << t.layer << ',' << t.step << ',' << t.block_offset + r << ',' << mass[r] << '\n';
    }
  }
}

void write_kv_drift_csv(std::ostream& out, const KvDriftSeries& series) {
  out << "block,pair,value\n";
  out.precision(17);
  for (const auto& p : series) out << p.block << ',' << p.pair << ',' << p.value << '\n';
}

}  // namespace dlmcache
