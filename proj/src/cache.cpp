// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlmcache/cache.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dlmcache/errors.hpp"

namespace dlmcache {
namespace {

void check_eviction_inputs(const Matrix& block_queries, const Matrix& keys, const Matrix& values,
                           std::size_t offset, std::size_t block_len, std::size_t n_heads) {
  if (keys.rows() != values.rows() || keys.cols() != values.cols()) {
    throw ShapeError("eviction: K and V shapes differ");
  }
  if (block_queries.rows() != block_len || block_queries.cols() != keys.cols()) {
    throw ShapeError("eviction: block queries must be block_len x d_model");
  }
  if (keys.rows() <= block_len) throw ShapeError("eviction: sequence must be longer than the block");
  if (offset + block_len > keys.rows()) throw ShapeError("eviction: block extends past the sequence");
  if (n_heads == 0 || keys.cols() % n_heads != 0) throw ShapeError("eviction: bad head count");
}

std::vector<std::size_t> outside_positions(std::size_t seq_len, std::size_t offset, std::size_t block_len) {
  std::vector<std::size_t> out;
  out.reserve(seq_len - block_len);
  for (std::size_t i = 0; i < offset; ++i) out.push_back(i);
  for (std::size_t i = offset + block_len; i < seq_len; ++i) out.push_back(i);
  return out;
}

LayerCache build_cache(std::size_t layer, const Matrix& keys, const Matrix& values,
                       std::vector<std::size_t> positions) {
  LayerCache cache;
  cache.layer = layer;
  cache.keys = keys.gather_rows(positions);
  cache.values = values.gather_rows(positions);
  cache.source_indices = std::move(positions);
  return cache;
}

}  // namespace

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kNoCache: return "no_cache";
    case PolicyKind::kFullCache: return "full_cache";
    case PolicyKind::kPrefixSparse: return "prefix_sparse";
    case PolicyKind::kSparseBidirectional: return "sparse_bidirectional";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (auto kind : {PolicyKind::kNoCache, PolicyKind::kFullCache, PolicyKind::kPrefixSparse,
                    PolicyKind::kSparseBidirectional}) {
    if (policy_name(kind) == name) return kind;
  }
  throw ConfigError("unknown cache policy '" + std::string(name) + "'");
}

std::string_view scoring_mode_name(ScoringMode mode) {
  return mode == ScoringMode::kMeanQuery ? "mean_query" : "per_query_softmax";
}

ScoringMode parse_scoring_mode(std::string_view name) {
  if (name == "mean_query") return ScoringMode::kMeanQuery;
  if (name == "per_query_softmax") return ScoringMode::kPerQuerySoftmax;
  throw ConfigError("unknown scoring mode '" + std::string(name) + "'");
}

void EvictionConfig::validate() const {
  if (!(retention_ratio >= 0.0 && retention_ratio <= 1.0)) {
    throw ConfigError("retention_ratio must lie in [0, 1]");
  }
  if (kernel_size == 0 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd");
}

void CachePolicy::validate(std::size_t steps_per_block) const {
  if (kind == PolicyKind::kNoCache) return;
  eviction.validate();
  if (delay_steps >= steps_per_block) {
    throw ConfigError("delay_steps (" + std::to_string(delay_steps) + ") must be below steps_per_block (" +
                      std::to_string(steps_per_block) + ")");
  }
}

std::size_t retained_count(std::size_t count, double ratio) {
  const double exact = static_cast<double>(count) * ratio;
  const auto n = static_cast<std::size_t>(std::floor(exact + 1e-9));
  return std::min(n, count);
}

std::vector<double> candidate_scores(const Matrix& block_queries, const Matrix& candidate_keys,
                                     std::size_t n_heads, ScoringMode mode) {
  const std::size_t d = block_queries.cols();
  const std::size_t head_dim = d / n_heads;
  const std::size_t n_cand = candidate_keys.rows();
  const std::size_t n_q = block_queries.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<double> scores(n_cand, 0.0);
  if (n_cand == 0 || n_q == 0) return scores;

  if (mode == ScoringMode::kMeanQuery) {
    std::vector<double> mean_query(d, 0.0);
    for (std::size_t i = 0; i < n_q; ++i) {
      auto row = block_queries.row(i);
      for (std::size_t c = 0; c < d; ++c) mean_query[c] += row[c];
    }
    for (double& v : mean_query) v /= static_cast<double>(n_q);
    for (std::size_t j = 0; j < n_cand; ++j) {
      auto key = candidate_keys.row(j);
      double total = 0.0;
      for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t off = h * head_dim;
        double s = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c) s += mean_query[off + c] * key[off + c];
        total += s * scale;
      }
      scores[j] = total / static_cast<double>(n_heads);
    }
    return scores;
  }

  std::vector<double> row_scores(n_cand);
  const double weight = 1.0 / static_cast<double>(n_heads * n_q);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t off = h * head_dim;
    for (std::size_t i = 0; i < n_q; ++i) {
      auto q = block_queries.row(i);
      for (std::size_t j = 0; j < n_cand; ++j) {
        auto key = candidate_keys.row(j);
        double s = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c) s += q[off + c] * key[off + c];
        row_scores[j] = s * scale;
      }
      softmax_inplace(row_scores);
      for (std::size_t j = 0; j < n_cand; ++j) scores[j] += row_scores[j] * weight;
    }
  }
  return scores;
}

std::vector<double> importance_scores(const Matrix& block_queries, const Matrix& candidate_keys,
                                      std::size_t n_heads, const EvictionConfig& cfg) {
  return maxpool_1d(candidate_scores(block_queries, candidate_keys, n_heads, cfg.scoring), cfg.kernel_size);
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t n) {
  n = std::min(n, values.size());
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    return values[a] > values[b] || (values[a] == values[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), better);
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

LayerCache evict_bidirectional(std::size_t layer, const Matrix& block_queries, const Matrix& keys,
                               const Matrix& values, std::size_t offset, std::size_t block_len,
                               std::size_t n_heads, const EvictionConfig& cfg) {
  cfg.validate();
  check_eviction_inputs(block_queries, keys, values, offset, block_len, n_heads);
  const auto candidates = outside_positions(keys.rows(), offset, block_len);
  const Matrix candidate_keys = keys.gather_rows(candidates);
  const auto importance = importance_scores(block_queries, candidate_keys, n_heads, cfg);
  const auto chosen = top_k_indices(importance, retained_count(candidates.size(), cfg.retention_ratio));

  std::vector<std::size_t> positions;
  positions.reserve(chosen.size());
  for (std::size_t c : chosen) positions.push_back(candidates[c]);
  return build_cache(layer, keys, values, std::move(positions));
}

LayerCache evict_prefix_sparse(std::size_t layer, const Matrix& block_queries, const Matrix& keys,
                               const Matrix& values, std::size_t offset, std::size_t block_len,
                               std::size_t n_heads, const EvictionConfig& cfg) {
  cfg.validate();
  check_eviction_inputs(block_queries, keys, values, offset, block_len, n_heads);
  const Matrix prefix_keys = keys.slice_rows(0, offset);
  const auto importance = importance_scores(block_queries, prefix_keys, n_heads, cfg);
  std::vector<std::size_t> positions = top_k_indices(importance, retained_count(offset, cfg.retention_ratio));
  for (std::size_t i = offset + block_len; i < keys.rows(); ++i) positions.push_back(i);
  return build_cache(layer, keys, values, std::move(positions));
}

LayerCache retain_all_outside(std::size_t layer, const Matrix& keys, const Matrix& values,
                              std::size_t offset, std::size_t block_len) {
  if (keys.rows() != values.rows()) throw ShapeError("retain_all_outside: K and V row counts differ");
  if (offset + block_len > keys.rows()) throw ShapeError("retain_all_outside: block extends past the sequence");
  return build_cache(layer, keys, values, outside_positions(keys.rows(), offset, block_len));
}

std::size_t expected_cache_rows(PolicyKind kind, double retention_ratio, std::size_t seq_len,
                                std::size_t offset, std::size_t block_len) {
  const std::size_t suffix = seq_len - offset - block_len;
  switch (kind) {
    case PolicyKind::kNoCache: return 0;
    case PolicyKind::kFullCache: return seq_len - block_len;
    case PolicyKind::kPrefixSparse: return retained_count(offset, retention_ratio) + suffix;
    case PolicyKind::kSparseBidirectional: return retained_count(seq_len - block_len, retention_ratio);
  }
  return 0;
}

CacheManager::CacheManager(CachePolicy policy, const ModelConfig& model, std::size_t steps_per_block)
    : policy_(std::move(policy)),
      n_layers_(model.n_layers),
      n_heads_(model.n_heads),
      steps_per_block_(steps_per_block) {
  policy_.validate(steps_per_block_);
}

CacheState CacheManager::state_for(std::size_t step_in_block) const {
  if (policy_.kind == PolicyKind::kNoCache) return CacheState::kFull;
  if (policy_.forced_state) return *policy_.forced_state;
  return assign_cache_state(step_in_block, policy_.delay_steps);
}

bool CacheManager::has_cache() const { return !caches_.empty(); }

std::size_t CacheManager::cache_entries() const {
  std::size_t total = 0;
  for (const auto& c : caches_) total += c.keys.rows() + c.values.rows();
  return total;
}

void CacheManager::clear() {
  caches_.clear();
  step_in_block_ = 0;
}

void CacheManager::rebuild(const ForwardResult& forward, std::size_t offset, std::size_t block_len) {
  std::vector<LayerCache> fresh;
  fresh.reserve(n_layers_);
  for (const auto& qkv : forward.layers) {
    switch (policy_.kind) {
      case PolicyKind::kFullCache:
        fresh.push_back(retain_all_outside(qkv.layer, qkv.k, qkv.v, offset, block_len));
        break;
      case PolicyKind::kPrefixSparse:
        fresh.push_back(evict_prefix_sparse(qkv.layer, qkv.q.slice_rows(offset, offset + block_len), qkv.k,
                                            qkv.v, offset, block_len, n_heads_, policy_.eviction));
        break;
      case PolicyKind::kSparseBidirectional:
        fresh.push_back(evict_bidirectional(qkv.layer, qkv.q.slice_rows(offset, offset + block_len), qkv.k,
                                            qkv.v, offset, block_len, n_heads_, policy_.eviction));
        break;
      case PolicyKind::kNoCache:
        return;
    }
  }
  const bool reuse_follows = step_in_block_ + 1 < steps_per_block_;
  for (const auto& c : fresh) {
    if (c.empty() && reuse_follows) {
      throw DegenerateCacheError("retention leaves layer " + std::to_string(c.layer) +
                                 " with an empty cache before a reuse step; raise retention_ratio");
    }
  }
  caches_ = std::move(fresh);
  ++writes_;
  peak_entries_ = std::max(peak_entries_, cache_entries());
}

ManagedStep CacheManager::step(const ModelWeights& weights, std::span<const int> tokens, std::size_t offset,
                               std::size_t block_len, ForwardOptions options, ForwardCounters* counters) {
  if (step_in_block_ >= steps_per_block_) throw ScheduleError("cache manager stepped past the block");
  if (offset + block_len > tokens.size()) throw ShapeError("block extends past the sequence");
  ManagedStep out;
  out.step_in_block = step_in_block_;
  out.state = state_for(step_in_block_);
  const std::size_t seq_len = tokens.size();

  if (out.state == CacheState::kReuse) {
    if (caches_.empty()) {
      throw CacheStateError("reuse step " + std::to_string(step_in_block_) + " without a populated cache");
    }
    out.forward = forward_block_with_cache(weights, tokens.subspan(offset, block_len), offset, caches_, options,
                                           counters);
    out.block_logits = out.forward.logits;
    out.queries = block_len;
    for (const auto& c : caches_) out.keys.push_back(c.size() + block_len);
  } else {
    if (out.state == CacheState::kUpdate) options.capture_qkv = true;
    out.forward = forward_full(weights, tokens, options, counters);
    out.block_logits = out.forward.logits.slice_rows(offset, offset + block_len);
    out.queries = seq_len;
    out.keys.assign(n_layers_, seq_len);
    if (out.state == CacheState::kUpdate && policy_.kind != PolicyKind::kNoCache) {
      rebuild(out.forward, offset, block_len);
      out.cache_written = true;
    }
  }
  ++step_in_block_;
  return out;
}

}  // namespace dlmcache
