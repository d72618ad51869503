// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlmcache/layer_cache.hpp"
#include "dlmcache/model.hpp"
#include "dlmcache/numerics.hpp"

namespace dlmcache {

enum class PolicyKind { kNoCache, kFullCache, kPrefixSparse, kSparseBidirectional };

std::string_view policy_name(PolicyKind kind);
// Accepts "no_cache", "full_cache", "prefix_sparse", "sparse_bidirectional".
PolicyKind parse_policy_kind(std::string_view name);

enum class HeadAggregation { kMeanOverHeads };

// kMeanQuery scores candidates against the block's mean query. kPerQuerySoftmax
// softmaxes each block query's scores over the candidates and averages the
// resulting distributions, for comparison against the mean-query rule.
enum class ScoringMode { kMeanQuery, kPerQuerySoftmax };

std::string_view scoring_mode_name(ScoringMode mode);
ScoringMode parse_scoring_mode(std::string_view name);

struct EvictionConfig {
  double retention_ratio = 0.5;
  std::size_t kernel_size = 3;
  HeadAggregation head_aggregation = HeadAggregation::kMeanOverHeads;
  ScoringMode scoring = ScoringMode::kMeanQuery;

  void validate() const;
};

enum class CacheState : int {
  kFull = 0,    // full bidirectional attention, cache untouched
  kUpdate = 1,  // full attention, then rebuild the cache from this step's K/V
  kReuse = 2,   // block-only forward against the cache
};

struct CachePolicy {
  PolicyKind kind = PolicyKind::kSparseBidirectional;
  EvictionConfig eviction;
  std::size_t delay_steps = 1;
  // Overrides the state machine at every step when set (testing hook).
  std::optional<CacheState> forced_state;

  std::string name() const { return std::string(policy_name(kind)); }
  void validate(std::size_t steps_per_block) const;
};

// 2 if i > x, 1 if i == x, 0 otherwise.
constexpr CacheState assign_cache_state(std::size_t step_in_block, std::size_t delay) {
  if (step_in_block > delay) return CacheState::kReuse;
  if (step_in_block == delay) return CacheState::kUpdate;
  return CacheState::kFull;
}

// floor(count * ratio), tolerant of representation error in `ratio`.
std::size_t retained_count(std::size_t count, double ratio);

// Raw per-candidate scores before pooling: mean over heads of
// (q_mean_h . k_h) / sqrt(d_k) (or the per-query-softmax variant).
std::vector<double> candidate_scores(const Matrix& block_queries, const Matrix& candidate_keys,
                                     std::size_t n_heads, ScoringMode mode);

// candidate_scores followed by maxpool_1d.
std::vector<double> importance_scores(const Matrix& block_queries, const Matrix& candidate_keys,
                                      std::size_t n_heads, const EvictionConfig& cfg);

// Indices of the n largest values, ties toward the lower index, sorted ascending.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t n);

// Dynamic bidirectional eviction: scores prefix and suffix candidates together
// and keeps floor((L - b) * r) of them.
LayerCache evict_bidirectional(std::size_t layer, const Matrix& block_queries, const Matrix& keys,
                               const Matrix& values, std::size_t offset, std::size_t block_len,
                               std::size_t n_heads, const EvictionConfig& cfg);

// Evicts only within the prefix [0, o); every suffix row is kept.
LayerCache evict_prefix_sparse(std::size_t layer, const Matrix& block_queries, const Matrix& keys,
                               const Matrix& values, std::size_t offset, std::size_t block_len,
                               std::size_t n_heads, const EvictionConfig& cfg);

// Every row outside [o, o + b).
LayerCache retain_all_outside(std::size_t layer, const Matrix& keys, const Matrix& values,
                              std::size_t offset, std::size_t block_len);

// Closed-form rows per layer that `kind` retains for a block at `offset`.
std::size_t expected_cache_rows(PolicyKind kind, double retention_ratio, std::size_t seq_len,
                                std::size_t offset, std::size_t block_len);

struct ManagedStep {
  CacheState state = CacheState::kFull;
  std::size_t step_in_block = 0;
  ForwardResult forward;   // logits cover all L rows for states 0/1, b rows for 2
  Matrix block_logits;     // b x vocab
  std::size_t queries = 0;         // rows fed through attention per layer
  std::vector<std::size_t> keys;   // keys attended per query, per layer
  bool cache_written = false;
};

// Per-run owner of the layer caches and the per-block state machine.
class CacheManager {
 public:
  CacheManager(CachePolicy policy, const ModelConfig& model, std::size_t steps_per_block);

  const CachePolicy& policy() const { return policy_; }
  CacheState state_for(std::size_t step_in_block) const;
  std::size_t step_in_block() const { return step_in_block_; }

  // Runs one decoding step for the block at [offset, offset + block_len),
  // routing to full or cached forward per the current state.
  ManagedStep step(const ModelWeights& weights, std::span<const int> tokens, std::size_t offset,
                   std::size_t block_len, ForwardOptions options = {},
                   ForwardCounters* counters = nullptr);

  // Empties every layer cache and resets the step counter.
  void clear();

  std::span<const LayerCache> caches() const { return caches_; }
  bool has_cache() const;
  std::size_t cache_entries() const;  // K rows + V rows over all layers
  std::size_t peak_entries() const { return peak_entries_; }
  std::size_t writes() const { return writes_; }

 private:
  void rebuild(const ForwardResult& forward, std::size_t offset, std::size_t block_len);

  CachePolicy policy_;
  std::size_t n_layers_;
  std::size_t n_heads_;
  std::size_t steps_per_block_;
  std::size_t step_in_block_ = 0;
  std::vector<LayerCache> caches_;
  std::size_t peak_entries_ = 0;
  std::size_t writes_ = 0;
};

}  // namespace dlmcache
