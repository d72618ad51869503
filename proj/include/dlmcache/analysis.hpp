// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "dlmcache/cache.hpp"
#include "dlmcache/decoder.hpp"
#include "dlmcache/model.hpp"

namespace dlmcache {

// Head-averaged post-softmax attention of one block's queries over every key,
// plus the projections needed to rescore it through the eviction path.
struct AttentionTrace {
  std::size_t layer = 0;
  std::size_t step = 0;  // global decode step
  std::size_t block_index = 0;
  std::size_t block_offset = 0;
  std::size_t block_len = 0;
  Matrix weights;        // block_len x L
  Matrix block_queries;  // block_len x d_model
  Matrix keys;           // L x d_model
};

struct TraceRequest {
  std::vector<std::size_t> layers;
  std::vector<std::size_t> steps;
};

// Cache state the policy assigns to a global step.
CacheState planned_state(const CachePolicy& policy, const DecodeConfig& cfg, std::size_t global_step);

// Runs a decode and records a trace for every requested (layer, step). Steps
// the policy serves from the cache raise TraceUnavailableError up front.
std::vector<AttentionTrace> capture_attention(const ModelWeights& weights, std::span<const int> prompt,
                                              const DecodeConfig& cfg, const CachePolicy& policy,
                                              const TraceRequest& request);

// Per query row: total weight of the ceil(r * L) largest entries.
std::vector<double> top_mass(const AttentionTrace& trace, double retention_ratio);

// |a ∩ b| / |a| for two equally sized index sets.
double overlap_fraction(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Overlap of the retained candidate sets that evict_bidirectional would pick at
// the two traced steps.
double saliency_overlap(const AttentionTrace& a, const AttentionTrace& b, std::size_t n_heads,
                        const EvictionConfig& cfg);

struct KvDriftPoint {
  std::size_t block = 0;
  std::size_t pair = 0;  // steps (pair, pair + 1) within the block
  double value = 0.0;
};

using KvDriftSeries = std::vector<KvDriftPoint>;

// Sum over layers of ||ΔK_f||_F + ||ΔV_f||_F between adjacent steps, where
// K_f/V_f are the rows outside the current block. Needs full K/V every step,
// so only policies that never reuse the cache are accepted.
KvDriftSeries kv_drift(const ModelWeights& weights, std::span<const int> prompt, const DecodeConfig& cfg,
                       const CachePolicy& policy);

// CSV writers; the first line is the header.
void write_attention_csv(std::ostream& out, std::span<const AttentionTrace> traces);  // layer,step,query_pos,key_pos,weight
void write_top_mass_csv(std::ostream& out, std::span<const AttentionTrace> traces, double retention_ratio);
void write_kv_drift_csv(std::ostream& out, const KvDriftSeries& series);  // block,pair,value

}  // namespace dlmcache
