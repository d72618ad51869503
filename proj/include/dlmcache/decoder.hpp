// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "dlmcache/cache.hpp"
#include "dlmcache/model.hpp"

namespace dlmcache {

struct SequenceState {
  std::vector<int> tokens;
  std::vector<bool> is_masked;
  std::size_t prompt_len = 0;
  int mask_token_id = 0;

  std::size_t length() const { return tokens.size(); }
  std::size_t masked_count() const;
  // Throws InputError when the mask flags and tokens disagree.
  void check_invariants() const;
  bool operator==(const SequenceState&) const = default;
};

enum class UnmaskRule { kConfidence, kRandom };

std::string_view unmask_rule_name(UnmaskRule rule);
UnmaskRule parse_unmask_rule(std::string_view name);

struct DecodeConfig {
  std::size_t total_steps = 256;
  std::size_t gen_len = 256;
  std::size_t block_len = 32;
  UnmaskRule unmask_rule = UnmaskRule::kConfidence;
  std::uint64_t rng_seed = 2025;

  std::size_t num_blocks() const { return gen_len / block_len; }
  std::size_t steps_per_block() const;
  // Tokens committed per step, m = block_len / steps_per_block.
  std::size_t tokens_per_step() const;
  void validate() const;
};

struct BlockSchedule {
  std::size_t block_index = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
  std::size_t step_in_block = 0;
};

SequenceState init_state(std::span<const int> prompt, std::size_t gen_len, const ModelConfig& model);

struct Prediction {
  std::size_t position = 0;
  int token = 0;
  double confidence = 0.0;
};

// Argmax over the vocabulary minus the mask id for every masked block
// position; ties go to the lower token id. `logits` can hold either one row
// per sequence position or one row per block position.
std::vector<Prediction> greedy_predict(const Matrix& logits, const SequenceState& state,
                                       const BlockSchedule& block);

// Commits `per_step` predictions. kConfidence takes the highest confidences
// (ties toward the lower position); kRandom samples uniformly from `rng`.
SequenceState transition(const SequenceState& state, std::span<const Prediction> predictions,
                         const BlockSchedule& block, std::size_t per_step, UnmaskRule rule,
                         std::mt19937_64& rng);

struct StepRecord {
  std::size_t global_step = 0;
  std::size_t block_index = 0;
  std::size_t step_in_block = 0;
  CacheState state = CacheState::kFull;
  std::size_t queries = 0;
  std::vector<std::size_t> keys;  // per layer
  bool cache_written = false;
};

struct DecodeReport {
  std::size_t tokens_generated = 0;
  std::uint64_t attention_multiply_adds = 0;
  std::uint64_t linear_multiply_adds = 0;
  std::size_t peak_cache_entries = 0;
  std::size_t cache_writes = 0;
  std::vector<StepRecord> steps;
  // Rows retained per layer at each block's cache write (empty for NoCache).
  std::vector<std::vector<std::size_t>> eviction_sizes;
  // Retained source positions per block, per layer.
  std::vector<std::vector<std::vector<std::size_t>>> retained_indices;
};

struct StepContext {
  std::size_t global_step = 0;
  BlockSchedule block;
  CacheState state = CacheState::kFull;
};

// Instrumentation hooks called by decode(). Default implementations do nothing.
class DecodeObserver {
 public:
  virtual ~DecodeObserver() = default;
  // Extra captures to request for the forward pass of this step.
  virtual ForwardOptions forward_options(const StepContext&) { return {}; }
  virtual void on_forward(const StepContext&, const ForwardResult&) {}
  virtual void on_cache_write(const StepContext&, std::span<const LayerCache>) {}
  virtual void on_cache_read(const StepContext&, std::span<const LayerCache>) {}
  virtual void on_step_end(const StepContext&, const SequenceState&) {}
};

struct DecodeResult {
  SequenceState state;
  DecodeReport report;
};

DecodeResult decode(const ModelWeights& weights, std::span<const int> prompt, const DecodeConfig& cfg,
                    const CachePolicy& policy, DecodeObserver* observer = nullptr, bool count_ops = true);

}  // namespace dlmcache
