// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlmcache/decoder.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dlmcache/errors.hpp"

namespace dlmcache {

std::size_t SequenceState::masked_count() const {
  return static_cast<std::size_t>(std::count(is_masked.begin(), is_masked.end(), true));
}

void SequenceState::check_invariants() const {
  if (is_masked.size() != tokens.size()) throw InputError("sequence state: mask flag count differs from length");
  if (prompt_len > tokens.size()) throw InputError("sequence state: prompt longer than sequence");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_masked[i] != (tokens[i] == mask_token_id)) {
      throw InputError("sequence state: mask flag disagrees with token at position " + std::to_string(i));
    }
    if (i < prompt_len && is_masked[i]) throw InputError("sequence state: prompt position is masked");
  }
}

std::string_view unmask_rule_name(UnmaskRule rule) {
  return rule == UnmaskRule::kConfidence ? "confidence" : "random";
}

UnmaskRule parse_unmask_rule(std::string_view name) {
  if (name == "confidence") return UnmaskRule::kConfidence;
  if (name == "random") return UnmaskRule::kRandom;
  throw ConfigError("unknown unmask_rule '" + std::string(name) + "'");
}

std::size_t DecodeConfig::steps_per_block() const {
  const std::size_t blocks = num_blocks();
  return blocks == 0 ? 0 : total_steps / blocks;
}

std::size_t DecodeConfig::tokens_per_step() const {
  const std::size_t spb = steps_per_block();
  return spb == 0 ? 0 : block_len / spb;
}

void DecodeConfig::validate() const {
  if (block_len == 0) throw ConfigError("block_len must be >= 1");
  if (gen_len == 0) return;
  if (gen_len % block_len != 0) throw ConfigError("gen_len must be divisible by block_len");
  if (total_steps % num_blocks() != 0) throw ConfigError("total_steps must be divisible by gen_len / block_len");
  if (steps_per_block() == 0) throw ConfigError("total_steps must give at least one step per block");
  if (block_len % steps_per_block() != 0) {
    throw ConfigError("block_len must be divisible by steps_per_block");
  }
}

SequenceState init_state(std::span<const int> prompt, std::size_t gen_len, const ModelConfig& model) {
  if (prompt.empty()) throw InputError("prompt must not be empty");
  if (prompt.size() + gen_len > model.max_seq_len) {
    throw CapacityError("prompt (" + std::to_string(prompt.size()) + ") + gen_len (" + std::to_string(gen_len) +
                        ") exceeds max_seq_len " + std::to_string(model.max_seq_len));
  }
  const int mask = model.mask_token_id();
  SequenceState state;
  state.prompt_len = prompt.size();
  state.mask_token_id = mask;
  state.tokens.assign(prompt.begin(), prompt.end());
  for (int tok : prompt) {
    if (tok < 0 || tok >= mask) {
      throw InputError("prompt token " + std::to_string(tok) + " is not a non-mask vocabulary id");
    }
  }
  state.is_masked.assign(prompt.size(), false);
  state.tokens.resize(prompt.size() + gen_len, mask);
  state.is_masked.resize(prompt.size() + gen_len, true);
  return state;
}

std::vector<Prediction> greedy_predict(const Matrix& logits, const SequenceState& state,
                                       const BlockSchedule& block) {
  std::size_t row_base = 0;
  if (logits.rows() == state.length()) {
    row_base = block.offset;
  } else if (logits.rows() != block.length) {
    throw ShapeError("greedy_predict: logits must have one row per position or per block position");
  }
  if (block.offset + block.length > state.length()) throw ShapeError("greedy_predict: block out of range");
  const auto mask = static_cast<std::size_t>(state.mask_token_id);
  std::vector<Prediction> out;
  std::vector<double> probs;
  for (std::size_t i = 0; i < block.length; ++i) {
    const std::size_t pos = block.offset + i;
    if (!state.is_masked[pos]) continue;
    auto row = logits.row(row_base + i);
    probs.assign(row.begin(), row.end());
    softmax_inplace(probs);
    std::size_t best = mask == 0 ? 1 : 0;
    for (std::size_t v = 0; v < probs.size(); ++v) {
      if (v == mask) continue;
      if (probs[v] > probs[best]) best = v;
    }
    out.push_back({pos, static_cast<int>(best), probs[best]});
  }
  return out;
}

SequenceState transition(const SequenceState& state, std::span<const Prediction> predictions,
                         const BlockSchedule& block, std::size_t per_step, UnmaskRule rule,
                         std::mt19937_64& rng) {
  std::vector<Prediction> candidates;
  for (const auto& p : predictions) {
    if (p.position < block.offset || p.position >= block.offset + block.length) continue;
    if (!state.is_masked[p.position]) continue;
    candidates.push_back(p);
  }
  if (candidates.size() < per_step) {
    throw ScheduleError("transition needs " + std::to_string(per_step) + " masked block positions, found " +
                        std::to_string(candidates.size()));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Prediction& a, const Prediction& b) { return a.position < b.position; });

  if (rule == UnmaskRule::kConfidence) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Prediction& a, const Prediction& b) { return a.confidence > b.confidence; });
  } else {
    // Partial Fisher-Yates: the first per_step slots become the sample.
    for (std::size_t i = 0; i < per_step; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
      std::swap(candidates[i], candidates[pick(rng)]);
    }
  }

  SequenceState next = state;
  for (std::size_t i = 0; i < per_step; ++i) {
    next.tokens[candidates[i].position] = candidates[i].token;
    next.is_masked[candidates[i].position] = false;
  }
  return next;
}

DecodeResult decode(const ModelWeights& weights, std::span<const int> prompt, const DecodeConfig& cfg,
                    const CachePolicy& policy, DecodeObserver* observer, bool count_ops) {
  cfg.validate();
  DecodeResult result;
  result.state = init_state(prompt, cfg.gen_len, weights.config);
  if (cfg.gen_len == 0) return result;

  const std::size_t spb = cfg.steps_per_block();
  const std::size_t per_step = cfg.tokens_per_step();
  CacheManager manager(policy, weights.config, spb);
  ForwardCounters counters(count_ops);
  std::mt19937_64 rng(cfg.rng_seed);
  DecodeReport& report = result.report;

  std::size_t global_step = 0;
  for (std::size_t blk = 0; blk < cfg.num_blocks(); ++blk) {
    manager.clear();
    BlockSchedule block{blk, result.state.prompt_len + blk * cfg.block_len, cfg.block_len, 0};
    for (std::size_t i = 0; i < spb; ++i, ++global_step) {
      block.step_in_block = i;
      StepContext ctx{global_step, block, manager.state_for(i)};
      ForwardOptions options = observer ? observer->forward_options(ctx) : ForwardOptions{};
      if (ctx.state == CacheState::kReuse && observer) observer->on_cache_read(ctx, manager.caches());

      ManagedStep step =
          manager.step(weights, result.state.tokens, block.offset, block.length, options, &counters);
      if (observer) observer->on_forward(ctx, step.forward);
      if (step.cache_written) {
        report.eviction_sizes.emplace_back();
        report.retained_indices.emplace_back();
        for (const auto& c : manager.caches()) {
          report.eviction_sizes.back().push_back(c.size());
          report.retained_indices.back().push_back(c.source_indices);
        }
        if (observer) observer->on_cache_write(ctx, manager.caches());
      }

      const auto predictions = greedy_predict(step.block_logits, result.state, block);
      result.state = transition(result.state, predictions, block, per_step, cfg.unmask_rule, rng);
      report.steps.push_back({global_step, blk, i, step.state, step.queries, std::move(step.keys),
                              step.cache_written});
      if (observer) observer->on_step_end(ctx, result.state);
    }
  }

  report.tokens_generated = cfg.gen_len;
  report.attention_multiply_adds = counters.attention.multiply_adds();
  report.linear_multiply_adds = counters.linear.multiply_adds();
  report.peak_cache_entries = manager.peak_entries();
  report.cache_writes = manager.writes();
  return result;
}

}  // namespace dlmcache
