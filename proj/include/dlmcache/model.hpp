// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlmcache/layer_cache.hpp"
#include "dlmcache/numerics.hpp"

namespace dlmcache {

struct ModelConfig {
  std::size_t vocab_size = 257;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 4;
  std::size_t d_ff = 128;
  std::size_t max_seq_len = 1024;
  std::uint64_t init_seed = 2025;

  int mask_token_id() const { return static_cast<int>(vocab_size) - 1; }
  std::size_t head_dim() const { return d_model / n_heads; }

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Exactly the fields above; unknown or missing keys are a ConfigError.
  static ModelConfig from_json_string(std::string_view text);
  static ModelConfig from_json_file(const std::string& path);
  std::string to_json_string() const;

  bool operator==(const ModelConfig&) const = default;
};

struct LayerWeights {
  Matrix wq, wk, wv, wo;  // d_model x d_model
  Matrix ff_in;           // d_model x d_ff
  Matrix ff_out;          // d_ff x d_model
};

struct ModelWeights {
  ModelConfig config;
  Matrix token_embedding;     // vocab x d_model
  Matrix position_embedding;  // max_seq_len x d_model
  std::vector<LayerWeights> layers;
  Matrix output_head;  // d_model x vocab
};

// Counter-based weight generator. Entry `index` of tensor `name` is
//   h   = splitmix64(seed ^ splitmix64(fnv1a64(name)) ^ splitmix64(index + golden))
//   u   = (h >> 11) * 2^-53              in [0, 1)
//   w   = (2u - 1) * 0.05                in [-0.05, 0.05)
// Tensor names: "tok_emb", "pos_emb", "head", and "layers.<l>.{wq,wk,wv,wo,ff_in,ff_out}".
double weight_entry(std::uint64_t seed, std::string_view name, std::uint64_t index);
ModelWeights init_weights(const ModelConfig& config);

// Per-layer projected attention inputs for the rows fed to that layer.
struct LayerQKV {
  std::size_t layer = 0;
  Matrix q, k, v;
};

struct ForwardOptions {
  bool capture_qkv = false;
  // Head-averaged post-softmax attention, one (queries x keys) matrix per layer.
  bool capture_attention = false;
};

struct ForwardCounters {
  OpCounter attention;  // QK^T and PV passes
  OpCounter linear;     // projections, feed-forward, output head

  explicit ForwardCounters(bool enabled = false) : attention(enabled), linear(enabled) {}
};

struct ForwardResult {
  Matrix logits;
  std::vector<LayerQKV> layers;
  std::vector<Matrix> attention;
};

// Multi-head scaled dot-product attention without masking. Adds
// 2 x queries x keys x d_model to `counter` (score pass + value pass).
Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_heads,
                            OpCounter* counter = nullptr, Matrix* mean_probs = nullptr);

// Bidirectional forward over every position.
ForwardResult forward_full(const ModelWeights& weights, std::span<const int> tokens,
                           const ForwardOptions& options = {}, ForwardCounters* counters = nullptr);

// Forward over the block only: each layer attends the block queries over
// Concat(cached K/V, fresh block K/V). `block_offset` is the absolute position
// of the first block token.
ForwardResult forward_block_with_cache(const ModelWeights& weights, std::span<const int> block_tokens,
                                       std::size_t block_offset, std::span<const LayerCache> caches,
                                       const ForwardOptions& options = {},
                                       ForwardCounters* counters = nullptr);

}  // namespace dlmcache
