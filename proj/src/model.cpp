// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlmcache/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dlmcache/errors.hpp"

namespace dlmcache {
namespace {

using json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Matrix make_tensor(std::uint64_t seed, const std::string& name, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  auto data = m.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = weight_entry(seed, name, i);
  return m;
}

const char* const kConfigFields[] = {"vocab_size", "d_model",     "n_heads",  "n_layers",
                                     "d_ff",       "max_seq_len", "init_seed"};

std::uint64_t read_count(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(std::string("model config field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

// Attention-sublayer and feed-forward-sublayer for one layer, applied to the
// residual stream `hidden` in place. `keys`/`values` are prepended cached rows.
void run_layer(const LayerWeights& lw, const ModelConfig& cfg, std::size_t layer_id, Matrix& hidden,
               const LayerCache* cache, const ForwardOptions& options, ForwardCounters* counters,
               ForwardResult& result) {
  OpCounter* linear = counters ? &counters->linear : nullptr;
  OpCounter* attn_counter = counters ? &counters->attention : nullptr;

  const Matrix normed = rms_norm_rows(hidden);
  Matrix q = matmul(normed, lw.wq, linear);
  Matrix k = matmul(normed, lw.wk, linear);
  Matrix v = matmul(normed, lw.wv, linear);

  Matrix probs;
  Matrix mixed;
  if (cache != nullptr) {
    const Matrix keys = cache->keys.vconcat(k);
    const Matrix values = cache->values.vconcat(v);
    mixed = multi_head_attention(q, keys, values, cfg.n_heads, attn_counter,
                                 options.capture_attention ? &probs : nullptr);
  } else {
    mixed = multi_head_attention(q, k, v, cfg.n_heads, attn_counter,
                                 options.capture_attention ? &probs : nullptr);
  }
  add_inplace(hidden, matmul(mixed, lw.wo, linear));

  Matrix ff = matmul(rms_norm_rows(hidden), lw.ff_in, linear);
  gelu_inplace(ff);
  add_inplace(hidden, matmul(ff, lw.ff_out, linear));

  if (options.capture_qkv) result.layers.push_back({layer_id, std::move(q), std::move(k), std::move(v)});
  if (options.capture_attention) result.attention.push_back(std::move(probs));
}

Matrix embed(const ModelWeights& w, std::span<const int> tokens, std::size_t first_position) {
  const ModelConfig& cfg = w.config;
  Matrix hidden(tokens.size(), cfg.d_model);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int tok = tokens[i];
    if (tok < 0 || static_cast<std::size_t>(tok) >= cfg.vocab_size) {
      throw InputError("token id " + std::to_string(tok) + " outside vocabulary of size " +
                       std::to_string(cfg.vocab_size));
    }
    auto dst = hidden.row(i);
    auto te = w.token_embedding.row(static_cast<std::size_t>(tok));
    auto pe = w.position_embedding.row(first_position + i);
    for (std::size_t c = 0; c < cfg.d_model; ++c) dst[c] = te[c] + pe[c];
  }
  return hidden;
}

}  // namespace

void ModelConfig::validate() const {
  auto require_positive = [](std::size_t value, const char* name) {
    if (value == 0) throw ConfigError(std::string("model config field '") + name + "' must be >= 1");
  };
  require_positive(vocab_size, "vocab_size");
  require_positive(d_model, "d_model");
  require_positive(n_heads, "n_heads");
  require_positive(n_layers, "n_layers");
  require_positive(d_ff, "d_ff");
  require_positive(max_seq_len, "max_seq_len");
  if (vocab_size < 2) throw ConfigError("model config field 'vocab_size' must leave room for the mask token");
  if (d_model % n_heads != 0) {
    throw ConfigError("model config field 'd_model' must be divisible by 'n_heads'");
  }
}

ModelConfig ModelConfig::from_json_string(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("model config: expected a JSON object");
  const std::set<std::string> known(std::begin(kConfigFields), std::end(kConfigFields));
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("model config: unknown field '" + key + "'");
  }
  for (const char* key : kConfigFields) {
    if (!doc.contains(key)) throw ConfigError(std::string("model config: missing field '") + key + "'");
  }
  ModelConfig cfg;
  cfg.vocab_size = read_count(doc, "vocab_size");
  cfg.d_model = read_count(doc, "d_model");
  cfg.n_heads = read_count(doc, "n_heads");
  cfg.n_layers = read_count(doc, "n_layers");
  cfg.d_ff = read_count(doc, "d_ff");
  cfg.max_seq_len = read_count(doc, "max_seq_len");
  cfg.init_seed = read_count(doc, "init_seed");
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("model config: cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

std::string ModelConfig::to_json_string() const {
  json doc = {{"vocab_size", vocab_size}, {"d_model", d_model},         {"n_heads", n_heads},
              {"n_layers", n_layers},     {"d_ff", d_ff},               {"max_seq_len", max_seq_len},
              {"init_seed", init_seed}};
  return doc.dump(2);
}

double weight_entry(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  const std::uint64_t h =
      splitmix64(seed ^ splitmix64(fnv1a64(name)) ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
  const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
  return (2.0 * unit - 1.0) * 0.05;
}

ModelWeights init_weights(const ModelConfig& config) {
  config.validate();
  const std::uint64_t seed = config.init_seed;
  const std::size_t d = config.d_model;
  ModelWeights w;
  w.config = config;
  w.token_embedding = make_tensor(seed, "tok_emb", config.vocab_size, d);
  w.position_embedding = make_tensor(seed, "pos_emb", config.max_seq_len, d);
  w.output_head = make_tensor(seed, "head", d, config.vocab_size);
  w.layers.reserve(config.n_layers);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string prefix = "layers." + std::to_string(l) + ".";
    LayerWeights lw;
    lw.wq = make_tensor(seed, prefix + "wq", d, d);
    lw.wk = make_tensor(seed, prefix + "wk", d, d);
    lw.wv = make_tensor(seed, prefix + "wv", d, d);
    lw.wo = make_tensor(seed, prefix + "wo", d, d);
    lw.ff_in = make_tensor(seed, prefix + "ff_in", d, config.d_ff);
    lw.ff_out = make_tensor(seed, prefix + "ff_out", config.d_ff, d);
    w.layers.push_back(std::move(lw));
  }
  return w;
}

Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t n_heads,
                            OpCounter* counter, Matrix* mean_probs) {
  if (q.cols() != k.cols() || k.cols() != v.cols() || k.rows() != v.rows()) {
    throw ShapeError("multi_head_attention: inconsistent Q/K/V shapes");
  }
  if (n_heads == 0 || q.cols() % n_heads != 0) throw ShapeError("multi_head_attention: bad head count");
  const std::size_t n_q = q.rows(), n_k = k.rows(), d = q.cols();
  const std::size_t head_dim = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix out(n_q, d);
  if (mean_probs != nullptr) *mean_probs = Matrix(n_q, n_k);
  std::vector<double> scores(n_k);
  const double head_weight = 1.0 / static_cast<double>(n_heads);
  for (std::size_t i = 0; i < n_q; ++i) {
    const double* q_row = q.row(i).data();
    double* out_row = out.row(i).data();
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * head_dim;
      for (std::size_t j = 0; j < n_k; ++j) {
        const double* k_row = k.row(j).data() + off;
        double s = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c) s += q_row[off + c] * k_row[c];
        scores[j] = s * scale;
      }
      softmax_inplace(scores);
      for (std::size_t j = 0; j < n_k; ++j) {
        const double p = scores[j];
        const double* v_row = v.row(j).data() + off;
        for (std::size_t c = 0; c < head_dim; ++c) out_row[off + c] += p * v_row[c];
      }
      if (mean_probs != nullptr) {
        auto dst = mean_probs->row(i);
        for (std::size_t j = 0; j < n_k; ++j) dst[j] += scores[j] * head_weight;
      }
    }
  }
  if (counter != nullptr) counter->add(2ULL * n_q * n_k * d);
  return out;
}

ForwardResult forward_full(const ModelWeights& weights, std::span<const int> tokens,
                           const ForwardOptions& options, ForwardCounters* counters) {
  const ModelConfig& cfg = weights.config;
  if (tokens.size() > cfg.max_seq_len) {
    throw CapacityError("sequence length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                        std::to_string(cfg.max_seq_len));
  }
  ForwardResult result;
  Matrix hidden = embed(weights, tokens, 0);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    run_layer(weights.layers[l], cfg, l, hidden, nullptr, options, counters, result);
  }
  result.logits = matmul(rms_norm_rows(hidden), weights.output_head, counters ? &counters->linear : nullptr);
  return result;
}

ForwardResult forward_block_with_cache(const ModelWeights& weights, std::span<const int> block_tokens,
                                       std::size_t block_offset, std::span<const LayerCache> caches,
                                       const ForwardOptions& options, ForwardCounters* counters) {
  const ModelConfig& cfg = weights.config;
  if (caches.size() != cfg.n_layers) {
    throw CacheStateError("cached forward needs " + std::to_string(cfg.n_layers) + " layer caches, got " +
                          std::to_string(caches.size()));
  }
  for (std::size_t l = 0; l < caches.size(); ++l) {
    if (caches[l].empty()) throw CacheStateError("cached forward: layer " + std::to_string(l) + " cache is empty");
    if (caches[l].keys.rows() != caches[l].size() || caches[l].values.rows() != caches[l].size()) {
      throw CacheStateError("cached forward: layer " + std::to_string(l) + " K/V rows disagree with indices");
    }
  }
  if (block_offset + block_tokens.size() > cfg.max_seq_len) {
    throw CapacityError("block ends past max_seq_len");
  }
  ForwardResult result;
  Matrix hidden = embed(weights, block_tokens, block_offset);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    run_layer(weights.layers[l], cfg, l, hidden, &caches[l], options, counters, result);
  }
  result.logits = matmul(rms_norm_rows(hidden), weights.output_head, counters ? &counters->linear : nullptr);
  return result;
}

}  // namespace dlmcache
