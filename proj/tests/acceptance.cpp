// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "dlmcache/analysis.hpp"
#include "dlmcache/cache.hpp"
#include "dlmcache/decoder.hpp"
#include "dlmcache/model.hpp"
#include "oracles.hpp"

namespace dlmcache {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

CachePolicy make_policy(PolicyKind kind, double r = 0.5, std::size_t delay = 1) {
  CachePolicy p;
  p.kind = kind;
  p.eviction.retention_ratio = r;
  p.delay_steps = delay;
  return p;
}

// Toy setting shared by several criteria: L = 96, b = 16, 8 steps per block.
struct ToySetting {
  ModelWeights weights = init_weights(oracle::toy_config(1024));
  std::vector<int> prompt;
  DecodeConfig cfg;
  ToySetting() {
    std::mt19937_64 rng(96);
    prompt = oracle::random_prompt(64, 256, rng);
    cfg.gen_len = 32;
    cfg.block_len = 16;
    cfg.total_steps = 16;
  }
  std::size_t seq_len() const { return prompt.size() + cfg.gen_len; }
};

const ToySetting& toy() {
  static const ToySetting setting;
  return setting;
}

Outcome criterion_state_table() {
  const auto start = Clock::now();
  std::size_t mismatches = 0, checked = 0;
  // Delay-one schedule written out literally.
  for (std::size_t i = 0; i < 32; ++i) {
    const int want = i == 0 ? 0 : (i == 1 ? 1 : 2);
    mismatches += static_cast<int>(assign_cache_state(i, 1)) != want;
    ++checked;
  }
  for (std::size_t x = 0; x <= 5; ++x) {
    for (std::size_t i = 0; i < 32; ++i) {
      int want = 0;
      if (i > x) {
        want = 2;
      } else if (i == x) {
        want = 1;
      }
      mismatches += static_cast<int>(assign_cache_state(i, x)) != want;
      ++checked;
    }
  }
  const double t = seconds_since(start);
  return {mismatches == 0 && t < 1.0,
          fmt("%.0f/%.0f cases match, %.3fs (limit 1s)", static_cast<double>(checked - mismatches),
              static_cast<double>(checked), t)};
}

Outcome criterion_eviction_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20260101);
  const std::size_t kernels[] = {1, 3, 5, 7};
  std::size_t agree = 0;
  const std::size_t trials = 1000;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t b = 1 + rng() % 16;
    const std::size_t L = b + 1 + rng() % (64 - b);
    const std::size_t heads = 1 + rng() % 4;
    const std::size_t d = heads * (1 + rng() % 8);
    const std::size_t o = rng() % (L - b + 1);
    EvictionConfig ev;
    ev.retention_ratio = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    ev.kernel_size = kernels[rng() % 4];
    const Matrix q = oracle::random_matrix(b, d, rng);
    const Matrix k = oracle::random_matrix(L, d, rng);
    const Matrix v = oracle::random_matrix(L, d, rng);
    const LayerCache got = evict_bidirectional(0, q, k, v, o, b, heads, ev);
    const std::size_t n = static_cast<std::size_t>(std::floor(static_cast<double>(L - b) * ev.retention_ratio + 1e-9));
    agree += got.source_indices ==
             oracle::brute_force_eviction(oracle::to_grid(q), oracle::to_grid(k), o, b, heads, ev.kernel_size, n);
  }
  const double t = seconds_since(start);
  return {agree == trials && t < 10.0,
          fmt("%.0f/%.0f instances equal the full-sort oracle, %.2fs (limit 10s)", static_cast<double>(agree),
              static_cast<double>(trials), t)};
}

Outcome criterion_degeneracy() {
  const auto start = Clock::now();
  const ToySetting& s = toy();
  CachePolicy forced = make_policy(PolicyKind::kSparseBidirectional);
  forced.forced_state = CacheState::kFull;
  const auto none = decode(s.weights, s.prompt, s.cfg, make_policy(PolicyKind::kNoCache), nullptr, false);
  const auto forced_run = decode(s.weights, s.prompt, s.cfg, forced, nullptr, false);
  const auto full = decode(s.weights, s.prompt, s.cfg, make_policy(PolicyKind::kFullCache), nullptr, false);
  const auto sparse1 =
      decode(s.weights, s.prompt, s.cfg, make_policy(PolicyKind::kSparseBidirectional, 1.0), nullptr, false);
  const auto prefix1 = decode(s.weights, s.prompt, s.cfg, make_policy(PolicyKind::kPrefixSparse, 1.0), nullptr, false);
  const bool a = none.state.tokens == forced_run.state.tokens;
  const bool b = sparse1.state.tokens == full.state.tokens;
  const bool c = prefix1.state.tokens == full.state.tokens;
  const double t = seconds_since(start);
  std::ostringstream detail;
  detail << "(a) forced-0 vs no_cache " << (a ? "equal" : "DIFFER") << ", (b) sparse r=1 vs full_cache "
         << (b ? "equal" : "DIFFER") << ", (c) prefix r=1 vs full_cache " << (c ? "equal" : "DIFFER") << ", "
         << fmt("%.2fs (limit 30s)", t);
  return {a && b && c && t < 30.0, detail.str()};
}

Outcome criterion_cached_forward() {
  const auto start = Clock::now();
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t heads = 1 + rng() % 4;
    const std::size_t d = heads * (2 + rng() % 4);
    const ModelConfig cfg = oracle::tiny_config(5 + rng() % 40, d, heads, 1 + rng() % 3, 64);
    ModelConfig seeded = cfg;
    seeded.init_seed = rng();
    const ModelWeights w = init_weights(seeded);
    const std::size_t L = 2 + rng() % 47;
    const std::size_t b = 1 + rng() % std::min<std::size_t>(L - 1, 16);
    const std::size_t o = rng() % (L - b + 1);
    const auto tokens = oracle::random_prompt(L, static_cast<int>(seeded.vocab_size), rng);
    ForwardOptions opts;
    opts.capture_qkv = true;
    const ForwardResult full = forward_full(w, tokens, opts);
    std::vector<LayerCache> caches;
    for (const auto& layer : full.layers) caches.push_back(retain_all_outside(layer.layer, layer.k, layer.v, o, b));
    const std::span<const int> block(tokens.data() + o, b);
    const ForwardResult cached = forward_block_with_cache(w, block, o, caches);
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t c = 0; c < full.logits.cols(); ++c) {
        worst = std::max(worst, std::abs(cached.logits(r, c) - full.logits(o + r, c)));
      }
    }
  }
  const double t = seconds_since(start);
  return {worst <= 1e-10 && t < 10.0, fmt("max abs diff %.3g over 100 instances (limit 1e-10), %.2fs (limit 10s)",
                                          worst, t)};
}

Outcome criterion_scale_invariance() {
  std::mt19937_64 rng(5);
  std::size_t agree = 0, total = 0;
  const std::size_t kernels[] = {1, 3, 5};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 1 + rng() % 16;
    const std::size_t L = b + 1 + rng() % (64 - b);
    const std::size_t heads = 1 + rng() % 4;
    const std::size_t d = heads * (1 + rng() % 8);
    const std::size_t o = rng() % (L - b + 1);
    EvictionConfig ev;
    ev.retention_ratio = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    ev.kernel_size = kernels[rng() % 3];
    const Matrix q = oracle::random_matrix(b, d, rng);
    const Matrix k = oracle::random_matrix(L, d, rng);
    const Matrix v = oracle::random_matrix(L, d, rng);
    const auto base = evict_bidirectional(0, q, k, v, o, b, heads, ev).source_indices;
    for (double scale : {0.5, 3.0, 100.0}) {
      Matrix scaled = k;
      for (double& x : scaled.data()) x *= scale;
      agree += evict_bidirectional(0, q, scaled, v, o, b, heads, ev).source_indices == base;
      ++total;
    }
  }
  return {agree == total, fmt("%.0f/%.0f scaled instances keep the same indices", static_cast<double>(agree),
                              static_cast<double>(total))};
}

// Attention multiply-adds derived from the schedule alone.
std::uint64_t closed_form_attention(PolicyKind kind, double r, std::size_t delay, std::size_t prompt_len,
                                    const DecodeConfig& cfg, const ModelConfig& model) {
  const std::uint64_t L = prompt_len + cfg.gen_len, b = cfg.block_len, d = model.d_model, layers = model.n_layers;
  std::uint64_t total = 0;
  for (std::size_t blk = 0; blk < cfg.num_blocks(); ++blk) {
    const std::uint64_t o = prompt_len + blk * b;
    std::uint64_t rows = 0;
    switch (kind) {
      case PolicyKind::kNoCache: break;
      case PolicyKind::kFullCache: rows = L - b; break;
      case PolicyKind::kSparseBidirectional:
        rows = static_cast<std::uint64_t>(std::floor(static_cast<double>(L - b) * r + 1e-9));
        break;
      case PolicyKind::kPrefixSparse:
        rows = static_cast<std::uint64_t>(std::floor(static_cast<double>(o) * r + 1e-9)) + (L - o - b);
        break;
    }
    for (std::size_t i = 0; i < cfg.steps_per_block(); ++i) {
      const bool reuse = kind != PolicyKind::kNoCache && i > delay;
      total += reuse ? 2 * layers * b * (rows + b) * d : 2 * layers * L * L * d;
    }
  }
  return total;
}

Outcome criterion_compute_accounting() {
  const ToySetting& s = toy();
  std::map<PolicyKind, std::uint64_t> measured;
  bool exact = true;
  std::ostringstream detail;
  for (PolicyKind kind : {PolicyKind::kNoCache, PolicyKind::kFullCache, PolicyKind::kPrefixSparse,
                          PolicyKind::kSparseBidirectional}) {
    const auto res = decode(s.weights, s.prompt, s.cfg, make_policy(kind), nullptr, true);
    const std::uint64_t want = closed_form_attention(kind, 0.5, 1, s.prompt.size(), s.cfg, s.weights.config);
    measured[kind] = res.report.attention_multiply_adds;
    exact = exact && want == measured[kind];
    detail << policy_name(kind) << "=" << measured[kind] << (want == measured[kind] ? "" : " (closed form differs)")
           << " ";
  }
  const bool ordered = measured[PolicyKind::kSparseBidirectional] < measured[PolicyKind::kFullCache] &&
                       measured[PolicyKind::kFullCache] < measured[PolicyKind::kNoCache];
  detail << (ordered ? "ordering sparse < full < none holds" : "ordering VIOLATED");
  return {exact && ordered, detail.str()};
}

class CacheSizeObserver : public DecodeObserver {
 public:
  void on_cache_write(const StepContext&, std::span<const LayerCache> caches) override {
    std::size_t entries = 0;
    for (const auto& c : caches) entries += c.keys.rows() + c.values.rows();
    peak = std::max(peak, entries);
  }
  std::size_t peak = 0;
};

Outcome criterion_memory_accounting() {
  const ToySetting& s = toy();
  const std::size_t L = s.seq_len(), b = s.cfg.block_len, layers = s.weights.config.n_layers;
  const double r = 0.5;
  auto run = [&](PolicyKind kind, std::size_t& observed) {
    CacheSizeObserver obs;
    const auto res = decode(s.weights, s.prompt, s.cfg, make_policy(kind, r), &obs, false);
    observed = obs.peak;
    return res.report.peak_cache_entries;
  };
  std::size_t obs_sparse = 0, obs_prefix = 0, obs_full = 0;
  const std::size_t sparse = run(PolicyKind::kSparseBidirectional, obs_sparse);
  const std::size_t prefix = run(PolicyKind::kPrefixSparse, obs_prefix);
  const std::size_t full = run(PolicyKind::kFullCache, obs_full);

  const std::size_t want_sparse = layers * 2 * static_cast<std::size_t>(std::floor((L - b) * r + 1e-9));
  std::size_t want_prefix = 0;
  for (std::size_t blk = 0; blk < s.cfg.num_blocks(); ++blk) {
    const std::size_t o = s.prompt.size() + blk * b;
    want_prefix = std::max(want_prefix, layers * 2 * (static_cast<std::size_t>(std::floor(o * r + 1e-9)) + (L - o - b)));
  }
  const std::size_t want_full = layers * 2 * (L - b);
  const double per_row_gap = std::abs(static_cast<double>(sparse) - r * static_cast<double>(full)) /
                             static_cast<double>(layers * 2);
  const bool pass = sparse == want_sparse && obs_sparse == sparse && prefix == want_prefix && obs_prefix == prefix &&
                    full == want_full && obs_full == full && per_row_gap < 1.0;
  std::ostringstream detail;
  detail << "sparse " << sparse << " (formula " << want_sparse << ", observed " << obs_sparse << "), prefix " << prefix
         << " (formula " << want_prefix << ", observed " << obs_prefix << "), full " << full << ", sparse vs r*full gap "
         << per_row_gap << " rows/layer-tensor (limit < 1)";
  return {pass, detail.str()};
}

Outcome criterion_wall_clock() {
  const auto start = Clock::now();
  const ModelWeights w = init_weights(oracle::toy_config(1024));
  std::mt19937_64 rng(1024);
  const auto prompt = oracle::random_prompt(768, 256, rng);
  DecodeConfig cfg;
  cfg.gen_len = 256;
  cfg.block_len = 32;
  cfg.total_steps = 64;
  auto median_wall = [&](PolicyKind kind, std::vector<int>& tokens) {
    std::vector<double> times;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      const auto res = decode(w, prompt, cfg, make_policy(kind), nullptr, false);
      times.push_back(seconds_since(t0));
      tokens = res.state.tokens;
    }
    std::sort(times.begin(), times.end());
    return times[1];
  };
  std::vector<int> t_none, t_sparse;
  const double none = median_wall(PolicyKind::kNoCache, t_none);
  const double sparse = median_wall(PolicyKind::kSparseBidirectional, t_sparse);
  const double total = seconds_since(start);
  const double ratio = sparse / none;
  return {ratio <= 0.7 && total < 300.0,
          fmt("sparse/no_cache median wall %.3f (limit 0.7), no_cache %.2fs", ratio, none) +
              fmt(", sparse %.2fs, total %.1fs (limit 300s)", sparse, total)};
}

class DelayObserver : public DecodeObserver {
 public:
  DelayObserver(std::size_t heads, EvictionConfig ev) : heads_(heads), ev_(ev) {}

  ForwardOptions forward_options(const StepContext&) override {
    ForwardOptions o;
    o.capture_qkv = true;
    return o;
  }
  void on_forward(const StepContext& ctx, const ForwardResult& fwd) override {
    if (ctx.block.step_in_block != delay) return;
    expected_.clear();
    for (const auto& layer : fwd.layers) {
      expected_.push_back(evict_bidirectional(layer.layer, layer.q.slice_rows(ctx.block.offset, ctx.block.offset + ctx.block.length),
                                              layer.k, layer.v, ctx.block.offset, ctx.block.length, heads_, ev_));
    }
  }
  void on_cache_write(const StepContext& ctx, std::span<const LayerCache> caches) override {
    writes_per_block[ctx.block.block_index].push_back(ctx.block.step_in_block);
    write_matches = write_matches && std::equal(caches.begin(), caches.end(), expected_.begin(), expected_.end());
  }
  void on_cache_read(const StepContext&, std::span<const LayerCache> caches) override {
    ++reads;
    read_matches = read_matches && std::equal(caches.begin(), caches.end(), expected_.begin(), expected_.end());
  }

  std::size_t delay = 0;
  std::map<std::size_t, std::vector<std::size_t>> writes_per_block;
  std::size_t reads = 0;
  bool write_matches = true;
  bool read_matches = true;

 private:
  std::size_t heads_;
  EvictionConfig ev_;
  std::vector<LayerCache> expected_;
};

Outcome criterion_delay_semantics() {
  const ToySetting& s = toy();
  bool pass = true;
  std::ostringstream detail;
  for (std::size_t x = 0; x <= 3; ++x) {
    const CachePolicy policy = make_policy(PolicyKind::kSparseBidirectional, 0.5, x);
    DelayObserver obs(s.weights.config.n_heads, policy.eviction);
    obs.delay = x;
    decode(s.weights, s.prompt, s.cfg, policy, &obs, false);
    bool one_write = obs.writes_per_block.size() == s.cfg.num_blocks();
    for (const auto& [blk, steps] : obs.writes_per_block) one_write = one_write && steps == std::vector<std::size_t>{x};
    const std::size_t want_reads = s.cfg.num_blocks() * (s.cfg.steps_per_block() - x - 1);
    const bool ok = one_write && obs.write_matches && obs.read_matches && obs.reads == want_reads;
    pass = pass && ok;
    detail << "x=" << x << (ok ? " ok" : " FAIL") << " (reads " << obs.reads << "/" << want_reads << ") ";
  }
  detail << "one write per block at step x, reused K/V bitwise equal to step-x eviction";
  return {pass, detail.str()};
}

Outcome criterion_diagnostics() {
  const ToySetting& s = toy();
  const CachePolicy none = make_policy(PolicyKind::kNoCache);
  const auto series = kv_drift(s.weights, s.prompt, s.cfg, none);
  const std::size_t want_len = s.cfg.num_blocks() * (s.cfg.steps_per_block() - 1);
  bool drift_ok = series.size() == want_len;
  for (const auto& p : series) drift_ok = drift_ok && std::isfinite(p.value) && p.value >= 0.0;

  TraceRequest req;
  for (std::size_t l = 0; l < s.weights.config.n_layers; ++l) req.layers.push_back(l);
  for (std::size_t st = 0; st < s.cfg.total_steps; ++st) req.steps.push_back(st);
  const auto traces = capture_attention(s.weights, s.prompt, s.cfg, none, req);
  double worst = 0.0;
  bool self_overlap = true;
  for (const auto& t : traces) {
    for (std::size_t r = 0; r < t.weights.rows(); ++r) {
      double sum = 0.0;
      for (double v : t.weights.row(r)) sum += v;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    self_overlap = self_overlap && saliency_overlap(t, t, s.weights.config.n_heads, EvictionConfig{}) == 1.0;
  }
  std::ostringstream detail;
  detail << "kv drift length " << series.size() << "/" << want_len << (drift_ok ? " finite, non-negative" : " INVALID")
         << "; " << traces.size() << " traces, worst row-sum error " << worst << " (limit 1e-9); self overlap "
         << (self_overlap ? "1.0" : "NOT 1.0");
  return {drift_ok && worst <= 1e-9 && self_overlap && traces.size() == req.layers.size() * req.steps.size(),
          detail.str()};
}

Outcome criterion_ablation_shape() {
  const ToySetting& s = toy();
  std::vector<std::size_t> reuse_counts;
  std::vector<std::uint64_t> madds;
  for (std::size_t x = 0; x <= 5; ++x) {
    const auto res =
        decode(s.weights, s.prompt, s.cfg, make_policy(PolicyKind::kSparseBidirectional, 0.5, x), nullptr, true);
    std::size_t reuse = 0;
    for (const auto& st : res.report.steps) reuse += st.state == CacheState::kReuse;
    reuse_counts.push_back(reuse);
    madds.push_back(res.report.attention_multiply_adds);
  }
  bool delay_ok = true;
  for (std::size_t i = 1; i < reuse_counts.size(); ++i) {
    delay_ok = delay_ok && reuse_counts[i] <= reuse_counts[i - 1] && madds[i] >= madds[i - 1];
  }
  std::vector<std::size_t> peaks;
  for (int tenth = 1; tenth <= 9; ++tenth) {
    const auto res = decode(s.weights, s.prompt, s.cfg,
                            make_policy(PolicyKind::kSparseBidirectional, tenth / 10.0, 1), nullptr, false);
    peaks.push_back(res.report.peak_cache_entries);
  }
  bool ratio_ok = true;
  for (std::size_t i = 1; i < peaks.size(); ++i) ratio_ok = ratio_ok && peaks[i] > peaks[i - 1];
  std::ostringstream detail;
  detail << "delay 0..5 reuse steps";
  for (auto c : reuse_counts) detail << ' ' << c;
  detail << (delay_ok ? " (non-increasing, madds non-decreasing)" : " (VIOLATED)") << "; r 0.1..0.9 peaks";
  for (auto p : peaks) detail << ' ' << p;
  detail << (ratio_ok ? " (strictly increasing)" : " (VIOLATED)");
  return {delay_ok && ratio_ok, detail.str()};
}

}  // namespace
}  // namespace dlmcache

int main() {
  using namespace dlmcache;
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"state-machine table", criterion_state_table},
      {"eviction oracle", criterion_eviction_oracle},
      {"degeneracy chain", criterion_degeneracy},
      {"cached-forward fidelity", criterion_cached_forward},
      {"scale invariance", criterion_scale_invariance},
      {"compute accounting", criterion_compute_accounting},
      {"memory accounting", criterion_memory_accounting},
      {"wall-clock sanity", criterion_wall_clock},
      {"delayed-update semantics", criterion_delay_semantics},
      {"diagnostics well-formedness", criterion_diagnostics},
      {"ablation shape", criterion_ablation_shape},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("criterion %2d %-28s %s  %s\n", index, name, out.pass ? "PASS" : "FAIL", out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
