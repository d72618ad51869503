// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlmcache/analysis.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "dlmcache/errors.hpp"
#include "oracles.hpp"

namespace dlmcache {
namespace {

struct Fixture {
  ModelConfig model = oracle::tiny_config(17, 16, 2, 3, 64);
  ModelWeights weights = init_weights(model);
  std::vector<int> prompt{1, 5, 2, 7, 3, 9, 4, 11};
  DecodeConfig cfg;
  Fixture() {
    cfg.gen_len = 16;
    cfg.block_len = 8;
    cfg.total_steps = 8;
  }
};

CachePolicy no_cache() {
  CachePolicy p;
  p.kind = PolicyKind::kNoCache;
  return p;
}

TEST(CaptureAttention, RowsAreDistributions) {
  Fixture f;
  const auto traces = capture_attention(f.weights, f.prompt, f.cfg, no_cache(), {{0, 2}, {0, 5}});
  ASSERT_EQ(traces.size(), 4u);
  for (const auto& t : traces) {
    EXPECT_EQ(t.weights.rows(), t.block_len);
    EXPECT_EQ(t.weights.cols(), f.prompt.size() + f.cfg.gen_len);
    for (std::size_t r = 0; r < t.weights.rows(); ++r) {
      double sum = 0.0;
      for (double v : t.weights.row(r)) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
  EXPECT_EQ(traces[0].layer, 0u);
  EXPECT_EQ(traces[0].step, 0u);
  EXPECT_EQ(traces[3].block_index, 1u);
  EXPECT_EQ(traces[3].block_offset, 16u);
}

TEST(CaptureAttention, RejectsReuseStepsAndBadRequests) {
  Fixture f;
  CachePolicy sparse;
  EXPECT_EQ(planned_state(sparse, f.cfg, 0), CacheState::kFull);
  EXPECT_EQ(planned_state(sparse, f.cfg, 1), CacheState::kUpdate);
  EXPECT_EQ(planned_state(sparse, f.cfg, 2), CacheState::kReuse);
  EXPECT_EQ(planned_state(sparse, f.cfg, 4), CacheState::kFull);
  EXPECT_THROW(capture_attention(f.weights, f.prompt, f.cfg, sparse, {{0}, {2}}), TraceUnavailableError);
  EXPECT_NO_THROW(capture_attention(f.weights, f.prompt, f.cfg, sparse, {{0}, {0, 1, 4}}));
  EXPECT_THROW(capture_attention(f.weights, f.prompt, f.cfg, no_cache(), {{3}, {0}}), InputError);
  EXPECT_THROW(capture_attention(f.weights, f.prompt, f.cfg, no_cache(), {{0}, {8}}), InputError);
}

TEST(TopMass, HandExampleAndBounds) {
  AttentionTrace t;
  t.weights = Matrix{{0.5, 0.1, 0.3, 0.1}, {0.25, 0.25, 0.25, 0.25}};
  const auto mass = top_mass(t, 0.5);
  ASSERT_EQ(mass.size(), 2u);
  EXPECT_NEAR(mass[0], 0.8, 1e-12);
  EXPECT_NEAR(mass[1], 0.5, 1e-12);
  EXPECT_NEAR(top_mass(t, 1.0)[0], 1.0, 1e-12);
  EXPECT_NEAR(top_mass(t, 0.1)[0], 0.5, 1e-12);  // ceil(0.4) = 1 entry
}

TEST(Overlap, Fractions) {
  const std::vector<std::size_t> a{1, 4, 7, 9};
  const std::vector<std::size_t> b{0, 2, 3, 5};
  const std::vector<std::size_t> c{4, 9, 10, 11};
  EXPECT_DOUBLE_EQ(overlap_fraction(a, a), 1.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(a, b), 0.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(a, c), 0.5);
}

TEST(SaliencyOverlap, SelfIsOneAndLayersMustMatch) {
  Fixture f;
  const auto traces = capture_attention(f.weights, f.prompt, f.cfg, no_cache(), {{0, 1}, {0, 1}});
  EvictionConfig ev;
  EXPECT_DOUBLE_EQ(saliency_overlap(traces[0], traces[0], f.model.n_heads, ev), 1.0);
  const double cross = saliency_overlap(traces[0], traces[2], f.model.n_heads, ev);
  EXPECT_GE(cross, 0.0);
  EXPECT_LE(cross, 1.0);
  EXPECT_THROW(saliency_overlap(traces[0], traces[1], f.model.n_heads, ev), InputError);
}

TEST(KvDrift, SeriesShape) {
  Fixture f;
  const auto series = kv_drift(f.weights, f.prompt, f.cfg, no_cache());
  ASSERT_EQ(series.size(), f.cfg.num_blocks() * (f.cfg.steps_per_block() - 1));
  for (const auto& p : series) {
    EXPECT_TRUE(std::isfinite(p.value));
    EXPECT_GE(p.value, 0.0);
  }
  EXPECT_EQ(series[0].block, 0u);
  EXPECT_EQ(series[0].pair, 0u);

  DecodeConfig one_step = f.cfg;
  one_step.total_steps = 2;
  EXPECT_TRUE(kv_drift(f.weights, f.prompt, one_step, no_cache()).empty());

  CachePolicy forced;
  forced.forced_state = CacheState::kFull;
  EXPECT_EQ(kv_drift(f.weights, f.prompt, f.cfg, forced).size(), series.size());
  EXPECT_THROW(kv_drift(f.weights, f.prompt, f.cfg, CachePolicy{}), TraceUnavailableError);
}

TEST(AnalysisCsv, Headers) {
  Fixture f;
  const auto traces = capture_attention(f.weights, f.prompt, f.cfg, no_cache(), {{0}, {0}});
  std::ostringstream att, mass, drift;
  write_attention_csv(att, traces);
  write_top_mass_csv(mass, traces, 0.5);
  write_kv_drift_csv(drift, kv_drift(f.weights, f.prompt, f.cfg, no_cache()));
  auto first_line = [](const std::ostringstream& s) { return s.str().substr(0, s.str().find('\n')); };
  EXPECT_EQ(first_line(att), "layer,step,query_pos,key_pos,weight");
  EXPECT_EQ(first_line(mass), "layer,step,query_pos,top_mass");
  EXPECT_EQ(first_line(drift), "block,pair,value");
  std::size_t lines = 0;
  for (char c : att.str()) lines += c == '\n';
  EXPECT_EQ(lines, 1 + 8 * 24u);
}

}  // namespace
}  // namespace dlmcache
