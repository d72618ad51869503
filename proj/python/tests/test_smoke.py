# Copyright 2026 The dlmcache Authors
# SPDX-License-Identifier: Apache-2.0

import json
import os
from pathlib import Path

import numpy as np
import pytest

import dlmcache as dc

DATA = Path(os.environ.get("DLMCACHE_TEST_DATA", Path(__file__).resolve().parents[2] / "tests" / "data"))


def tiny_config(max_len=64):
    cfg = dc.ModelConfig()
    cfg.vocab_size = 17
    cfg.d_model = 16
    cfg.n_heads = 2
    cfg.n_layers = 2
    cfg.d_ff = 32
    cfg.max_seq_len = max_len
    return cfg


def test_model_config_round_trip():
    cfg = tiny_config()
    again = dc.ModelConfig.from_json(cfg.to_json())
    assert again.d_model == 16 and again.mask_token_id == 16
    with pytest.raises(dc.ConfigError, match="bogus"):
        dc.ModelConfig.from_json(json.dumps({**json.loads(cfg.to_json()), "bogus": 1}))


def test_forward_shape_and_determinism():
    w = dc.ModelWeights(tiny_config())
    logits = dc.forward_full(w, [1, 2, 3, 16, 16])
    assert logits.shape == (5, 17)
    assert np.array_equal(logits, dc.forward_full(dc.ModelWeights(tiny_config()), [1, 2, 3, 16, 16]))


def test_state_machine():
    assert [int(dc.assign_cache_state(i, 1)) for i in range(4)] == [0, 1, 2, 2]
    assert dc.assign_cache_state(0, 0) == dc.CacheState.UPDATE


def test_eviction_keeps_floor_of_candidates():
    rng = np.random.default_rng(0)
    q = rng.standard_normal((8, 16))
    k = rng.standard_normal((40, 16))
    kept = dc.evict_bidirectional(q, k, k, offset=10, block_len=8, n_heads=2, retention_ratio=0.5)
    assert len(kept) == 16
    assert kept == sorted(kept)
    assert not any(10 <= i < 18 for i in kept)
    assert dc.evict_bidirectional(q, 3.0 * k, k, 10, 8, 2, 0.5) == kept


def test_maxpool():
    assert dc.maxpool_1d([1.0, 3.0, 2.0, 0.0], 3) == [3.0, 3.0, 3.0, 2.0]
    with pytest.raises(dc.ConfigError):
        dc.maxpool_1d([1.0], 2)


def test_decode_policies():
    w = dc.ModelWeights(tiny_config())
    cfg = dc.DecodeConfig(total_steps=8, gen_len=16, block_len=8)
    prompt = list(range(1, 9))
    none = dc.decode(w, prompt, cfg, dc.CachePolicy(dc.PolicyKind.NO_CACHE))
    sparse = dc.decode(w, prompt, cfg, dc.CachePolicy(dc.PolicyKind.SPARSE_BIDIRECTIONAL, 0.5))
    full = dc.decode(w, prompt, cfg, dc.CachePolicy(dc.PolicyKind.FULL_CACHE))
    dense = dc.decode(w, prompt, cfg, dc.CachePolicy(dc.PolicyKind.SPARSE_BIDIRECTIONAL, 1.0))
    assert len(none["tokens"]) == 24
    assert none["tokens"][:8] == prompt
    assert 16 not in none["tokens"]
    assert dense["tokens"] == full["tokens"]
    assert sparse["attention_multiply_adds"] < full["attention_multiply_adds"] < none["attention_multiply_adds"]
    assert sparse["peak_cache_entries"] == 2 * 2 * 8
    assert sparse["cache_writes"] == 2


def test_run_experiment_from_file():
    reports = dc.run_experiment(str(DATA / "small_experiment.json"))
    assert [r["policy"] for r in reports] == ["no_cache", "sparse_bidirectional"]
    assert all(r["tokens"] == 16 for r in reports)
    assert all(len(r["checksum"]) == 16 for r in reports)


def test_bad_config_raises():
    with pytest.raises(dc.ConfigError, match="retention"):
        dc.run_experiment(str(DATA / "unknown_key.json"))
