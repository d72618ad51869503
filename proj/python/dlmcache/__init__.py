# Copyright 2026 The dlmcache Authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the dlmcache decoding engine."""

from ._core import (
    CachePolicy,
    CacheState,
    ConfigError,
    DecodeConfig,
    Error,
    EvictionConfig,
    ModelConfig,
    ModelWeights,
    PolicyKind,
    UnmaskRule,
    assign_cache_state,
    decode,
    evict_bidirectional,
    forward_full,
    maxpool_1d,
    run_experiment,
    token_checksum,
)

__all__ = [
    "CachePolicy",
    "CacheState",
    "ConfigError",
    "DecodeConfig",
    "Error",
    "EvictionConfig",
    "ModelConfig",
    "ModelWeights",
    "PolicyKind",
    "UnmaskRule",
    "assign_cache_state",
    "decode",
    "evict_bidirectional",
    "forward_full",
    "maxpool_1d",
    "run_experiment",
    "token_checksum",
]
__version__ = "0.1.0"
