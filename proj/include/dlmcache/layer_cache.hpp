// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "dlmcache/numerics.hpp"

namespace dlmcache {

// Retained K/V rows for one layer. `source_indices` holds the original
// sequence position of each row, strictly increasing.
struct LayerCache {
  std::size_t layer = 0;
  Matrix keys;
  Matrix values;
  std::vector<std::size_t> source_indices;

  std::size_t size() const { return source_indices.size(); }
  bool empty() const { return source_indices.empty(); }
  bool operator==(const LayerCache&) const = default;
};

}  // namespace dlmcache
