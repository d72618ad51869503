// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dlmcache/analysis.hpp"
#include "dlmcache/cache.hpp"
#include "dlmcache/decoder.hpp"
#include "dlmcache/errors.hpp"
#include "dlmcache/harness.hpp"
#include "dlmcache/model.hpp"
#include "dlmcache/numerics.hpp"

namespace py = pybind11;
using namespace dlmcache;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a, const char* name) {
  if (a.ndim() != 2) throw ShapeError(std::string(name) + " must be a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["policy"] = r.policy;
  d["repetition"] = r.repetition;
  d["tokens"] = r.tokens_generated;
  d["wall_seconds"] = r.wall_seconds;
  d["tps"] = r.throughput_tps;
  d["mul_adds"] = r.attention_multiply_adds;
  d["peak_cache_entries"] = r.peak_cache_entries;
  d["peak_cache_bytes"] = r.peak_cache_bytes;
  d["checksum"] = checksum_hex(r.checksum);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Block-wise masked diffusion decoding with sparse KV caches";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const Error& e) {
      error(e.what());
    }
  });

  py::enum_<PolicyKind>(m, "PolicyKind")
      .value("NO_CACHE", PolicyKind::kNoCache)
      .value("FULL_CACHE", PolicyKind::kFullCache)
      .value("PREFIX_SPARSE", PolicyKind::kPrefixSparse)
      .value("SPARSE_BIDIRECTIONAL", PolicyKind::kSparseBidirectional);
  py::enum_<CacheState>(m, "CacheState")
      .value("FULL", CacheState::kFull)
      .value("UPDATE", CacheState::kUpdate)
      .value("REUSE", CacheState::kReuse);
  py::enum_<UnmaskRule>(m, "UnmaskRule").value("CONFIDENCE", UnmaskRule::kConfidence).value("RANDOM", UnmaskRule::kRandom);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("d_model", &ModelConfig::d_model)
      .def_readwrite("n_heads", &ModelConfig::n_heads)
      .def_readwrite("n_layers", &ModelConfig::n_layers)
      .def_readwrite("d_ff", &ModelConfig::d_ff)
      .def_readwrite("max_seq_len", &ModelConfig::max_seq_len)
      .def_readwrite("init_seed", &ModelConfig::init_seed)
      .def_property_readonly("mask_token_id", &ModelConfig::mask_token_id)
      .def("validate", &ModelConfig::validate)
      .def("to_json", &ModelConfig::to_json_string)
      .def_static("from_json", &ModelConfig::from_json_string)
      .def_static("from_file", &ModelConfig::from_json_file);

  py::class_<ModelWeights>(m, "ModelWeights")
      .def(py::init(&init_weights), py::arg("config"))
      .def_property_readonly("config", [](const ModelWeights& w) { return w.config; });

  py::class_<EvictionConfig>(m, "EvictionConfig")
      .def(py::init<>())
      .def_readwrite("retention_ratio", &EvictionConfig::retention_ratio)
      .def_readwrite("kernel_size", &EvictionConfig::kernel_size);

  py::class_<CachePolicy>(m, "CachePolicy")
      .def(py::init([](PolicyKind kind, double r, std::size_t kernel, std::size_t delay) {
             CachePolicy p;
             p.kind = kind;
             p.eviction.retention_ratio = r;
             p.eviction.kernel_size = kernel;
             p.delay_steps = delay;
             return p;
           }),
           py::arg("kind") = PolicyKind::kSparseBidirectional, py::arg("retention_ratio") = 0.5,
           py::arg("kernel_size") = 3, py::arg("delay_steps") = 1)
      .def_readwrite("kind", &CachePolicy::kind)
      .def_readwrite("eviction", &CachePolicy::eviction)
      .def_readwrite("delay_steps", &CachePolicy::delay_steps)
      .def_readwrite("forced_state", &CachePolicy::forced_state)
      .def_property_readonly("name", &CachePolicy::name);

  py::class_<DecodeConfig>(m, "DecodeConfig")
      .def(py::init([](std::size_t total_steps, std::size_t gen_len, std::size_t block_len, UnmaskRule rule,
                       std::uint64_t seed) {
             return DecodeConfig{total_steps, gen_len, block_len, rule, seed};
           }),
           py::arg("total_steps") = 256, py::arg("gen_len") = 256, py::arg("block_len") = 32,
           py::arg("unmask_rule") = UnmaskRule::kConfidence, py::arg("rng_seed") = 2025)
      .def_readwrite("total_steps", &DecodeConfig::total_steps)
      .def_readwrite("gen_len", &DecodeConfig::gen_len)
      .def_readwrite("block_len", &DecodeConfig::block_len)
      .def_readwrite("unmask_rule", &DecodeConfig::unmask_rule)
      .def_readwrite("rng_seed", &DecodeConfig::rng_seed)
      .def_property_readonly("steps_per_block", &DecodeConfig::steps_per_block)
      .def("validate", &DecodeConfig::validate);

  m.def("assign_cache_state", [](std::size_t i, std::size_t x) { return assign_cache_state(i, x); },
        py::arg("step_in_block"), py::arg("delay"));

  m.def("maxpool_1d", [](std::vector<double> x, std::size_t kernel) { return maxpool_1d(x, kernel); },
        py::arg("values"), py::arg("kernel_size"));

  m.def(
      "forward_full",
      [](const ModelWeights& w, std::vector<int> tokens) { return to_array(forward_full(w, tokens).logits); },
      py::arg("weights"), py::arg("tokens"), "Logits for every position (L x vocab).");

  m.def(
      "evict_bidirectional",
      [](const Array& q_block, const Array& keys, const Array& values, std::size_t offset, std::size_t block_len,
         std::size_t n_heads, double retention_ratio, std::size_t kernel_size) {
        EvictionConfig cfg;
        cfg.retention_ratio = retention_ratio;
        cfg.kernel_size = kernel_size;
        return evict_bidirectional(0, to_matrix(q_block, "q_block"), to_matrix(keys, "keys"),
                                   to_matrix(values, "values"), offset, block_len, n_heads, cfg)
            .source_indices;
      },
      py::arg("q_block"), py::arg("keys"), py::arg("values"), py::arg("offset"), py::arg("block_len"),
      py::arg("n_heads"), py::arg("retention_ratio") = 0.5, py::arg("kernel_size") = 3,
      "Retained positions for one layer, ascending.");

  m.def(
      "decode",
      [](const ModelWeights& w, std::vector<int> prompt, const DecodeConfig& cfg, const CachePolicy& policy,
         bool count_ops) {
        DecodeResult res;
        {
          py::gil_scoped_release release;
          res = decode(w, prompt, cfg, policy, nullptr, count_ops);
        }
        py::dict d;
        d["tokens"] = res.state.tokens;
        d["attention_multiply_adds"] = res.report.attention_multiply_adds;
        d["linear_multiply_adds"] = res.report.linear_multiply_adds;
        d["peak_cache_entries"] = res.report.peak_cache_entries;
        d["cache_writes"] = res.report.cache_writes;
        d["eviction_sizes"] = res.report.eviction_sizes;
        d["checksum"] = checksum_hex(token_checksum(res.state.tokens));
        return d;
      },
      py::arg("weights"), py::arg("prompt"), py::arg("config"), py::arg("policy"), py::arg("count_ops") = true);

  m.def(
      "run_experiment",
      [](const std::string& path) {
        const ExperimentConfig cfg = ExperimentConfig::from_json_file(path);
        std::vector<RunReport> reports;
        {
          py::gil_scoped_release release;
          reports = run_experiment(cfg);
        }
        py::list out;
        for (const auto& r : reports) out.append(report_dict(r));
        return out;
      },
      py::arg("config_path"), "Runs every configured policy; one dict per run.");

  m.def("token_checksum", [](std::vector<int> tokens) { return checksum_hex(token_checksum(tokens)); });
}
