// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/site.hpp"

namespace halluprobe {

struct PlantedSite {
  ProbeSite site;
  double separation = 0;
};

/// Class-conditional Gaussian toy problem. Every feature is isotropic noise
/// of scale `noise_scale`; at a planted site the two classes are shifted by
/// +-separation/2 along one random unit direction of that site.
struct SyntheticSpec {
  ModelConfig config = desk_scale_config();
  std::uint64_t n_samples = 2000;
  std::vector<PlantedSite> planted;
  double noise_scale = 1.0;
  double label_prior = 0.5;
  std::uint64_t seed = 0;
  /// Split name; also salts the per-sample streams. Planted directions depend
  /// only on the seed, so splits sharing a seed share the same signal.
  std::string split = "train";
  /// Adds a label-correlated answer logprob to every trace.
  bool emit_logprob = false;
};

void validate_spec(const SyntheticSpec& spec);

/// Desk-scale benchmark: default config, n = 2000, five planted sites
/// (two hidden-state, three heads) at separation 3.0, 30% correct answers,
/// answer logprobs emitted.
SyntheticSpec desk_benchmark_spec(std::uint64_t seed = 0);

/// Deterministic in `spec`; the worker count never changes the output.
TraceDataset generate(const SyntheticSpec& spec, unsigned workers = 1);

/// Unit direction along which the classes separate at `site`.
Eigen::VectorXd planted_direction(const SyntheticSpec& spec, const ProbeSite& site);

// Key-value config, one `key = value` per line, `#` starts a comment:
//   num_hidden_sites num_layers heads_per_layer hidden_dim head_dim
//   n_samples noise_scale label_prior seed split emit_logprob
//   planted = hs:3@3.0, ah:2:1@3.0     (may repeat; entries accumulate)
SyntheticSpec parse_synthetic_spec(std::istream& in);
SyntheticSpec read_synthetic_spec(const std::filesystem::path& path);
std::string format_synthetic_spec(const SyntheticSpec& spec);

}  // namespace halluprobe
