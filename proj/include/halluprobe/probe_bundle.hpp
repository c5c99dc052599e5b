// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "halluprobe/probe.hpp"
#include "halluprobe/site.hpp"

namespace halluprobe {

/// Trained probes for one model, kept in canonical site order.
struct ProbeBundle {
  ModelConfig config;
  std::vector<ProbeModel> probes;

  const ProbeModel* find(const ProbeSite& site) const;
};

// A bundle lives in a directory as two files:
//   probes.json  manifest (format tag, version, model config, one entry per probe)
//   probes.bin   "HPWB" | u32 version | per probe in manifest order, f64 LE:
//                [PCA mean (d)] [PCA components (k x d, row-major)] w (k or d) | b
inline constexpr const char* kBundleManifest = "probes.json";
inline constexpr const char* kBundleWeights = "probes.bin";
inline constexpr std::uint32_t kBundleVersion = 1;

void write_probe_bundle(const ProbeBundle& bundle, const std::filesystem::path& directory);
ProbeBundle read_probe_bundle(const std::filesystem::path& directory);

}  // namespace halluprobe
