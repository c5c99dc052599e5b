// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit tests. Everything here is test-only.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/error.hpp"
#include "halluprobe/probe.hpp"

namespace halluprobe::test {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("halluprobe-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Code of the halluprobe::Error thrown by `fn`, or nullopt if it returns normally.
template <typename Fn>
std::optional<ErrorCode> error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// One-member config whose only site is `ah:0:0` of width `dim`.
inline ModelConfig single_head_config(std::uint32_t dim) { return {0, 1, 1, 0, dim}; }

/// Probe on `site` that ignores its input and always predicts sigmoid(b).
inline ProbeModel constant_probe(const ProbeSite& site, Eigen::Index dim, double b) {
  ProbeModel p;
  p.site = site;
  p.logreg.w = Eigen::VectorXd::Zero(dim);
  p.logreg.b = b;
  return p;
}

/// Probe on a head site reading the first coordinate: predict = sigmoid(x0 * w0 + b).
inline ProbeModel linear_probe(const ProbeSite& site, Eigen::Index dim, double w0, double b) {
  ProbeModel p = constant_probe(site, dim, b);
  p.logreg.w(0) = w0;
  return p;
}

inline double logit_of(double p) { return std::log(p / (1.0 - p)); }

}  // namespace halluprobe::test
