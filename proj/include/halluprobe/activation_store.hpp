// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "halluprobe/site.hpp"

namespace halluprobe {

enum class Label : std::uint8_t { Hallucination = 0, Correct = 1 };

/// One answered question: the mean last-position activation of every probe
/// site, concatenated in canonical site order and stored as 32-bit floats.
struct ActivationTrace {
  std::string sample_id;
  std::vector<float> features;
  std::optional<Label> label;
  std::optional<double> answer_logprob;

  /// View of one site's vector; the config supplies the layout.
  Eigen::Map<const Eigen::VectorXf> site_vector(const ModelConfig& config, const ProbeSite& site) const {
    return {features.data() + config.site_offset(site), static_cast<Eigen::Index>(config.site_dim(site))};
  }

  friend bool operator==(const ActivationTrace&, const ActivationTrace&) = default;
};

struct TraceDataset {
  ModelConfig config;
  std::vector<ActivationTrace> traces;
  std::string split_tag;

  std::size_t size() const { return traces.size(); }
  bool labeled() const;

  friend bool operator==(const TraceDataset&, const TraceDataset&) = default;
};

/// Elementwise mean over generation steps of the last-position activation.
Eigen::VectorXd aggregate_token_activations(std::span<const Eigen::VectorXd> step_vectors);

/// Throws InvariantViolation when the dataset breaks a structural rule
/// (vector length, finiteness, unique ids, id length).
void validate_dataset(const TraceDataset& dataset);

/// Serialized trace format, all integers little-endian:
///   "HPRB" | u32 version=1 | u32 x5 model config | u64 sample count
///   per sample: u16 id length, id bytes | u8 label (0, 1, 255=unlabeled)
///               | u8 has_logprob [f64 logprob] | f32 features, canonical order
inline constexpr char kTraceMagic[4] = {'H', 'P', 'R', 'B'};
inline constexpr std::uint32_t kTraceVersion = 1;

std::uint64_t write_trace_file(const TraceDataset& dataset, std::ostream& out);
std::uint64_t write_trace_file(const TraceDataset& dataset, const std::filesystem::path& path);

TraceDataset read_trace_file(std::istream& in, std::string split_tag = {});
/// The split tag of the returned dataset is the file stem.
TraceDataset read_trace_file(const std::filesystem::path& path);

/// n x dim matrix of one site's vectors, promoted to double.
Eigen::MatrixXd site_matrix(const TraceDataset& dataset, const ProbeSite& site);

/// 0/1 label vector; throws UnlabeledData if any trace lacks a label.
Eigen::VectorXd label_vector(const TraceDataset& dataset);

}  // namespace halluprobe
