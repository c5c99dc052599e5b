// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/activation_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "halluprobe/error.hpp"

namespace halluprobe {

static_assert(std::endian::native == std::endian::little, "trace I/O assumes a little-endian host");

namespace {

constexpr std::uint8_t kUnlabeled = 255;

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    raw(bytes, sizeof(T));
  }

  void raw(const char* data, std::size_t size) {
    out_.write(data, static_cast<std::streamsize>(size));
    if (!out_) throw Error(ErrorCode::IoFailure, "write failed");
    written_ += size;
  }

  std::uint64_t written() const { return written_; }

 private:
  std::ostream& out_;
  std::uint64_t written_ = 0;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    char bytes[sizeof(T)];
    raw(bytes, sizeof(T), what);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  void raw(char* data, std::size_t size, const char* what) {
    in_.read(data, static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in_.gcount()) != size) {
      throw Error(ErrorCode::TruncatedFile, std::string("unexpected end of file reading ") + what);
    }
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

}  // namespace

bool TraceDataset::labeled() const {
  for (const auto& t : traces) {
    if (!t.label) return false;
  }
  return true;
}

Eigen::VectorXd aggregate_token_activations(std::span<const Eigen::VectorXd> step_vectors) {
  if (step_vectors.empty()) {
    throw Error(ErrorCode::EmptySequence, "no generation steps to aggregate");
  }
  const Eigen::Index dim = step_vectors.front().size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& step : step_vectors) {
    if (step.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "generation steps have differing vector lengths");
    }
    if (!step.allFinite()) throw Error(ErrorCode::NonFiniteInput, "step vector contains NaN or Inf");
    sum += step;
  }
  return sum / static_cast<double>(step_vectors.size());
}

void validate_dataset(const TraceDataset& dataset) {
  const auto& config = dataset.config;
  if ((config.num_hidden_sites > 0 && config.hidden_dim == 0) ||
      (config.num_head_sites() > 0 && config.head_dim == 0)) {
    throw Error(ErrorCode::InvariantViolation, "site kinds present with zero vector length");
  }
  const std::size_t length = config.feature_length();
  std::unordered_set<std::string> ids;
  ids.reserve(dataset.traces.size());
  for (const auto& trace : dataset.traces) {
    if (trace.sample_id.size() > 0xFFFF) {
      throw Error(ErrorCode::InvariantViolation, "sample id longer than 65535 bytes");
    }
    if (!ids.insert(trace.sample_id).second) {
      throw Error(ErrorCode::InvariantViolation, "duplicate sample id '" + trace.sample_id + "'");
    }
    if (trace.features.size() != length) {
      throw Error(ErrorCode::InvariantViolation,
                  "sample '" + trace.sample_id + "' has " + std::to_string(trace.features.size()) +
                      " features, config requires " + std::to_string(length));
    }
    for (float v : trace.features) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::InvariantViolation, "sample '" + trace.sample_id + "' has a non-finite feature");
      }
    }
    if (trace.answer_logprob && !std::isfinite(*trace.answer_logprob)) {
      throw Error(ErrorCode::InvariantViolation, "sample '" + trace.sample_id + "' has a non-finite logprob");
    }
  }
}

std::uint64_t write_trace_file(const TraceDataset& dataset, std::ostream& out) {
  validate_dataset(dataset);
  ByteWriter w(out);
  const auto& c = dataset.config;
  w.raw(kTraceMagic, 4);
  w.put<std::uint32_t>(kTraceVersion);
  w.put<std::uint32_t>(c.num_hidden_sites);
  w.put<std::uint32_t>(c.num_layers);
  w.put<std::uint32_t>(c.heads_per_layer);
  w.put<std::uint32_t>(c.hidden_dim);
  w.put<std::uint32_t>(c.head_dim);
  w.put<std::uint64_t>(dataset.traces.size());
  for (const auto& t : dataset.traces) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.sample_id.size()));
    w.raw(t.sample_id.data(), t.sample_id.size());
    w.put<std::uint8_t>(t.label ? static_cast<std::uint8_t>(*t.label) : kUnlabeled);
    w.put<std::uint8_t>(t.answer_logprob ? 1 : 0);
    if (t.answer_logprob) w.put<double>(*t.answer_logprob);
    w.raw(reinterpret_cast<const char*>(t.features.data()), t.features.size() * sizeof(float));
  }
  return w.written();
}

std::uint64_t write_trace_file(const TraceDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  const auto bytes = write_trace_file(dataset, out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "flush failed for '" + path.string() + "'");
  return bytes;
}

TraceDataset read_trace_file(std::istream& in, std::string split_tag) {
  ByteReader r(in);
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, kTraceMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "not a trace file");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kTraceVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "trace format version " + std::to_string(version));
  }
  TraceDataset dataset;
  dataset.split_tag = std::move(split_tag);
  auto& c = dataset.config;
  c.num_hidden_sites = r.get<std::uint32_t>("config");
  c.num_layers = r.get<std::uint32_t>("config");
  c.heads_per_layer = r.get<std::uint32_t>("config");
  c.hidden_dim = r.get<std::uint32_t>("config");
  c.head_dim = r.get<std::uint32_t>("config");
  const auto count = r.get<std::uint64_t>("sample count");
  const std::size_t length = c.feature_length();

  // Grow incrementally so a corrupt count cannot trigger a huge allocation.
  for (std::uint64_t i = 0; i < count; ++i) {
    ActivationTrace t;
    const auto id_len = r.get<std::uint16_t>("sample id length");
    t.sample_id.resize(id_len);
    r.raw(t.sample_id.data(), id_len, "sample id");
    const auto label = r.get<std::uint8_t>("label");
    if (label == 0 || label == 1) {
      t.label = static_cast<Label>(label);
    } else if (label != kUnlabeled) {
      throw Error(ErrorCode::InvariantViolation, "invalid label byte " + std::to_string(label));
    }
    const auto has_logprob = r.get<std::uint8_t>("logprob flag");
    if (has_logprob > 1) throw Error(ErrorCode::InvariantViolation, "invalid logprob flag");
    if (has_logprob) t.answer_logprob = r.get<double>("logprob");
    t.features.resize(length);
    r.raw(reinterpret_cast<char*>(t.features.data()), length * sizeof(float), "site vectors");
    dataset.traces.push_back(std::move(t));
  }
  if (!r.at_end()) throw Error(ErrorCode::InvariantViolation, "trailing bytes after last sample");
  validate_dataset(dataset);
  return dataset;
}

TraceDataset read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  return read_trace_file(in, path.stem().string());
}

Eigen::MatrixXd site_matrix(const TraceDataset& dataset, const ProbeSite& site) {
  const auto& config = dataset.config;
  const auto dim = static_cast<Eigen::Index>(config.site_dim(site));
  const auto offset = config.site_offset(site);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(dataset.size()), dim);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXf>(dataset.traces[i].features.data() + offset, dim).cast<double>();
  }
  return X;
}

Eigen::VectorXd label_vector(const TraceDataset& dataset) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& label = dataset.traces[i].label;
    if (!label) {
      throw Error(ErrorCode::UnlabeledData, "sample '" + dataset.traces[i].sample_id + "' has no label");
    }
    y[static_cast<Eigen::Index>(i)] = *label == Label::Correct ? 1.0 : 0.0;
  }
  return y;
}

}  // namespace halluprobe
