// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/site.hpp"
#include "halluprobe/synthetic.hpp"
#include "support.hpp"

using namespace halluprobe;
using halluprobe::test::error_of;

namespace {

std::string to_bytes(const TraceDataset& ds) {
  std::ostringstream out(std::ios::binary);
  write_trace_file(ds, out);
  return out.str();
}

TraceDataset from_bytes(const std::string& bytes, std::string tag = {}) {
  std::istringstream in(bytes, std::ios::binary);
  return read_trace_file(in, std::move(tag));
}

TraceDataset tiny_dataset() {
  TraceDataset ds;
  ds.config = {1, 1, 2, 2, 1};  // hs:0 (2), ah:0:0 (1), ah:0:1 (1)
  ds.split_tag = "t";
  ds.traces.push_back({"a", {1.0f, -2.5f, 3.0f, 0.125f}, Label::Correct, -0.25});
  ds.traces.push_back({"b", {0.0f, 1e-30f, -0.0f, 7.0f}, Label::Hallucination, std::nullopt});
  ds.traces.push_back({"c", {4.0f, 4.0f, 4.0f, 4.0f}, std::nullopt, -1e-9});
  return ds;
}

}  // namespace

TEST_SUITE("sites") {
  TEST_CASE("reference-scale census is 1321 sites, stable across enumerations") {
    const auto config = reference_scale_config();
    CHECK(config.total_sites() == 41 + 40 * 32);
    const auto a = enumerate_sites(config);
    const auto b = enumerate_sites(config);
    CHECK(a.size() == 1321);
    CHECK(a == b);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(a.front() == ProbeSite::hidden(0));
    CHECK(a[40] == ProbeSite::hidden(40));
    CHECK(a[41] == ProbeSite::attention(0, 0));
    CHECK(a.back() == ProbeSite::attention(39, 31));
  }

  TEST_CASE("canonical order: hidden by layer, then heads by (layer, head)") {
    CHECK(ProbeSite::hidden(40) < ProbeSite::attention(0, 0));
    CHECK(ProbeSite::attention(0, 31) < ProbeSite::attention(1, 0));
    CHECK(ProbeSite::hidden(2) < ProbeSite::hidden(3));
  }

  TEST_CASE("site index and offset agree with enumeration") {
    const ModelConfig config = desk_scale_config();
    const auto sites = enumerate_sites(config);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      CHECK(config.site_index(sites[i]) == i);
      CHECK(config.site_at(i) == sites[i]);
      CHECK(config.site_offset(sites[i]) == offset);
      offset += config.site_dim(sites[i]);
    }
    CHECK(offset == config.feature_length());
    CHECK(error_of([&] { (void)config.site_index(ProbeSite::attention(8, 0)); }) == ErrorCode::ConfigMismatch);
    CHECK(error_of([&] { (void)config.site_index(ProbeSite::hidden(8)); }) == ErrorCode::ConfigMismatch);
  }

  TEST_CASE("site text form round-trips") {
    for (const auto& s : enumerate_sites(desk_scale_config())) CHECK(parse_site(to_string(s)) == s);
    CHECK(to_string(ProbeSite::attention(17, 9)) == "ah:17:9");
    CHECK(to_string(ProbeSite::hidden(17)) == "hs:17");
    CHECK(error_of([] { (void)parse_site("xx:1"); }) == ErrorCode::ParseError);
    CHECK(error_of([] { (void)parse_site("ah:1"); }) == ErrorCode::ParseError);
    CHECK(error_of([] { (void)parse_site("hs:-1"); }) == ErrorCode::ParseError);
  }
}

TEST_SUITE("aggregate_token_activations") {
  TEST_CASE("single step is the identity") {
    std::vector<Eigen::VectorXd> steps{Eigen::Vector2d(1.0, 3.0)};
    CHECK(aggregate_token_activations(steps) == Eigen::Vector2d(1.0, 3.0));
  }

  TEST_CASE("two-point mean") {
    std::vector<Eigen::VectorXd> steps{Eigen::Vector2d(1.0, 3.0), Eigen::Vector2d(3.0, 5.0)};
    CHECK(aggregate_token_activations(steps) == Eigen::Vector2d(2.0, 4.0));
  }

  TEST_CASE("errors") {
    CHECK(error_of([] { aggregate_token_activations({}); }) == ErrorCode::EmptySequence);
    std::vector<Eigen::VectorXd> ragged{Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)};
    CHECK(error_of([&] { aggregate_token_activations(ragged); }) == ErrorCode::DimensionMismatch);
    std::vector<Eigen::VectorXd> nan{Eigen::Vector2d(1, std::numeric_limits<double>::quiet_NaN())};
    CHECK(error_of([&] { aggregate_token_activations(nan); }) == ErrorCode::NonFiniteInput);
    std::vector<Eigen::VectorXd> inf{Eigen::Vector2d(1, 2), Eigen::Vector2d(std::numeric_limits<double>::infinity(), 0)};
    CHECK(error_of([&] { aggregate_token_activations(inf); }) == ErrorCode::NonFiniteInput);
  }

  TEST_CASE("permutation invariant over steps") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Eigen::VectorXd> steps(1 + trial % 9, Eigen::VectorXd(5));
      for (auto& v : steps)
        for (Eigen::Index j = 0; j < 5; ++j) v(j) = g(rng);
      const Eigen::VectorXd base = aggregate_token_activations(steps);
      std::shuffle(steps.begin(), steps.end(), rng);
      CHECK((aggregate_token_activations(steps) - base).cwiseAbs().maxCoeff() <= 1e-14);
    }
  }
}

TEST_SUITE("trace file") {
  TEST_CASE("empty dataset writes a header-only file that reads back equal") {
    TraceDataset ds;
    ds.config = desk_scale_config();
    const auto bytes = to_bytes(ds);
    CHECK(bytes.size() == 4 + 4 + 5 * 4 + 8);
    CHECK(bytes.substr(0, 4) == "HPRB");
    CHECK(from_bytes(bytes) == ds);
  }

  TEST_CASE("round trip is exact on every float bit and stable on rewrite") {
    const auto ds = tiny_dataset();
    const auto bytes = to_bytes(ds);
    const auto back = from_bytes(bytes, "t");
    CHECK(back == ds);
    CHECK(std::signbit(back.traces[1].features[2]));
    CHECK(to_bytes(back) == bytes);
  }

  TEST_CASE("byte layout of one sample") {
    TraceDataset ds;
    ds.config = {1, 0, 0, 1, 0};
    ds.traces.push_back({"xy", {1.5f}, Label::Correct, -0.5});
    const auto bytes = to_bytes(ds);
    std::size_t at = 4;
    auto u32 = [&] {
      std::uint32_t v;
      std::memcpy(&v, bytes.data() + at, 4);
      at += 4;
      return v;
    };
    CHECK(u32() == 1);  // version
    CHECK(u32() == 1);
    CHECK(u32() == 0);
    CHECK(u32() == 0);
    CHECK(u32() == 1);
    CHECK(u32() == 0);
    std::uint64_t count;
    std::memcpy(&count, bytes.data() + at, 8);
    at += 8;
    CHECK(count == 1);
    CHECK(static_cast<unsigned char>(bytes[at]) == 2);
    CHECK(bytes[at + 1] == 0);
    CHECK(bytes.substr(at + 2, 2) == "xy");
    at += 4;
    CHECK(bytes[at++] == 1);  // label
    CHECK(bytes[at++] == 1);  // has_logprob
    double lp;
    std::memcpy(&lp, bytes.data() + at, 8);
    at += 8;
    CHECK(lp == -0.5);
    float f;
    std::memcpy(&f, bytes.data() + at, 4);
    at += 4;
    CHECK(f == 1.5f);
    CHECK(at == bytes.size());
  }

  TEST_CASE("synthetic 2-sample dataset round-trips bit for bit") {
    auto spec = desk_benchmark_spec(11);
    spec.n_samples = 2;
    const auto ds = generate(spec);
    const auto bytes = to_bytes(ds);
    const auto back = from_bytes(bytes, ds.split_tag);
    CHECK(back == ds);
    CHECK(to_bytes(back) == bytes);
  }

  TEST_CASE("file path round trip takes split tag from the stem") {
    const auto dir = test::scratch_dir("trace-path");
    const auto ds = tiny_dataset();
    const auto n = write_trace_file(ds, dir / "t.htr");
    CHECK(n == std::filesystem::file_size(dir / "t.htr"));
    CHECK(read_trace_file(dir / "t.htr") == ds);
    CHECK(error_of([&] { read_trace_file(dir / "missing.htr"); }) == ErrorCode::IoFailure);
  }

  TEST_CASE("invalid datasets are rejected on write") {
    auto ds = tiny_dataset();
    ds.traces[0].features[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK(error_of([&] { to_bytes(ds); }) == ErrorCode::InvariantViolation);
    ds = tiny_dataset();
    ds.traces[1].features[0] = std::numeric_limits<float>::infinity();
    CHECK(error_of([&] { to_bytes(ds); }) == ErrorCode::InvariantViolation);
    ds = tiny_dataset();
    ds.traces[2].sample_id = "a";
    CHECK(error_of([&] { to_bytes(ds); }) == ErrorCode::InvariantViolation);
    ds = tiny_dataset();
    ds.traces[0].features.pop_back();
    CHECK(error_of([&] { to_bytes(ds); }) == ErrorCode::InvariantViolation);
    ds = tiny_dataset();
    ds.traces[0].answer_logprob = std::numeric_limits<double>::quiet_NaN();
    CHECK(error_of([&] { to_bytes(ds); }) == ErrorCode::InvariantViolation);
  }

  TEST_CASE("corrupted magic and version") {
    auto bytes = to_bytes(tiny_dataset());
    auto bad = bytes;
    bad[0] = 'X';
    CHECK(error_of([&] { from_bytes(bad); }) == ErrorCode::BadMagic);
    bad = bytes;
    bad[4] = 2;
    CHECK(error_of([&] { from_bytes(bad); }) == ErrorCode::UnsupportedVersion);
    CHECK(error_of([&] { from_bytes("HP"); }) == ErrorCode::TruncatedFile);
  }

  TEST_CASE("truncation at any offset past the header is detected") {
    auto spec = desk_benchmark_spec(3);
    spec.n_samples = 3;
    const auto bytes = to_bytes(generate(spec));
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> cut(36, bytes.size() - 1);
    for (int trial = 0; trial < 100; ++trial) {
      const auto at = cut(rng);
      CHECK(error_of([&] { from_bytes(bytes.substr(0, at)); }) == ErrorCode::TruncatedFile);
    }
  }

  TEST_CASE("reader rejects bad label and flag bytes and trailing data") {
    TraceDataset ds;
    ds.config = {1, 0, 0, 1, 0};
    ds.traces.push_back({"q", {0.5f}, Label::Correct, std::nullopt});
    const auto bytes = to_bytes(ds);
    const std::size_t label_at = 36 + 2 + 1;
    auto bad = bytes;
    bad[label_at] = 7;
    CHECK(error_of([&] { from_bytes(bad); }) == ErrorCode::InvariantViolation);
    bad = bytes;
    bad[label_at + 1] = 3;
    CHECK(error_of([&] { from_bytes(bad); }) == ErrorCode::InvariantViolation);
    CHECK(error_of([&] { from_bytes(bytes + "x"); }) == ErrorCode::InvariantViolation);
    bad = bytes;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bad.data() + bad.size() - 4, &nan, 4);
    CHECK(error_of([&] { from_bytes(bad); }) == ErrorCode::InvariantViolation);
  }

  TEST_CASE("unlabeled samples are preserved") {
    const auto back = from_bytes(to_bytes(tiny_dataset()));
    CHECK_FALSE(back.traces[2].label.has_value());
    CHECK_FALSE(back.labeled());
    CHECK(error_of([&] { label_vector(back); }) == ErrorCode::UnlabeledData);
  }
}

TEST_SUITE("site views") {
  TEST_CASE("site_matrix widens to double in sample order") {
    const auto ds = tiny_dataset();
    const Eigen::MatrixXd hs = site_matrix(ds, ProbeSite::hidden(0));
    CHECK(hs.rows() == 3);
    CHECK(hs.cols() == 2);
    CHECK(hs(0, 1) == -2.5);
    CHECK(hs(1, 1) == static_cast<double>(1e-30f));
    const Eigen::MatrixXd h1 = site_matrix(ds, ProbeSite::attention(0, 1));
    CHECK(h1.cols() == 1);
    CHECK(h1(0, 0) == 0.125);
    CHECK(h1(1, 0) == 7.0);
    auto v = ds.traces[0].site_vector(ds.config, ProbeSite::attention(0, 0));
    CHECK(v.size() == 1);
    CHECK(v(0) == 3.0f);
  }
}
