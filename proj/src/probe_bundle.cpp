// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/probe_bundle.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "halluprobe/error.hpp"

namespace halluprobe {

using nlohmann::json;

namespace {

void put_doubles(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void get_doubles(std::ifstream& in, double* data, std::size_t count) {
  const auto bytes = static_cast<std::streamsize>(count * sizeof(double));
  in.read(reinterpret_cast<char*>(data), bytes);
  if (in.gcount() != bytes) throw Error(ErrorCode::TruncatedFile, "probe weights blob is truncated");
}

json config_to_json(const ModelConfig& c) {
  return {{"num_hidden_sites", c.num_hidden_sites},
          {"num_layers", c.num_layers},
          {"heads_per_layer", c.heads_per_layer},
          {"hidden_dim", c.hidden_dim},
          {"head_dim", c.head_dim}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.num_hidden_sites = j.at("num_hidden_sites").get<std::uint32_t>();
  c.num_layers = j.at("num_layers").get<std::uint32_t>();
  c.heads_per_layer = j.at("heads_per_layer").get<std::uint32_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::uint32_t>();
  c.head_dim = j.at("head_dim").get<std::uint32_t>();
  return c;
}

}  // namespace

const ProbeModel* ProbeBundle::find(const ProbeSite& site) const {
  auto it = std::lower_bound(probes.begin(), probes.end(), site,
                             [](const ProbeModel& p, const ProbeSite& s) { return p.site < s; });
  return it != probes.end() && it->site == site ? &*it : nullptr;
}

void write_probe_bundle(const ProbeBundle& bundle, const std::filesystem::path& directory) {
  for (std::size_t i = 1; i < bundle.probes.size(); ++i) {
    if (!(bundle.probes[i - 1].site < bundle.probes[i].site)) {
      throw Error(ErrorCode::InvariantViolation, "bundle probes must be distinct and in canonical order");
    }
  }
  std::filesystem::create_directories(directory);
  std::ofstream blob(directory / kBundleWeights, std::ios::binary | std::ios::trunc);
  if (!blob) throw Error(ErrorCode::IoFailure, "cannot write " + (directory / kBundleWeights).string());
  blob.write("HPWB", 4);
  blob.write(reinterpret_cast<const char*>(&kBundleVersion), sizeof(kBundleVersion));
  std::uint64_t offset = 8;

  json entries = json::array();
  for (const auto& probe : bundle.probes) {
    const auto& site = probe.site;
    if (!bundle.config.contains(site)) {
      throw Error(ErrorCode::ConfigMismatch, "probe site " + to_string(site) + " not in bundle config");
    }
    json entry = {{"site", to_string(site)},
                  {"kind", site.is_hidden() ? "hidden_state" : "attention_head"},
                  {"layer", site.layer},
                  {"input_dim", probe.input_dim()},
                  {"feature_dim", probe.logreg.dim()},
                  {"lambda", probe.logreg.lambda},
                  {"iterations", probe.logreg.iterations},
                  {"converged", probe.logreg.converged},
                  {"offset", offset}};
    if (!site.is_hidden()) entry["head"] = site.head;
    std::uint64_t doubles = 0;
    if (probe.pca) {
      const auto& pca = *probe.pca;
      if (pca.num_components() != probe.logreg.dim()) {
        throw Error(ErrorCode::InvariantViolation, "PCA output does not match probe weight length");
      }
      entry["pca_components"] = pca.num_components();
      entry["pca_degenerate"] = pca.degenerate;
      entry["explained_variance_ratio"] =
          std::vector<double>(pca.explained_variance_ratio.data(),
                              pca.explained_variance_ratio.data() + pca.explained_variance_ratio.size());
      put_doubles(blob, pca.mean.data(), static_cast<std::size_t>(pca.mean.size()));
      put_doubles(blob, pca.components.data(), static_cast<std::size_t>(pca.components.size()));
      doubles += static_cast<std::uint64_t>(pca.mean.size() + pca.components.size());
    }
    put_doubles(blob, probe.logreg.w.data(), static_cast<std::size_t>(probe.logreg.w.size()));
    put_doubles(blob, &probe.logreg.b, 1);
    doubles += static_cast<std::uint64_t>(probe.logreg.w.size()) + 1;
    entry["count"] = doubles;
    offset += doubles * sizeof(double);
    entries.push_back(std::move(entry));
  }
  blob.flush();
  if (!blob) throw Error(ErrorCode::IoFailure, "failed writing probe weights");

  json manifest = {{"format", "halluprobe-bundle"},
                   {"version", kBundleVersion},
                   {"config", config_to_json(bundle.config)},
                   {"weights", kBundleWeights},
                   {"probes", std::move(entries)}};
  std::ofstream out(directory / kBundleManifest, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + (directory / kBundleManifest).string());
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing probe manifest");
}

ProbeBundle read_probe_bundle(const std::filesystem::path& directory) {
  std::ifstream in(directory / kBundleManifest);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + (directory / kBundleManifest).string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("probe manifest: ") + e.what());
  }

  try {
    if (manifest.at("format") != "halluprobe-bundle") throw Error(ErrorCode::BadMagic, "not a probe bundle");
    if (manifest.at("version").get<std::uint32_t>() != kBundleVersion) {
      throw Error(ErrorCode::UnsupportedVersion, "probe bundle version");
    }
    ProbeBundle bundle;
    bundle.config = config_from_json(manifest.at("config"));

    std::ifstream blob(directory / manifest.at("weights").get<std::string>(), std::ios::binary);
    if (!blob) throw Error(ErrorCode::IoFailure, "cannot open probe weights");
    char magic[4];
    std::uint32_t version = 0;
    blob.read(magic, 4);
    blob.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!blob || std::memcmp(magic, "HPWB", 4) != 0) throw Error(ErrorCode::BadMagic, "bad weights blob");
    if (version != kBundleVersion) throw Error(ErrorCode::UnsupportedVersion, "weights blob version");

    for (const auto& entry : manifest.at("probes")) {
      ProbeModel probe;
      probe.site = parse_site(entry.at("site").get<std::string>());
      if (!bundle.config.contains(probe.site)) {
        throw Error(ErrorCode::ConfigMismatch, "probe site outside bundle config");
      }
      const auto input_dim = entry.at("input_dim").get<Eigen::Index>();
      const auto feature_dim = entry.at("feature_dim").get<Eigen::Index>();
      if (input_dim != static_cast<Eigen::Index>(bundle.config.site_dim(probe.site))) {
        throw Error(ErrorCode::ConfigMismatch, "probe input length disagrees with config");
      }
      blob.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
      if (entry.contains("pca_components")) {
        PcaModeld pca;
        const auto k = entry.at("pca_components").get<Eigen::Index>();
        if (k != feature_dim) throw Error(ErrorCode::InvariantViolation, "PCA output mismatch");
        pca.degenerate = entry.at("pca_degenerate").get<bool>();
        auto ratios = entry.at("explained_variance_ratio").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(ratios.size()) != k) {
          throw Error(ErrorCode::InvariantViolation, "variance ratio count mismatch");
        }
        pca.explained_variance_ratio = Eigen::Map<Eigen::VectorXd>(ratios.data(), k);
        pca.mean.resize(input_dim);
        pca.components.resize(k, input_dim);
        get_doubles(blob, pca.mean.data(), static_cast<std::size_t>(input_dim));
        get_doubles(blob, pca.components.data(), static_cast<std::size_t>(k * input_dim));
        probe.pca = std::move(pca);
      } else if (feature_dim != input_dim) {
        throw Error(ErrorCode::InvariantViolation, "probe without PCA must use raw features");
      }
      probe.logreg.w.resize(feature_dim);
      get_doubles(blob, probe.logreg.w.data(), static_cast<std::size_t>(feature_dim));
      get_doubles(blob, &probe.logreg.b, 1);
      probe.logreg.lambda = entry.at("lambda").get<double>();
      probe.logreg.iterations = entry.at("iterations").get<int>();
      probe.logreg.converged = entry.at("converged").get<bool>();
      if (!bundle.probes.empty() && !(bundle.probes.back().site < probe.site)) {
        throw Error(ErrorCode::InvariantViolation, "bundle probes out of canonical order");
      }
      bundle.probes.push_back(std::move(probe));
    }
    return bundle;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("probe manifest: ") + e.what());
  }
}

}  // namespace halluprobe
