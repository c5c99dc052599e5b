// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

#include "halluprobe/error.hpp"
#include "halluprobe/parallel.hpp"
#include "halluprobe/random.hpp"

namespace halluprobe {

namespace {

constexpr std::uint64_t kDirectionSalt = 0x5EEDD1EC7104ULL;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof()) {
    throw Error(ErrorCode::InvalidSpec, "bad value '" + value + "' for key '" + key + "'");
  }
  return out;
}

}  // namespace

void validate_spec(const SyntheticSpec& spec) {
  if (spec.n_samples < 2) throw Error(ErrorCode::InvalidSpec, "n_samples must be at least 2");
  if (!(spec.noise_scale > 0.0) || !std::isfinite(spec.noise_scale)) {
    throw Error(ErrorCode::InvalidSpec, "noise_scale must be positive");
  }
  if (!(spec.label_prior > 0.0 && spec.label_prior < 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "label_prior must lie in (0, 1)");
  }
  const auto& c = spec.config;
  if (c.total_sites() == 0) throw Error(ErrorCode::InvalidSpec, "config has no sites");
  if ((c.num_hidden_sites > 0 && c.hidden_dim == 0) || (c.num_head_sites() > 0 && c.head_dim == 0)) {
    throw Error(ErrorCode::InvalidSpec, "site vectors must have positive length");
  }
  std::vector<ProbeSite> seen;
  for (const auto& p : spec.planted) {
    if (!c.contains(p.site)) throw Error(ErrorCode::InvalidSpec, "planted site " + to_string(p.site) + " not in config");
    if (!(p.separation >= 0.0) || !std::isfinite(p.separation)) {
      throw Error(ErrorCode::InvalidSpec, "separation must be finite and non-negative");
    }
    if (std::find(seen.begin(), seen.end(), p.site) != seen.end()) {
      throw Error(ErrorCode::InvalidSpec, "site " + to_string(p.site) + " planted twice");
    }
    seen.push_back(p.site);
  }
}

SyntheticSpec desk_benchmark_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.label_prior = 0.3;
  spec.emit_logprob = true;
  spec.planted = {{ProbeSite::hidden(2), 3.0},
                  {ProbeSite::hidden(5), 3.0},
                  {ProbeSite::attention(1, 2), 3.0},
                  {ProbeSite::attention(4, 0), 3.0},
                  {ProbeSite::attention(6, 3), 3.0}};
  return spec;
}

Eigen::VectorXd planted_direction(const SyntheticSpec& spec, const ProbeSite& site) {
  const auto dim = static_cast<Eigen::Index>(spec.config.site_dim(site));
  SplitMixStream rng(derive_key(spec.seed, kDirectionSalt, spec.config.site_index(site)));
  Eigen::VectorXd u(dim);
  for (Eigen::Index j = 0; j < dim; ++j) u(j) = rng.normal();
  return u.normalized();
}

TraceDataset generate(const SyntheticSpec& spec, unsigned workers) {
  validate_spec(spec);
  const auto& config = spec.config;
  TraceDataset dataset;
  dataset.config = config;
  dataset.split_tag = spec.split;
  dataset.traces.resize(spec.n_samples);

  struct Shift {
    std::size_t offset;
    Eigen::VectorXd half_step;
  };
  std::vector<Shift> shifts;
  for (const auto& p : spec.planted) {
    shifts.push_back({config.site_offset(p.site), 0.5 * p.separation * planted_direction(spec, p.site)});
  }

  const std::size_t length = config.feature_length();
  const std::uint64_t split_salt = fnv1a64(spec.split);
  parallel_for(spec.n_samples, workers, [&](std::size_t i) {
    SplitMixStream rng(derive_key(spec.seed, split_salt, i));
    ActivationTrace& t = dataset.traces[i];
    t.sample_id = fmt::format("{}-{:06d}", spec.split, i);
    const bool correct = rng.uniform() < spec.label_prior;
    t.label = correct ? Label::Correct : Label::Hallucination;

    std::vector<double> values(length);
    for (auto& v : values) v = spec.noise_scale * rng.normal();
    const double sign = correct ? 1.0 : -1.0;
    for (const auto& s : shifts) {
      for (Eigen::Index j = 0; j < s.half_step.size(); ++j) values[s.offset + j] += sign * s.half_step(j);
    }
    if (spec.emit_logprob) {
      // Log-normal magnitude; hallucinated answers are less confident on average.
      t.answer_logprob = -std::exp(0.5 * rng.normal() + (correct ? -3.5 : -2.5));
    }
    t.features.assign(values.begin(), values.end());
  });
  return dataset;
}

SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto& c = spec.config;
    if (key == "num_hidden_sites") c.num_hidden_sites = parse_number<std::uint32_t>(key, value);
    else if (key == "num_layers") c.num_layers = parse_number<std::uint32_t>(key, value);
    else if (key == "heads_per_layer") c.heads_per_layer = parse_number<std::uint32_t>(key, value);
    else if (key == "hidden_dim") c.hidden_dim = parse_number<std::uint32_t>(key, value);
    else if (key == "head_dim") c.head_dim = parse_number<std::uint32_t>(key, value);
    else if (key == "n_samples") spec.n_samples = parse_number<std::uint64_t>(key, value);
    else if (key == "noise_scale") spec.noise_scale = parse_number<double>(key, value);
    else if (key == "label_prior") spec.label_prior = parse_number<double>(key, value);
    else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "split") spec.split = value;
    else if (key == "emit_logprob") {
      if (value != "true" && value != "false") throw Error(ErrorCode::InvalidSpec, "emit_logprob must be true/false");
      spec.emit_logprob = value == "true";
    } else if (key == "planted") {
      std::stringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto at = item.find('@');
        if (at == std::string::npos) throw Error(ErrorCode::InvalidSpec, "planted entry needs site@separation");
        PlantedSite p;
        try {
          p.site = parse_site(trim(item.substr(0, at)));
        } catch (const Error& e) {
          throw Error(ErrorCode::InvalidSpec, e.message());
        }
        p.separation = parse_number<double>(key, trim(item.substr(at + 1)));
        spec.planted.push_back(p);
      }
    } else {
      throw Error(ErrorCode::InvalidSpec, "unknown key '" + key + "'");
    }
  }
  validate_spec(spec);
  return spec;
}

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  return parse_synthetic_spec(in);
}

std::string format_synthetic_spec(const SyntheticSpec& spec) {
  const auto& c = spec.config;
  std::string out = fmt::format(
      "num_hidden_sites = {}\nnum_layers = {}\nheads_per_layer = {}\nhidden_dim = {}\nhead_dim = {}\n"
      "n_samples = {}\nnoise_scale = {}\nlabel_prior = {}\nseed = {}\nsplit = {}\nemit_logprob = {}\n",
      c.num_hidden_sites, c.num_layers, c.heads_per_layer, c.hidden_dim, c.head_dim, spec.n_samples,
      spec.noise_scale, spec.label_prior, spec.seed, spec.split, spec.emit_logprob ? "true" : "false");
  for (const auto& p : spec.planted) out += fmt::format("planted = {}@{}\n", to_string(p.site), p.separation);
  return out;
}

}  // namespace halluprobe
