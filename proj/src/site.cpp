// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/site.hpp"

#include <charconv>

#include "halluprobe/error.hpp"

namespace halluprobe {

std::string to_string(const ProbeSite& site) {
  if (site.is_hidden()) return "hs:" + std::to_string(site.layer);
  return "ah:" + std::to_string(site.layer) + ":" + std::to_string(site.head);
}

namespace {

std::uint32_t parse_index(std::string_view text, const std::string& whole) {
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::ParseError, "bad site identifier '" + whole + "'");
  }
  return value;
}

}  // namespace

ProbeSite parse_site(const std::string& text) {
  std::string_view view(text);
  if (view.starts_with("hs:")) return ProbeSite::hidden(parse_index(view.substr(3), text));
  if (view.starts_with("ah:")) {
    auto rest = view.substr(3);
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "bad site identifier '" + text + "'");
    }
    return ProbeSite::attention(parse_index(rest.substr(0, colon), text),
                                parse_index(rest.substr(colon + 1), text));
  }
  throw Error(ErrorCode::ParseError, "bad site identifier '" + text + "'");
}

bool ModelConfig::contains(const ProbeSite& site) const {
  if (site.is_hidden()) return site.layer < num_hidden_sites && site.head == 0;
  return site.layer < num_layers && site.head < heads_per_layer;
}

std::size_t ModelConfig::site_dim(const ProbeSite& site) const {
  return site.is_hidden() ? hidden_dim : head_dim;
}

std::size_t ModelConfig::site_index(const ProbeSite& site) const {
  if (!contains(site)) {
    throw Error(ErrorCode::ConfigMismatch, "site " + to_string(site) + " not in model config");
  }
  if (site.is_hidden()) return site.layer;
  return num_hidden_sites + std::size_t{site.layer} * heads_per_layer + site.head;
}

std::size_t ModelConfig::site_offset(const ProbeSite& site) const {
  const std::size_t index = site_index(site);
  if (site.is_hidden()) return index * hidden_dim;
  return std::size_t{num_hidden_sites} * hidden_dim + (index - num_hidden_sites) * head_dim;
}

ProbeSite ModelConfig::site_at(std::size_t index) const {
  if (index < num_hidden_sites) return ProbeSite::hidden(static_cast<std::uint32_t>(index));
  index -= num_hidden_sites;
  if (heads_per_layer == 0 || index >= num_head_sites()) {
    throw Error(ErrorCode::InvalidArgument, "site index out of range");
  }
  return ProbeSite::attention(static_cast<std::uint32_t>(index / heads_per_layer),
                              static_cast<std::uint32_t>(index % heads_per_layer));
}

std::vector<ProbeSite> enumerate_sites(const ModelConfig& config) {
  std::vector<ProbeSite> sites;
  sites.reserve(config.total_sites());
  for (std::uint32_t l = 0; l < config.num_hidden_sites; ++l) sites.push_back(ProbeSite::hidden(l));
  for (std::uint32_t l = 0; l < config.num_layers; ++l) {
    for (std::uint32_t h = 0; h < config.heads_per_layer; ++h) {
      sites.push_back(ProbeSite::attention(l, h));
    }
  }
  return sites;
}

}  // namespace halluprobe
