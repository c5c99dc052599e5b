// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace halluprobe {

enum class SiteKind : std::uint8_t { HiddenState = 0, AttentionHead = 1 };

/// A location inside the generator where activations are probed: either the
/// residual stream after a layer, or one attention head's pre-merge output.
/// `head` is 0 and ignored for hidden-state sites.
struct ProbeSite {
  SiteKind kind = SiteKind::HiddenState;
  std::uint32_t layer = 0;
  std::uint32_t head = 0;

  static constexpr ProbeSite hidden(std::uint32_t layer) { return {SiteKind::HiddenState, layer, 0}; }
  static constexpr ProbeSite attention(std::uint32_t layer, std::uint32_t head) {
    return {SiteKind::AttentionHead, layer, head};
  }

  bool is_hidden() const { return kind == SiteKind::HiddenState; }

  // Canonical order: hidden-state sites by layer, then heads by (layer, head).
  friend constexpr auto operator<=>(const ProbeSite&, const ProbeSite&) = default;
};

/// Short textual identity: "hs:17" or "ah:17:9".
std::string to_string(const ProbeSite& site);
ProbeSite parse_site(const std::string& text);

struct ModelConfig {
  std::uint32_t num_hidden_sites = 0;
  std::uint32_t num_layers = 0;
  std::uint32_t heads_per_layer = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t head_dim = 0;

  std::size_t num_head_sites() const { return std::size_t{num_layers} * heads_per_layer; }
  std::size_t total_sites() const { return num_hidden_sites + num_head_sites(); }
  /// Length of the concatenated per-sample feature vector.
  std::size_t feature_length() const {
    return std::size_t{num_hidden_sites} * hidden_dim + num_head_sites() * head_dim;
  }

  bool contains(const ProbeSite& site) const;
  std::size_t site_dim(const ProbeSite& site) const;
  /// Position of `site` in canonical order.
  std::size_t site_index(const ProbeSite& site) const;
  /// Offset of the site's vector within the concatenated feature vector.
  std::size_t site_offset(const ProbeSite& site) const;
  ProbeSite site_at(std::size_t index) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// All sites of `config` in canonical order.
std::vector<ProbeSite> enumerate_sites(const ModelConfig& config);

/// Site census of the 40-layer, 32-head vision-language model the probes were
/// designed for: 41 hidden-state sites (embedding output included) plus
/// 40 x 32 heads, 1321 sites in total.
constexpr ModelConfig reference_scale_config() { return {41, 40, 32, 4096, 128}; }

/// Desk-scale default used by the synthetic bench.
constexpr ModelConfig desk_scale_config() { return {8, 8, 4, 32, 16}; }

}  // namespace halluprobe
