// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "halluprobe/selection.hpp"
#include "halluprobe/site.hpp"

namespace halluprobe {

// Published reference values for the 40-layer / 32-head deployment: the
// per-site F1 of every probe that cleared the 0.5 cut, the F1-threshold
// ablation, and the headline result rows.

enum class FixtureName { AppendixBHidden, AppendixBHeads, AppendixCCounts, Table1Rows };

struct PublishedSiteF1 {
  int rank = 0;
  ProbeSite site;
  double f1 = 0;
};

struct PublishedAblationRow {
  double f1_threshold = 0;
  std::size_t filters = 0;
  double accuracy = 0;
  double missing = 0;
  double hallucination = 0;
  double trustfulness = 0;
  double ensemble_threshold = 0;
};

struct PublishedResultRow {
  std::string table;  // "single-turn" or "multi-turn"
  std::string method;
  double accuracy = 0;
  double missing = 0;
  double hallucination = 0;
  double trustfulness = 0;
};

struct Fixture {
  FixtureName name;
  std::string origin;  // table of origin
  std::vector<PublishedSiteF1> sites;
  std::vector<PublishedAblationRow> ablation;
  std::vector<PublishedResultRow> results;
};

const char* fixture_id(FixtureName name);
Fixture load_paper_fixture(FixtureName name);
/// Accepts appendix_b_hidden, appendix_b_heads, appendix_c_counts, table1_rows.
Fixture load_paper_fixture(const std::string& name);

/// Canonical text rendering; its FNV-1a hash is the fixture checksum.
std::string fixture_text(const Fixture& fixture);
std::uint64_t fixture_checksum(FixtureName name);

/// One evaluation per site of the reference-scale config (1321 sites). The 65
/// published F1 values are used verbatim; the other 1256 sites get SYNTHETIC
/// fill values placed in bands so the strict-threshold counts come out as
/// 1321 / 1321 / 1321 / 1313 / 752 / 65 at 0.0 ... 0.5. Confusion counts
/// are synthetic too: tp = 10000 * f1, fp = fn = 10000 - tp, tn = 0, which
/// reproduces each F1 exactly.
std::vector<SiteEvaluation> reference_scale_evaluations();

/// Only the 65 published sites, with the same synthetic confusion counts.
std::vector<SiteEvaluation> published_evaluations();

}  // namespace halluprobe
