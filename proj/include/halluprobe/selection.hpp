// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <vector>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/metrics.hpp"
#include "halluprobe/probe.hpp"
#include "halluprobe/site.hpp"

namespace halluprobe {

struct SiteEvaluation {
  ProbeSite site;
  double f1 = 0;
  ConfusionCounts confusion;

  friend bool operator==(const SiteEvaluation&, const SiteEvaluation&) = default;
};

enum class SelectionStatus { Ok, EmptySelection };

struct SelectionReport {
  double threshold = 0;
  std::vector<SiteEvaluation> evaluations;  // canonical site order
  std::vector<ProbeSite> selected;          // canonical site order
  std::size_t hidden_selected = 0;
  std::size_t heads_selected = 0;
  SelectionStatus status = SelectionStatus::Ok;

  bool is_selected(const ProbeSite& site) const;
};

/// Scores every probe on a labeled held-out split using the 0.5 hard rule.
/// Output is in canonical site order regardless of input order or workers.
std::vector<SiteEvaluation> evaluate_probes(const std::vector<ProbeModel>& probes, const TraceDataset& dataset,
                                            unsigned workers = 1);

/// Keeps the sites whose F1 strictly exceeds `threshold`.
SelectionReport select_sites(const std::vector<SiteEvaluation>& evaluations, double threshold);

struct ThresholdCount {
  double threshold = 0;
  std::size_t selected = 0;
};

std::vector<ThresholdCount> ablate_thresholds(const std::vector<SiteEvaluation>& evaluations,
                                              const std::vector<double>& thresholds);

/// Evaluations sorted by F1 descending; equal F1 keeps canonical order.
std::vector<SiteEvaluation> rank_by_f1(const std::vector<SiteEvaluation>& evaluations);

/// Tab-separated table, one row per site in canonical order:
///   rank kind layer head f1 selected tp fp fn tn
/// preceded by a `#` summary line. `head` is "-" for hidden-state sites.
void write_selection_report(const SelectionReport& report, std::ostream& out);

/// Reads the site rows of a selection report. F1 is recomputed from the
/// confusion counts when present. When `selected` is given and the table has
/// a `selected` column, the flagged sites are appended to it.
std::vector<SiteEvaluation> read_site_evaluations(std::istream& in, std::vector<ProbeSite>* selected = nullptr);

}  // namespace halluprobe
