// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/ensemble.hpp"
#include "halluprobe/selection.hpp"

namespace halluprobe {

enum class Grade { Correct, Partial, Missing, Incorrect };

/// +1 correct, 0 partial or missing, -1 incorrect.
constexpr int grade_score(Grade g) { return g == Grade::Correct ? 1 : g == Grade::Incorrect ? -1 : 0; }
const char* grade_name(Grade g);
Grade parse_grade(const std::string& text);

struct GradedOutcome {
  std::string sample_id;
  Grade grade = Grade::Missing;
};

/// Competition metric over a graded answer set. Rates are counts / n and
/// trustfulness is the mean per-sample score, i.e. accuracy - hallucination.
struct EvaluationReport {
  std::uint64_t n = 0;
  std::uint64_t n_correct = 0;
  std::uint64_t n_partial = 0;
  std::uint64_t n_missing = 0;
  std::uint64_t n_incorrect = 0;
  double accuracy = 0;
  double missing = 0;
  double hallucination = 0;
  double partial = 0;
  double trustfulness = 0;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

EvaluationReport score_outcomes(std::span<const GradedOutcome> outcomes);

/// Report for a policy that abstains on all `n` samples. For n = 0 the
/// rates are defined as missing = 1, everything else 0.
EvaluationReport abstain_all_report(std::uint64_t n);

/// Accepted answers keep their true grade (Correct -> Correct,
/// Hallucination -> Incorrect); abstentions become Missing.
std::vector<GradedOutcome> outcomes_from_decisions(const std::vector<SampleDecision>& decisions,
                                                   const TraceDataset& dataset);

/// Answering every sample without a filter.
EvaluationReport baseline_report(const TraceDataset& dataset);

EvaluationReport apply_and_score(const EnsembleModel& ensemble, const TraceDataset& dataset, unsigned workers = 1);

/// Logprob baseline over a dataset whose traces carry answer logprobs.
EvaluationReport logprob_report(const TraceDataset& dataset, double threshold);

struct SweepResult {
  double best_threshold = 0;
  std::vector<std::pair<double, EvaluationReport>> table;
};

/// Thresholds grid lo, lo+step, ..., hi with values snapped to their decimal
/// representation so that e.g. 0.65 is exactly the literal 0.65.
std::vector<double> threshold_grid(double lo, double hi, double step);
/// Parses "lo:hi:step".
std::vector<double> parse_threshold_grid(const std::string& text);
inline std::vector<double> default_sweep_grid() { return threshold_grid(0.50, 0.90, 0.01); }

/// Scores a fixed set of ensemble means at every threshold; best maximizes
/// trustfulness, ties go to the smallest threshold.
SweepResult sweep_scores(std::span<const double> ensemble_scores, std::span<const Label> labels,
                         const std::vector<double>& thresholds);

/// The decision threshold stored in `ensemble` is ignored.
SweepResult sweep_threshold(const EnsembleModel& ensemble, const TraceDataset& dataset,
                            const std::vector<double>& thresholds, unsigned workers = 1);

/// Per-site probe predictions on one labeled split, column j for sites[j].
struct ScoreTable {
  std::vector<ProbeSite> sites;  // canonical order
  Eigen::MatrixXd scores;        // samples x sites
  std::vector<Label> labels;
};

ScoreTable score_table(const std::vector<ProbeModel>& probes, const TraceDataset& dataset, unsigned workers = 1);

/// Ensemble means over the selected columns, summed in canonical order.
std::vector<double> ensemble_scores(const ScoreTable& table, const std::vector<ProbeSite>& members);

struct AblationRow {
  double f1_threshold = 0;
  std::size_t filters = 0;
  std::optional<double> ensemble_threshold;  // unset when nothing was selected
  std::optional<EvaluationReport> report;    // unset when no score table was given
};

/// For each F1 threshold: select sites, sweep the ensemble threshold on the
/// score table and keep the best report. Without a score table only the
/// filter counts (and abstain-all rows for empty selections) are produced.
std::vector<AblationRow> ablation_run(const std::vector<SiteEvaluation>& evaluations,
                                      const std::vector<double>& f1_thresholds, const ScoreTable* table,
                                      const std::vector<double>& sweep_grid);

// Delimited text exports.
void write_reports(const std::vector<std::pair<std::string, EvaluationReport>>& rows, std::ostream& out);
/// Console table in Accuracy / Missing / Hallucination / Trustfulness order.
std::string format_report_table(const std::vector<std::pair<std::string, EvaluationReport>>& rows);
void write_sweep(const SweepResult& sweep, std::ostream& out);
void write_ablation(const std::vector<AblationRow>& rows, std::ostream& out);

/// `sample_id\tgrade` rows with grades correct/partial/missing/incorrect.
std::vector<GradedOutcome> read_outcomes(std::istream& in);

}  // namespace halluprobe
