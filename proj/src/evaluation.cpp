// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "halluprobe/error.hpp"
#include "halluprobe/parallel.hpp"

namespace halluprobe {

namespace {

EvaluationReport from_counts(std::uint64_t correct, std::uint64_t partial, std::uint64_t missing,
                             std::uint64_t incorrect) {
  EvaluationReport r;
  r.n = correct + partial + missing + incorrect;
  r.n_correct = correct;
  r.n_partial = partial;
  r.n_missing = missing;
  r.n_incorrect = incorrect;
  const double n = static_cast<double>(r.n);
  r.accuracy = static_cast<double>(correct) / n;
  r.partial = static_cast<double>(partial) / n;
  r.missing = static_cast<double>(missing) / n;
  r.hallucination = static_cast<double>(incorrect) / n;
  const auto total_score = static_cast<std::int64_t>(correct) - static_cast<std::int64_t>(incorrect);
  r.trustfulness = static_cast<double>(total_score) / n;
  return r;
}

void check_thresholds(const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw Error(ErrorCode::InvalidArgument, "threshold list is empty");
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidArgument, fmt::format("threshold {} not in (0, 1)", t));
  }
}

std::vector<Label> labels_of(const TraceDataset& dataset) {
  std::vector<Label> labels;
  labels.reserve(dataset.size());
  for (const auto& t : dataset.traces) {
    if (!t.label) throw Error(ErrorCode::UnlabeledData, "sample '" + t.sample_id + "' has no label");
    labels.push_back(*t.label);
  }
  return labels;
}

std::string rate(double v) { return fmt::format("{:.3f}", v); }

}  // namespace

const char* grade_name(Grade g) {
  switch (g) {
    case Grade::Correct: return "correct";
    case Grade::Partial: return "partial";
    case Grade::Missing: return "missing";
    case Grade::Incorrect: return "incorrect";
  }
  return "missing";
}

Grade parse_grade(const std::string& text) {
  if (text == "correct") return Grade::Correct;
  if (text == "partial") return Grade::Partial;
  if (text == "missing") return Grade::Missing;
  if (text == "incorrect") return Grade::Incorrect;
  throw Error(ErrorCode::ParseError, "unknown grade '" + text + "'");
}

EvaluationReport score_outcomes(std::span<const GradedOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyOutcomes, "no outcomes to score");
  std::uint64_t counts[4] = {0, 0, 0, 0};
  for (const auto& o : outcomes) ++counts[static_cast<int>(o.grade)];
  return from_counts(counts[0], counts[1], counts[2], counts[3]);
}

EvaluationReport abstain_all_report(std::uint64_t n) {
  if (n > 0) return from_counts(0, 0, n, 0);
  EvaluationReport r;
  r.missing = 1.0;
  return r;
}

std::vector<GradedOutcome> outcomes_from_decisions(const std::vector<SampleDecision>& decisions,
                                                   const TraceDataset& dataset) {
  if (decisions.size() != dataset.size()) {
    throw Error(ErrorCode::InvalidArgument, "decision count does not match dataset size");
  }
  std::vector<GradedOutcome> outcomes;
  outcomes.reserve(decisions.size());
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto& trace = dataset.traces[i];
    if (!trace.label) throw Error(ErrorCode::UnlabeledData, "sample '" + trace.sample_id + "' has no label");
    Grade g = Grade::Missing;
    if (decisions[i].decision.verdict == Verdict::Accept) {
      g = *trace.label == Label::Correct ? Grade::Correct : Grade::Incorrect;
    }
    outcomes.push_back({trace.sample_id, g});
  }
  return outcomes;
}

EvaluationReport baseline_report(const TraceDataset& dataset) {
  std::vector<SampleDecision> accept_all(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    accept_all[i].sample_id = dataset.traces[i].sample_id;
    accept_all[i].decision.verdict = Verdict::Accept;
  }
  return score_outcomes(outcomes_from_decisions(accept_all, dataset));
}

EvaluationReport apply_and_score(const EnsembleModel& ensemble, const TraceDataset& dataset, unsigned workers) {
  if (!dataset.labeled()) throw Error(ErrorCode::UnlabeledData, "evaluation split must be labeled");
  return score_outcomes(outcomes_from_decisions(batch_filter(ensemble, dataset, workers), dataset));
}

EvaluationReport logprob_report(const TraceDataset& dataset, double threshold) {
  std::vector<SampleDecision> decisions(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& t = dataset.traces[i];
    if (!t.answer_logprob) {
      throw Error(ErrorCode::InvalidArgument, "sample '" + t.sample_id + "' has no answer logprob");
    }
    decisions[i] = {t.sample_id, logprob_filter(*t.answer_logprob, threshold)};
  }
  return score_outcomes(outcomes_from_decisions(decisions, dataset));
}

std::vector<double> threshold_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::InvalidArgument, "threshold grid needs lo <= hi and step > 0");
  }
  const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count + 1));
  for (long long i = 0; i <= count; ++i) {
    grid.push_back(std::stod(fmt::format("{:.10f}", lo + static_cast<double>(i) * step)));
  }
  return grid;
}

std::vector<double> parse_threshold_grid(const std::string& text) {
  double parts[3];
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const auto colon = text.find(':', start);
    if ((i < 2) == (colon == std::string::npos)) {
      throw Error(ErrorCode::ParseError, "grid must be lo:hi:step, got '" + text + "'");
    }
    try {
      std::size_t used = 0;
      const std::string piece = text.substr(start, colon - start);
      parts[i] = std::stod(piece, &used);
      if (used != piece.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "grid must be lo:hi:step, got '" + text + "'");
    }
    start = colon + 1;
  }
  return threshold_grid(parts[0], parts[1], parts[2]);
}

SweepResult sweep_scores(std::span<const double> ensemble_scores, std::span<const Label> labels,
                         const std::vector<double>& thresholds) {
  check_thresholds(thresholds);
  if (ensemble_scores.size() != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "score and label counts differ");
  }
  if (ensemble_scores.empty()) throw Error(ErrorCode::EmptyOutcomes, "no samples to sweep over");
  SweepResult result;
  result.table.reserve(thresholds.size());
  bool have_best = false;
  double best_trust = 0;
  for (double t : thresholds) {
    std::uint64_t correct = 0, incorrect = 0, missing = 0;
    for (std::size_t i = 0; i < ensemble_scores.size(); ++i) {
      if (ensemble_scores[i] > t) {
        ++(labels[i] == Label::Correct ? correct : incorrect);
      } else {
        ++missing;
      }
    }
    auto report = from_counts(correct, 0, missing, incorrect);
    if (!have_best || report.trustfulness > best_trust ||
        (report.trustfulness == best_trust && t < result.best_threshold)) {
      have_best = true;
      best_trust = report.trustfulness;
      result.best_threshold = t;
    }
    result.table.emplace_back(t, report);
  }
  return result;
}

SweepResult sweep_threshold(const EnsembleModel& ensemble, const TraceDataset& dataset,
                            const std::vector<double>& thresholds, unsigned workers) {
  check_thresholds(thresholds);
  const auto labels = labels_of(dataset);
  const auto decisions = batch_filter(ensemble, dataset, workers);
  std::vector<double> scores;
  scores.reserve(decisions.size());
  for (const auto& d : decisions) scores.push_back(*d.decision.ensemble_score);
  return sweep_scores(scores, labels, thresholds);
}

ScoreTable score_table(const std::vector<ProbeModel>& probes, const TraceDataset& dataset, unsigned workers) {
  ScoreTable table;
  table.labels = labels_of(dataset);
  std::vector<const ProbeModel*> ordered;
  for (const auto& p : probes) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(), [](const ProbeModel* a, const ProbeModel* b) { return a->site < b->site; });
  for (std::size_t j = 0; j < ordered.size(); ++j) {
    if (j > 0 && ordered[j - 1]->site == ordered[j]->site) {
      throw Error(ErrorCode::InvalidArgument, "duplicate probe for site " + to_string(ordered[j]->site));
    }
    table.sites.push_back(ordered[j]->site);
  }
  table.scores.resize(static_cast<Eigen::Index>(dataset.size()), static_cast<Eigen::Index>(ordered.size()));
  parallel_for(ordered.size(), workers,
               [&](std::size_t j) { table.scores.col(static_cast<Eigen::Index>(j)) = probe_scores(*ordered[j], dataset); });
  return table;
}

std::vector<double> ensemble_scores(const ScoreTable& table, const std::vector<ProbeSite>& members) {
  std::vector<Eigen::Index> columns;
  for (const auto& site : members) {
    auto it = std::lower_bound(table.sites.begin(), table.sites.end(), site);
    if (it == table.sites.end() || *it != site) {
      throw Error(ErrorCode::MissingSite, "score table has no column for " + to_string(site));
    }
    columns.push_back(it - table.sites.begin());
  }
  std::sort(columns.begin(), columns.end());
  std::vector<double> means(static_cast<std::size_t>(table.scores.rows()));
  std::vector<double> row(columns.size());
  for (Eigen::Index i = 0; i < table.scores.rows(); ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) row[j] = table.scores(i, columns[j]);
    means[static_cast<std::size_t>(i)] = ensemble_mean(row);
  }
  return means;
}

std::vector<AblationRow> ablation_run(const std::vector<SiteEvaluation>& evaluations,
                                      const std::vector<double>& f1_thresholds, const ScoreTable* table,
                                      const std::vector<double>& sweep_grid) {
  const auto counts = ablate_thresholds(evaluations, f1_thresholds);
  std::vector<AblationRow> rows;
  for (const auto& c : counts) {
    AblationRow row;
    row.f1_threshold = c.threshold;
    const auto selection = select_sites(evaluations, c.threshold);
    row.filters = selection.selected.size();
    if (selection.selected.empty()) {
      row.report = abstain_all_report(table ? table->labels.size() : 0);
    } else if (table) {
      const auto scores = ensemble_scores(*table, selection.selected);
      auto sweep = sweep_scores(scores, table->labels, sweep_grid);
      row.ensemble_threshold = sweep.best_threshold;
      for (const auto& [t, report] : sweep.table) {
        if (t == sweep.best_threshold) row.report = report;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

void write_reports(const std::vector<std::pair<std::string, EvaluationReport>>& rows, std::ostream& out) {
  out << "method\tn\taccuracy\tmissing\thallucination\tpartial\ttrustfulness\n";
  for (const auto& [name, r] : rows) {
    out << fmt::format("{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n", name, r.n, r.accuracy, r.missing,
                       r.hallucination, r.partial, r.trustfulness);
  }
}

std::string format_report_table(const std::vector<std::pair<std::string, EvaluationReport>>& rows) {
  std::size_t width = 6;
  for (const auto& row : rows) width = std::max(width, row.first.size());
  std::string out = fmt::format("{:<{}} | {:>8} | {:>8} | {:>13} | {:>12}\n", "Method", width, "Accuracy", "Missing",
                                "Hallucination", "Trustfulness");
  out += std::string(width, '-') + "-+----------+----------+---------------+-------------\n";
  for (const auto& [name, r] : rows) {
    out += fmt::format("{:<{}} | {:>8} | {:>8} | {:>13} | {:>12}\n", name, width, rate(r.accuracy), rate(r.missing),
                       rate(r.hallucination), rate(r.trustfulness));
  }
  return out;
}

void write_sweep(const SweepResult& sweep, std::ostream& out) {
  out << fmt::format("# best_threshold={:.6f}\n", sweep.best_threshold);
  out << "threshold\tn\taccuracy\tmissing\thallucination\ttrustfulness\n";
  for (const auto& [t, r] : sweep.table) {
    out << fmt::format("{:.6f}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n", t, r.n, r.accuracy, r.missing, r.hallucination,
                       r.trustfulness);
  }
}

void write_ablation(const std::vector<AblationRow>& rows, std::ostream& out) {
  out << "f1_threshold\tfilters\taccuracy\tmissing\thallucination\ttrustfulness\tensemble_threshold\n";
  for (const auto& row : rows) {
    std::string metrics = "-\t-\t-\t-";
    if (row.report) {
      const auto& r = *row.report;
      metrics = fmt::format("{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}", r.accuracy, r.missing, r.hallucination, r.trustfulness);
    }
    const std::string threshold = row.ensemble_threshold ? fmt::format("{:.6f}", *row.ensemble_threshold) : "-";
    out << fmt::format("{:.6f}\t{}\t{}\t{}\n", row.f1_threshold, row.filters, metrics, threshold);
  }
}

std::vector<GradedOutcome> read_outcomes(std::istream& in) {
  std::vector<GradedOutcome> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::ParseError, "outcome line lacks a tab: '" + line + "'");
    if (header) {
      header = false;
      if (line.substr(0, tab) == "sample_id") continue;
    }
    out.push_back({line.substr(0, tab), parse_grade(line.substr(tab + 1))});
  }
  return out;
}

}  // namespace halluprobe
