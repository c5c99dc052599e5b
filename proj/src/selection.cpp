// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/selection.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "halluprobe/error.hpp"
#include "halluprobe/parallel.hpp"

namespace halluprobe {

namespace {

std::vector<SiteEvaluation> canonical_copy(const std::vector<SiteEvaluation>& evaluations) {
  std::vector<SiteEvaluation> sorted = evaluations;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SiteEvaluation& a, const SiteEvaluation& b) { return a.site < b.site; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].site == sorted[i].site) {
      throw Error(ErrorCode::InvalidArgument, "duplicate evaluation for site " + to_string(sorted[i].site));
    }
  }
  return sorted;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

bool SelectionReport::is_selected(const ProbeSite& site) const {
  return std::binary_search(selected.begin(), selected.end(), site);
}

std::vector<SiteEvaluation> evaluate_probes(const std::vector<ProbeModel>& probes, const TraceDataset& dataset,
                                            unsigned workers) {
  if (!dataset.labeled()) throw Error(ErrorCode::UnlabeledData, "selection split must be labeled");
  for (const auto& probe : probes) {
    if (!dataset.config.contains(probe.site) ||
        static_cast<Eigen::Index>(dataset.config.site_dim(probe.site)) != probe.input_dim()) {
      throw Error(ErrorCode::ConfigMismatch, "probe " + to_string(probe.site) + " does not fit the dataset config");
    }
  }
  const Eigen::VectorXd labels = label_vector(dataset);
  std::vector<SiteEvaluation> out(probes.size());
  parallel_for(probes.size(), workers, [&](std::size_t i) {
    const Eigen::VectorXd scores = probe_scores(probes[i], dataset);
    out[i].site = probes[i].site;
    out[i].confusion = confusion_from_scores(scores, labels);
    out[i].f1 = f1_score(out[i].confusion);
  });
  return canonical_copy(out);
}

SelectionReport select_sites(const std::vector<SiteEvaluation>& evaluations, double threshold) {
  if (evaluations.empty()) throw Error(ErrorCode::InvalidArgument, "no evaluations to select from");
  SelectionReport report;
  report.threshold = threshold;
  report.evaluations = canonical_copy(evaluations);
  for (const auto& e : report.evaluations) {
    if (e.f1 > threshold) {
      report.selected.push_back(e.site);
      ++(e.site.is_hidden() ? report.hidden_selected : report.heads_selected);
    }
  }
  report.status = report.selected.empty() ? SelectionStatus::EmptySelection : SelectionStatus::Ok;
  return report;
}

std::vector<ThresholdCount> ablate_thresholds(const std::vector<SiteEvaluation>& evaluations,
                                              const std::vector<double>& thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorCode::InvalidArgument, "ablation thresholds must be ascending");
  }
  std::vector<ThresholdCount> table;
  table.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto count = static_cast<std::size_t>(
        std::count_if(evaluations.begin(), evaluations.end(), [t](const SiteEvaluation& e) { return e.f1 > t; }));
    table.push_back({t, count});
  }
  return table;
}

std::vector<SiteEvaluation> rank_by_f1(const std::vector<SiteEvaluation>& evaluations) {
  auto ranked = canonical_copy(evaluations);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const SiteEvaluation& a, const SiteEvaluation& b) { return a.f1 > b.f1; });
  return ranked;
}

void write_selection_report(const SelectionReport& report, std::ostream& out) {
  std::map<ProbeSite, std::size_t> rank;
  const auto ranked = rank_by_f1(report.evaluations);
  for (std::size_t i = 0; i < ranked.size(); ++i) rank[ranked[i].site] = i + 1;

  out << fmt::format("# threshold={:.6f} selected={} hidden={} heads={} status={}\n", report.threshold,
                     report.selected.size(), report.hidden_selected, report.heads_selected,
                     report.status == SelectionStatus::Ok ? "ok" : "empty");
  out << "rank\tkind\tlayer\thead\tf1\tselected\ttp\tfp\tfn\ttn\n";
  for (const auto& e : report.evaluations) {
    const auto& s = e.site;
    out << fmt::format("{}\t{}\t{}\t{}\t{:.6f}\t{}\t{}\t{}\t{}\t{}\n", rank[s],
                       s.is_hidden() ? "hidden_state" : "attention_head", s.layer,
                       s.is_hidden() ? std::string("-") : std::to_string(s.head), e.f1,
                       report.is_selected(s) ? 1 : 0, e.confusion.tp, e.confusion.fp, e.confusion.fn,
                       e.confusion.tn);
  }
}

std::vector<SiteEvaluation> read_site_evaluations(std::istream& in, std::vector<ProbeSite>* selected) {
  std::string line;
  std::vector<std::string> header;
  std::vector<SiteEvaluation> out;
  std::size_t line_no = 0;
  auto column = [&](const char* name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ParseError, std::string("missing column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::size_t c_kind = 0, c_layer = 0, c_head = 0, c_f1 = 0, c_tp = 0, c_fp = 0, c_fn = 0, c_tn = 0, c_sel = 0;
  bool has_counts = false;
  bool has_selected = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (header.empty()) {
      header = std::move(fields);
      c_kind = column("kind");
      c_layer = column("layer");
      c_head = column("head");
      c_f1 = column("f1");
      has_counts = std::find(header.begin(), header.end(), "tp") != header.end();
      has_selected = std::find(header.begin(), header.end(), "selected") != header.end();
      if (has_selected) c_sel = column("selected");
      if (has_counts) {
        c_tp = column("tp");
        c_fp = column("fp");
        c_fn = column("fn");
        c_tn = column("tn");
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "evaluation table line " + std::to_string(line_no) + " has wrong width");
    }
    try {
      SiteEvaluation e;
      const auto layer = static_cast<std::uint32_t>(std::stoul(fields[c_layer]));
      if (fields[c_kind] == "hidden_state") {
        e.site = ProbeSite::hidden(layer);
      } else if (fields[c_kind] == "attention_head") {
        e.site = ProbeSite::attention(layer, static_cast<std::uint32_t>(std::stoul(fields[c_head])));
      } else {
        throw Error(ErrorCode::ParseError, "unknown site kind '" + fields[c_kind] + "'");
      }
      e.f1 = std::stod(fields[c_f1]);
      if (has_counts) {
        e.confusion = {std::stoull(fields[c_tp]), std::stoull(fields[c_fp]), std::stoull(fields[c_fn]),
                       std::stoull(fields[c_tn])};
        if (e.confusion.total() > 0) e.f1 = f1_score(e.confusion);
      }
      if (selected && has_selected && fields[c_sel] == "1") selected->push_back(e.site);
      out.push_back(e);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "bad number on evaluation table line " + std::to_string(line_no));
    }
  }
  if (header.empty()) throw Error(ErrorCode::ParseError, "evaluation table has no header");
  return out;
}

}  // namespace halluprobe
