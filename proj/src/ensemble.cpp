// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include <fmt/format.h>

#include "halluprobe/error.hpp"
#include "halluprobe/parallel.hpp"

namespace halluprobe {

namespace {

void check_ensemble(const EnsembleModel& model) {
  if (model.members.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble has no members");
  if (!(model.decision_threshold > 0.0 && model.decision_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "decision threshold must lie in (0, 1)");
  }
  for (std::size_t i = 1; i < model.members.size(); ++i) {
    if (!(model.members[i - 1].site < model.members[i].site)) {
      throw Error(ErrorCode::InvariantViolation, "ensemble members must be distinct and canonically ordered");
    }
  }
}

}  // namespace

EnsembleModel make_ensemble(const ProbeBundle& bundle, const std::vector<ProbeSite>& sites,
                            double decision_threshold) {
  if (sites.empty()) throw Error(ErrorCode::EmptyEnsemble, "no sites to ensemble");
  std::vector<ProbeSite> ordered = sites;
  std::sort(ordered.begin(), ordered.end());
  if (std::adjacent_find(ordered.begin(), ordered.end()) != ordered.end()) {
    throw Error(ErrorCode::InvalidArgument, "ensemble sites must be distinct");
  }
  EnsembleModel model;
  model.decision_threshold = decision_threshold;
  for (const auto& site : ordered) {
    const ProbeModel* probe = bundle.find(site);
    if (!probe) throw Error(ErrorCode::MissingSite, "bundle has no probe for " + to_string(site));
    model.members.push_back(*probe);
  }
  return model;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double ensemble_mean(std::span<const double> member_scores) {
  if (member_scores.empty()) throw Error(ErrorCode::EmptyEnsemble, "no member scores to average");
  // Averaging offsets from the minimum makes equal scores average to exactly
  // that score, so a unanimous 0.65 ensemble sits on the boundary rather than
  // one ulp above it. The clamp keeps rounding inside [min, max].
  const auto [lo, hi] = std::minmax_element(member_scores.begin(), member_scores.end());
  std::vector<double> offsets(member_scores.size());
  std::transform(member_scores.begin(), member_scores.end(), offsets.begin(), [lo = *lo](double s) { return s - lo; });
  const double mean = *lo + pairwise_sum(offsets) / static_cast<double>(offsets.size());
  return std::clamp(mean, *lo, *hi);
}

FilterDecision decide(std::vector<double> member_scores, double threshold) {
  FilterDecision d;
  const double score = ensemble_mean(member_scores);
  d.ensemble_score = score;
  d.verdict = score > threshold ? Verdict::Accept : Verdict::Abstain;
  d.member_scores = std::move(member_scores);
  return d;
}

FilterDecision ensemble_predict(const EnsembleModel& model, const ModelConfig& config, const ActivationTrace& trace) {
  check_ensemble(model);
  std::vector<double> scores;
  scores.reserve(model.members.size());
  for (const auto& member : model.members) scores.push_back(probe_predict(member, config, trace));
  return decide(std::move(scores), model.decision_threshold);
}

FilterDecision logprob_filter(double answer_logprob, double threshold) {
  if (!std::isfinite(answer_logprob) || !std::isfinite(threshold)) {
    throw Error(ErrorCode::NonFiniteInput, "logprob filter needs finite inputs");
  }
  FilterDecision d;
  d.verdict = answer_logprob < threshold ? Verdict::Abstain : Verdict::Accept;
  return d;
}

std::vector<SampleDecision> batch_filter(const EnsembleModel& model, const TraceDataset& dataset, unsigned workers) {
  if (dataset.traces.empty()) return {};
  check_ensemble(model);
  std::vector<SampleDecision> out(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    const auto& trace = dataset.traces[i];
    try {
      out[i] = {trace.sample_id, ensemble_predict(model, dataset.config, trace)};
    } catch (const Error& e) {
      throw Error(e.code(), "sample '" + trace.sample_id + "': " + e.message());
    }
  });
  return out;
}

void write_decisions(const std::vector<SampleDecision>& decisions, std::ostream& out) {
  out << "sample_id\tensemble_score\tverdict\n";
  for (const auto& d : decisions) {
    const std::string score = d.decision.ensemble_score ? fmt::format("{:.9f}", *d.decision.ensemble_score) : "-";
    out << d.sample_id << '\t' << score << '\t' << verdict_name(d.decision.verdict) << '\n';
  }
}

void write_final_answers(const std::vector<SampleDecision>& decisions,
                         const std::map<std::string, std::string>& answers, std::ostream& out) {
  out << "sample_id\tanswer\n";
  for (const auto& d : decisions) {
    std::string answer = kAbstainAnswer;
    if (d.decision.verdict == Verdict::Accept) {
      auto it = answers.find(d.sample_id);
      if (it == answers.end()) throw Error(ErrorCode::InvalidArgument, "no answer text for '" + d.sample_id + "'");
      answer = it->second;
    }
    out << d.sample_id << '\t' << answer << '\n';
  }
}

}  // namespace halluprobe
