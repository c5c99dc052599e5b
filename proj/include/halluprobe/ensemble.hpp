// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/probe.hpp"
#include "halluprobe/probe_bundle.hpp"

namespace halluprobe {

inline constexpr double kDefaultDecisionThreshold = 0.65;
inline constexpr const char* kAbstainAnswer = "I don't know.";

enum class Verdict { Accept, Abstain };

constexpr const char* verdict_name(Verdict v) { return v == Verdict::Accept ? "accept" : "abstain"; }

struct FilterDecision {
  Verdict verdict = Verdict::Abstain;
  /// Unset for the logprob baseline, which has no ensemble.
  std::optional<double> ensemble_score;
  std::vector<double> member_scores;
};

/// Equal-weight average of selected probes. Members are kept in canonical
/// site order so the mean is summed in a fixed order.
struct EnsembleModel {
  std::vector<ProbeModel> members;
  double decision_threshold = kDefaultDecisionThreshold;
};

/// Builds an ensemble from the bundle's probes at `sites`.
EnsembleModel make_ensemble(const ProbeBundle& bundle, const std::vector<ProbeSite>& sites,
                            double decision_threshold = kDefaultDecisionThreshold);

/// Pairwise (cascade) summation in the given order.
double pairwise_sum(std::span<const double> values);

/// Unweighted mean, exact when all scores are equal and always within
/// [min, max]; throws EmptyEnsemble on no members.
double ensemble_mean(std::span<const double> member_scores);

/// Accept iff mean(member_scores) > threshold.
FilterDecision decide(std::vector<double> member_scores, double threshold);

FilterDecision ensemble_predict(const EnsembleModel& model, const ModelConfig& config, const ActivationTrace& trace);

/// Baseline filter: abstain iff the answer logprob is below `threshold`.
FilterDecision logprob_filter(double answer_logprob, double threshold);

struct SampleDecision {
  std::string sample_id;
  FilterDecision decision;
};

std::vector<SampleDecision> batch_filter(const EnsembleModel& model, const TraceDataset& dataset,
                                         unsigned workers = 1);

/// `sample_id\tensemble_score\tverdict` rows under a header line.
void write_decisions(const std::vector<SampleDecision>& decisions, std::ostream& out);

/// `sample_id\tanswer` rows; abstentions become "I don't know.".
void write_final_answers(const std::vector<SampleDecision>& decisions,
                         const std::map<std::string, std::string>& answers, std::ostream& out);

}  // namespace halluprobe
