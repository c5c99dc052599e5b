// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/logreg.hpp"
#include "halluprobe/pca.hpp"
#include "halluprobe/site.hpp"

namespace halluprobe {

/// Linear hallucination probe for one site. Hidden-state probes carry a PCA
/// reducer fitted on the training split; attention-head probes do not.
struct ProbeModel {
  ProbeSite site;
  std::optional<PcaModeld> pca;
  LogRegModeld logreg;

  Eigen::Index input_dim() const { return pca ? pca->input_dim() : logreg.dim(); }
};

struct ProbeTrainingOptions {
  double lambda = 1e-4;
  double pca_cumvar = 0.95;
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
};

ProbeModel train_probe(const TraceDataset& train, const ProbeSite& site, const ProbeTrainingOptions& options = {});

/// Trains one probe per site; result order follows `sites`.
std::vector<ProbeModel> train_probes(const TraceDataset& train, const std::vector<ProbeSite>& sites,
                                     const ProbeTrainingOptions& options = {}, unsigned workers = 1);

/// Probability that the trace's answer is correct, according to this probe.
double probe_predict(const ProbeModel& probe, const ModelConfig& config, const ActivationTrace& trace);

/// probe_predict over every trace, in dataset order.
Eigen::VectorXd probe_scores(const ProbeModel& probe, const TraceDataset& dataset);

}  // namespace halluprobe
