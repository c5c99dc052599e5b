// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/probe.hpp"

#include "halluprobe/error.hpp"
#include "halluprobe/parallel.hpp"

namespace halluprobe {

ProbeModel train_probe(const TraceDataset& train, const ProbeSite& site, const ProbeTrainingOptions& options) {
  if (!train.config.contains(site)) {
    throw Error(ErrorCode::ConfigMismatch, "site " + to_string(site) + " not in training config");
  }
  const Eigen::VectorXd y = label_vector(train);
  Eigen::MatrixXd X = site_matrix(train, site);

  LogRegOptions lr;
  lr.lambda = options.lambda;
  lr.max_iterations = options.max_iterations;
  lr.gradient_tolerance = options.gradient_tolerance;

  ProbeModel probe;
  probe.site = site;
  if (site.is_hidden()) {
    probe.pca = fit_pca(X, options.pca_cumvar);
    const Eigen::MatrixXd reduced =
        (X.rowwise() - probe.pca->mean.transpose()) * probe.pca->components.transpose();
    probe.logreg = train_logreg(reduced, y, lr);
  } else {
    probe.logreg = train_logreg(X, y, lr);
  }
  return probe;
}

std::vector<ProbeModel> train_probes(const TraceDataset& train, const std::vector<ProbeSite>& sites,
                                     const ProbeTrainingOptions& options, unsigned workers) {
  std::vector<ProbeModel> probes(sites.size());
  parallel_for(sites.size(), workers, [&](std::size_t i) { probes[i] = train_probe(train, sites[i], options); });
  return probes;
}

double probe_predict(const ProbeModel& probe, const ModelConfig& config, const ActivationTrace& trace) {
  if (!config.contains(probe.site)) {
    throw Error(ErrorCode::MissingSite, "trace config lacks site " + to_string(probe.site));
  }
  if (static_cast<Eigen::Index>(config.site_dim(probe.site)) != probe.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "site " + to_string(probe.site) + " has length " +
                                                  std::to_string(config.site_dim(probe.site)) + ", probe expects " +
                                                  std::to_string(probe.input_dim()));
  }
  if (trace.features.size() != config.feature_length()) {
    throw Error(ErrorCode::DimensionMismatch, "trace '" + trace.sample_id + "' has " +
                                                  std::to_string(trace.features.size()) + " features, config needs " +
                                                  std::to_string(config.feature_length()));
  }
  const Eigen::VectorXd e = trace.site_vector(config, probe.site).cast<double>();
  if (probe.pca) return predict(probe.logreg, pca_transform(*probe.pca, e));
  return predict(probe.logreg, e);
}

Eigen::VectorXd probe_scores(const ProbeModel& probe, const TraceDataset& dataset) {
  Eigen::VectorXd scores(static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    scores(static_cast<Eigen::Index>(i)) = probe_predict(probe, dataset.config, dataset.traces[i]);
  }
  return scores;
}

}  // namespace halluprobe
