// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>

#include "halluprobe/ensemble.hpp"
#include "halluprobe/synthetic.hpp"
#include "support.hpp"

using namespace halluprobe;
using halluprobe::test::error_of;

namespace {

// Config with `heads` one-dimensional head sites; member j predicts sigmoid(x_j).
ModelConfig head_config(std::uint32_t heads) { return {0, 1, heads, 0, 1}; }

EnsembleModel identity_ensemble(std::uint32_t heads, double threshold = kDefaultDecisionThreshold) {
  EnsembleModel m;
  m.decision_threshold = threshold;
  for (std::uint32_t h = 0; h < heads; ++h) m.members.push_back(test::linear_probe(ProbeSite::attention(0, h), 1, 1.0, 0.0));
  return m;
}

// Trace whose member predictions are exactly `scores` up to logit round trips.
ActivationTrace trace_for(const std::vector<double>& scores, std::string id = "s") {
  ActivationTrace t;
  t.sample_id = std::move(id);
  for (double s : scores) t.features.push_back(static_cast<float>(test::logit_of(s)));
  t.label = Label::Correct;
  return t;
}

}  // namespace

TEST_SUITE("ensemble mean and decision") {
  TEST_CASE("singleton, two members, exact boundary") {
    CHECK(ensemble_mean(std::vector<double>{0.8}) == 0.8);
    const auto single = decide({0.8}, 0.65);
    CHECK(single.verdict == Verdict::Accept);
    CHECK(*single.ensemble_score == 0.8);
    const auto pair = decide({0.2, 0.8}, 0.65);
    CHECK(*pair.ensemble_score == 0.5);
    CHECK(pair.verdict == Verdict::Abstain);
    CHECK(decide({0.65}, 0.65).verdict == Verdict::Abstain);
    CHECK(decide({0.65, 0.65, 0.65, 0.65}, 0.65).verdict == Verdict::Abstain);
    CHECK(decide({std::nextafter(0.65, 1.0)}, 0.65).verdict == Verdict::Accept);
    for (std::size_t n = 1; n <= 200; ++n) {
      const std::vector<double> unanimous(n, 0.65);
      CHECK(ensemble_mean(unanimous) == 0.65);
      CHECK(decide(unanimous, 0.65).verdict == Verdict::Abstain);
    }
    CHECK(error_of([] { ensemble_mean(std::vector<double>{}); }) == ErrorCode::EmptyEnsemble);
  }

  TEST_CASE("pairwise sum matches a long-double reference") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int n : {1, 2, 7, 8, 9, 16, 17, 100, 1000}) {
      std::vector<double> v(n);
      long double ref = 0;
      for (auto& x : v) {
        x = u(rng);
        ref += x;
      }
      CHECK(std::abs(pairwise_sum(v) - static_cast<double>(ref)) <= 1e-12 * n);
    }
  }

  TEST_CASE("property: bounds, permutation invariance, monotonicity, decision consistency") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> size(1, 70);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> scores(size(rng));
      for (auto& s : scores) s = u(rng);
      const double mean = ensemble_mean(scores);
      CHECK(mean >= *std::min_element(scores.begin(), scores.end()));
      CHECK(mean <= *std::max_element(scores.begin(), scores.end()));
      auto shuffled = scores;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CHECK(std::abs(ensemble_mean(shuffled) - mean) <= 1e-15);
      auto raised = scores;
      const std::size_t j = rng() % raised.size();
      raised[j] = raised[j] + (1 - raised[j]) * u(rng);
      CHECK(ensemble_mean(raised) >= mean);
      const double t = u(rng);
      const auto d = decide(scores, t);
      CHECK((d.verdict == Verdict::Accept) == (*d.ensemble_score > t));
      if (d.verdict == Verdict::Accept) CHECK(decide(raised, t).verdict == Verdict::Accept);
    }
  }
}

TEST_SUITE("ensemble_predict") {
  TEST_CASE("mean of member predictions, member order canonical") {
    const auto model = identity_ensemble(3);
    const auto d = ensemble_predict(model, head_config(3), trace_for({0.9, 0.6, 0.75}));
    REQUIRE(d.member_scores.size() == 3);
    CHECK(d.member_scores[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(*d.ensemble_score == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(d.verdict == Verdict::Accept);
  }

  TEST_CASE("errors") {
    const auto config = head_config(2);
    const auto trace = trace_for({0.5, 0.5});
    EnsembleModel empty;
    CHECK(error_of([&] { ensemble_predict(empty, config, trace); }) == ErrorCode::EmptyEnsemble);
    auto wide = identity_ensemble(1);
    wide.members[0] = test::linear_probe(ProbeSite::attention(0, 0), 2, 1.0, 0.0);
    CHECK(error_of([&] { ensemble_predict(wide, config, trace); }) == ErrorCode::DimensionMismatch);
    auto far = identity_ensemble(1);
    far.members[0].site = ProbeSite::attention(0, 5);
    CHECK(error_of([&] { ensemble_predict(far, config, trace); }) == ErrorCode::MissingSite);
    auto dup = identity_ensemble(2);
    dup.members[1].site = dup.members[0].site;
    CHECK(error_of([&] { ensemble_predict(dup, config, trace); }) == ErrorCode::InvariantViolation);
    auto bad_threshold = identity_ensemble(2, 1.0);
    CHECK(error_of([&] { ensemble_predict(bad_threshold, config, trace); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("make_ensemble picks bundle probes in canonical order") {
    ProbeBundle bundle;
    bundle.config = head_config(4);
    for (std::uint32_t h = 0; h < 4; ++h) bundle.probes.push_back(test::constant_probe(ProbeSite::attention(0, h), 1, h));
    const auto m = make_ensemble(bundle, {ProbeSite::attention(0, 3), ProbeSite::attention(0, 1)}, 0.7);
    REQUIRE(m.members.size() == 2);
    CHECK(m.members[0].site == ProbeSite::attention(0, 1));
    CHECK(m.members[1].site == ProbeSite::attention(0, 3));
    CHECK(m.decision_threshold == 0.7);
    CHECK(error_of([&] { make_ensemble(bundle, {ProbeSite::attention(0, 7)}); }) == ErrorCode::MissingSite);
    CHECK(error_of([&] { make_ensemble(bundle, {}); }) == ErrorCode::EmptyEnsemble);
  }
}

TEST_SUITE("logprob filter") {
  TEST_CASE("strict below-threshold abstention") {
    const auto a = logprob_filter(-0.05, -0.07);
    CHECK(a.verdict == Verdict::Accept);
    CHECK_FALSE(a.ensemble_score.has_value());
    CHECK(logprob_filter(-0.2, -0.1).verdict == Verdict::Abstain);
    CHECK(logprob_filter(-0.1, -0.1).verdict == Verdict::Accept);
    CHECK(error_of([] { logprob_filter(std::numeric_limits<double>::quiet_NaN(), -0.1); }) ==
          ErrorCode::NonFiniteInput);
    CHECK(error_of([] { logprob_filter(-0.1, std::numeric_limits<double>::infinity()); }) ==
          ErrorCode::NonFiniteInput);
  }
}

TEST_SUITE("batch_filter") {
  TEST_CASE("empty dataset and input order") {
    const auto model = identity_ensemble(2);
    TraceDataset ds;
    ds.config = head_config(2);
    CHECK(batch_filter(model, ds).empty());
    ds.traces = {trace_for({0.9, 0.9}, "z"), trace_for({0.1, 0.2}, "a"), trace_for({0.7, 0.62}, "m")};
    const auto out = batch_filter(model, ds, 2);
    REQUIRE(out.size() == 3);
    CHECK(out[0].sample_id == "z");
    CHECK(out[1].sample_id == "a");
    CHECK(out[2].sample_id == "m");
    CHECK(out[0].decision.verdict == Verdict::Accept);
    CHECK(out[1].decision.verdict == Verdict::Abstain);
    CHECK(out[2].decision.verdict == Verdict::Accept);
  }

  TEST_CASE("decisions match a hand-computed mean oracle on synthetic data") {
    auto spec = desk_benchmark_spec(13);
    spec.n_samples = 400;
    const auto train = generate(spec);
    spec.split = "eval";
    const auto eval = generate(spec);
    EnsembleModel model;
    for (const auto& p : spec.planted) model.members.push_back(train_probe(train, p.site));
    std::sort(model.members.begin(), model.members.end(),
              [](const ProbeModel& a, const ProbeModel& b) { return a.site < b.site; });
    const auto decisions = batch_filter(model, eval, 3);
    REQUIRE(decisions.size() == eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i) {
      double sum = 0;
      for (const auto& m : model.members) sum += probe_predict(m, eval.config, eval.traces[i]);
      const double mean = sum / model.members.size();
      CHECK(std::abs(*decisions[i].decision.ensemble_score - mean) <= 1e-12);
      CHECK((decisions[i].decision.verdict == Verdict::Accept) == (mean > 0.65));
    }
    const auto serial = batch_filter(model, eval, 1);
    for (std::size_t i = 0; i < eval.size(); ++i) {
      CHECK(serial[i].decision.ensemble_score == decisions[i].decision.ensemble_score);
    }
  }

  TEST_CASE("errors carry the sample id") {
    const auto model = identity_ensemble(2);
    TraceDataset ds;
    ds.config = head_config(1);
    ds.traces = {trace_for({0.5}, "bad-one")};
    try {
      batch_filter(model, ds);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingSite);
      CHECK(e.message().find("bad-one") != std::string::npos);
    }
  }
}

TEST_SUITE("decision export") {
  TEST_CASE("decisions table and final answers") {
    std::vector<SampleDecision> ds{{"a", decide({0.9}, 0.65)}, {"b", decide({0.1}, 0.65)}, {"c", logprob_filter(-1, -2)}};
    std::ostringstream out;
    write_decisions(ds, out);
    CHECK(out.str() ==
          "sample_id\tensemble_score\tverdict\n"
          "a\t0.900000000\taccept\n"
          "b\t0.100000000\tabstain\n"
          "c\t-\taccept\n");
    std::ostringstream answers;
    write_final_answers(ds, {{"a", "Paris"}, {"b", "Lyon"}, {"c", "42"}}, answers);
    CHECK(answers.str() == "sample_id\tanswer\na\tParis\nb\tI don't know.\nc\t42\n");
    std::ostringstream missing;
    CHECK(error_of([&] { write_final_answers(ds, {{"a", "Paris"}}, missing); }) == ErrorCode::InvalidArgument);
  }
}
