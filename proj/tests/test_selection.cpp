// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "halluprobe/fixtures.hpp"
#include "halluprobe/selection.hpp"
#include "halluprobe/synthetic.hpp"
#include "support.hpp"

using namespace halluprobe;
using halluprobe::test::error_of;

namespace {

TraceDataset all_correct(std::size_t n) {
  TraceDataset ds;
  ds.config = test::single_head_config(2);
  for (std::size_t i = 0; i < n; ++i) {
    ds.traces.push_back({"s" + std::to_string(i), {0.f, 0.f}, Label::Correct, std::nullopt});
  }
  return ds;
}

std::vector<SiteEvaluation> random_evaluations(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> f1(0.0, 1.0);
  const auto sites = enumerate_sites(desk_scale_config());
  std::vector<SiteEvaluation> out;
  for (std::size_t i = 0; i < n && i < sites.size(); ++i) {
    // Round to a coarse grid so exact ties with thresholds occur.
    out.push_back({sites[i], std::round(f1(rng) * 20) / 20, {}});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

TEST_SUITE("evaluate_probes") {
  TEST_CASE("constant probes on all-Correct data") {
    const auto ds = all_correct(10);
    const ProbeSite site = ProbeSite::attention(0, 0);
    const auto hi = evaluate_probes({test::constant_probe(site, 2, test::logit_of(0.9))}, ds);
    REQUIRE(hi.size() == 1);
    CHECK(hi[0].f1 == 1.0);
    CHECK(hi[0].confusion == ConfusionCounts{10, 0, 0, 0});
    const auto lo = evaluate_probes({test::constant_probe(site, 2, test::logit_of(0.1))}, ds);
    CHECK(lo[0].f1 == 0.0);
    CHECK(lo[0].confusion == ConfusionCounts{0, 0, 10, 0});
  }

  TEST_CASE("f1 is derived from the stored confusion counts") {
    auto spec = desk_benchmark_spec(5);
    spec.n_samples = 300;
    const auto train = generate(spec);
    spec.split = "select";
    const auto select = generate(spec);
    const auto probes = train_probes(train, enumerate_sites(train.config));
    const auto evals = evaluate_probes(probes, select, 2);
    REQUIRE(evals.size() == 40);
    for (const auto& e : evals) {
      CHECK(e.f1 == f1_score(e.confusion));
      CHECK(e.confusion.total() == 300);
    }
    CHECK(evals == evaluate_probes(probes, select, 1));
  }

  TEST_CASE("errors") {
    auto ds = all_correct(3);
    const auto probe = test::constant_probe(ProbeSite::attention(0, 0), 2, 0.0);
    CHECK(error_of([&] { evaluate_probes({test::constant_probe(ProbeSite::attention(1, 0), 2, 0.0)}, ds); }) ==
          ErrorCode::ConfigMismatch);
    CHECK(error_of([&] { evaluate_probes({test::constant_probe(ProbeSite::attention(0, 0), 5, 0.0)}, ds); }) ==
          ErrorCode::ConfigMismatch);
    ds.traces[1].label.reset();
    CHECK(error_of([&] { evaluate_probes({probe}, ds); }) == ErrorCode::UnlabeledData);
  }
}

TEST_SUITE("select_sites") {
  TEST_CASE("published fixture at 0.5: 7 hidden + 58 heads") {
    const auto report = select_sites(reference_scale_evaluations(), 0.5);
    CHECK(report.selected.size() == 65);
    CHECK(report.hidden_selected == 7);
    CHECK(report.heads_selected == 58);
    CHECK(report.status == SelectionStatus::Ok);
    CHECK(std::is_sorted(report.selected.begin(), report.selected.end()));
  }

  TEST_CASE("published fixture at 0.53: three sites") {
    const auto report = select_sites(reference_scale_evaluations(), 0.53);
    const std::vector<ProbeSite> expected{ProbeSite::hidden(17), ProbeSite::attention(17, 9),
                                          ProbeSite::attention(17, 11)};
    CHECK(report.selected == expected);
    const auto find = [&](const ProbeSite& s) {
      return std::find_if(report.evaluations.begin(), report.evaluations.end(),
                          [&](const SiteEvaluation& e) { return e.site == s; })
          ->f1;
    };
    CHECK(find(ProbeSite::hidden(17)) == doctest::Approx(0.5329).epsilon(1e-12));
    CHECK(find(ProbeSite::attention(17, 9)) == doctest::Approx(0.5368).epsilon(1e-12));
    CHECK(find(ProbeSite::attention(17, 11)) == doctest::Approx(0.5317).epsilon(1e-12));
  }

  TEST_CASE("published fixture at 0.6: empty selection is a status") {
    const auto report = select_sites(reference_scale_evaluations(), 0.6);
    CHECK(report.selected.empty());
    CHECK(report.status == SelectionStatus::EmptySelection);
    CHECK(report.evaluations.size() == 1321);
  }

  TEST_CASE("strict boundary and empty input") {
    const std::vector<SiteEvaluation> one{{ProbeSite::hidden(0), 0.5, {}}};
    CHECK(select_sites(one, 0.5).selected.empty());
    CHECK(select_sites(one, 0.4999999).selected.size() == 1);
    CHECK(error_of([] { select_sites({}, 0.5); }) == ErrorCode::InvalidArgument);
    const std::vector<SiteEvaluation> dup{{ProbeSite::hidden(0), 0.5, {}}, {ProbeSite::hidden(0), 0.7, {}}};
    CHECK(error_of([&] { select_sites(dup, 0.5); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("property: exact membership, monotone in threshold, deterministic") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      const auto evals = random_evaluations(rng, 1 + trial % 40);
      std::vector<double> ts{0.0, 0.25, 0.5, 0.55, 0.75, 1.0};
      std::optional<std::set<ProbeSite>> previous;
      for (double t : ts) {
        const auto r = select_sites(evals, t);
        CHECK(std::is_sorted(r.selected.begin(), r.selected.end()));
        std::set<ProbeSite> expected;
        std::size_t hidden = 0;
        for (const auto& e : evals) {
          if (e.f1 > t) {
            expected.insert(e.site);
            hidden += e.site.is_hidden() ? 1 : 0;
          }
        }
        const std::set<ProbeSite> got(r.selected.begin(), r.selected.end());
        CHECK(got == expected);
        CHECK(r.hidden_selected == hidden);
        CHECK(r.heads_selected == expected.size() - hidden);
        if (previous) CHECK(std::includes(previous->begin(), previous->end(), got.begin(), got.end()));
        previous = got;
        const auto again = select_sites(evals, t);
        CHECK(again.selected == r.selected);
      }
    }
  }
}

TEST_SUITE("ablate_thresholds") {
  TEST_CASE("reference-scale fixture reproduces the filter counts") {
    const auto table = ablate_thresholds(reference_scale_evaluations(), {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    std::vector<std::size_t> counts;
    for (const auto& row : table) counts.push_back(row.selected);
    CHECK(counts == std::vector<std::size_t>{1321, 1321, 1321, 1313, 752, 65, 0});
  }

  TEST_CASE("strict boundary") {
    const std::vector<SiteEvaluation> one{{ProbeSite::hidden(0), 0.5, {}}};
    const auto table = ablate_thresholds(one, {0.4, 0.5});
    CHECK(table[0].selected == 1);
    CHECK(table[1].selected == 0);
    const std::vector<SiteEvaluation> zero{{ProbeSite::hidden(0), 0.0, {}}, {ProbeSite::hidden(1), 0.1, {}}};
    CHECK(ablate_thresholds(zero, {0.0})[0].selected == 1);
  }

  TEST_CASE("counts are non-increasing; unsorted thresholds are refused") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const auto evals = random_evaluations(rng, 40);
      const auto table = ablate_thresholds(evals, std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
      for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].selected <= table[i - 1].selected);
    }
    CHECK(error_of([] { ablate_thresholds({{ProbeSite::hidden(0), 0.5, {}}}, {0.5, 0.4}); }) ==
          ErrorCode::InvalidArgument);
  }
}

TEST_SUITE("selection report") {
  TEST_CASE("ranking is by F1, ties in canonical order") {
    const std::vector<SiteEvaluation> evals{{ProbeSite::attention(0, 1), 0.7, {}},
                                            {ProbeSite::hidden(3), 0.7, {}},
                                            {ProbeSite::hidden(1), 0.9, {}},
                                            {ProbeSite::attention(0, 0), 0.7, {}}};
    const auto ranked = rank_by_f1(evals);
    CHECK(ranked[0].site == ProbeSite::hidden(1));
    CHECK(ranked[1].site == ProbeSite::hidden(3));
    CHECK(ranked[2].site == ProbeSite::attention(0, 0));
    CHECK(ranked[3].site == ProbeSite::attention(0, 1));
  }

  TEST_CASE("published fixture ranks head (17,9) first") {
    const auto ranked = rank_by_f1(reference_scale_evaluations());
    CHECK(ranked.front().site == ProbeSite::attention(17, 9));
    CHECK(ranked[1].site == ProbeSite::hidden(17));
  }

  TEST_CASE("table round trip keeps sites, f1, counts and the selected flag") {
    const auto report = select_sites(reference_scale_evaluations(), 0.5);
    std::ostringstream out;
    write_selection_report(report, out);
    const std::string text = out.str();
    CHECK(text.rfind("# threshold=0.500000 selected=65 hidden=7 heads=58 status=ok\n", 0) == 0);
    std::istringstream in(text);
    std::vector<ProbeSite> flagged;
    const auto back = read_site_evaluations(in, &flagged);
    CHECK(flagged == report.selected);
    REQUIRE(back.size() == report.evaluations.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].site == report.evaluations[i].site);
      CHECK(back[i].confusion == report.evaluations[i].confusion);
      CHECK(back[i].f1 == doctest::Approx(report.evaluations[i].f1).epsilon(1e-12));
    }
    std::ostringstream again;
    write_selection_report(select_sites(back, 0.5), again);
    CHECK(again.str() == text);
  }

  TEST_CASE("minimal table without counts; malformed tables") {
    std::istringstream ok("kind\tlayer\thead\tf1\nhidden_state\t2\t-\t0.61\nattention_head\t1\t3\t0.4\n");
    const auto evals = read_site_evaluations(ok);
    REQUIRE(evals.size() == 2);
    CHECK(evals[0].site == ProbeSite::hidden(2));
    CHECK(evals[0].f1 == 0.61);
    CHECK(evals[1].site == ProbeSite::attention(1, 3));
    std::istringstream missing("kind\tlayer\tf1\nhidden_state\t2\t0.6\n");
    CHECK(error_of([&] { read_site_evaluations(missing); }) == ErrorCode::ParseError);
    std::istringstream width("kind\tlayer\thead\tf1\nhidden_state\t2\n");
    CHECK(error_of([&] { read_site_evaluations(width); }) == ErrorCode::ParseError);
    std::istringstream number("kind\tlayer\thead\tf1\nhidden_state\tx\t-\t0.6\n");
    CHECK(error_of([&] { read_site_evaluations(number); }) == ErrorCode::ParseError);
    std::istringstream kind("kind\tlayer\thead\tf1\nmlp\t1\t-\t0.6\n");
    CHECK(error_of([&] { read_site_evaluations(kind); }) == ErrorCode::ParseError);
    std::istringstream empty("");
    CHECK(error_of([&] { read_site_evaluations(empty); }) == ErrorCode::ParseError);
  }
}
