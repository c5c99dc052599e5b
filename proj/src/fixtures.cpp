// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "halluprobe/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "halluprobe/error.hpp"
#include "halluprobe/random.hpp"

namespace halluprobe {

namespace {

struct HiddenRow {
  int rank;
  std::uint32_t layer;
  double f1;
};

struct HeadRow {
  int rank;
  std::uint32_t layer;
  std::uint32_t head;
  double f1;
};

// Hidden-state probes kept at the 0.5 cut, by published rank.
constexpr HiddenRow kHiddenRows[] = {
    {1, 17, 0.5329}, {2, 19, 0.5167}, {3, 18, 0.5154}, {4, 16, 0.5139},
    {5, 14, 0.5109}, {6, 15, 0.5093}, {7, 13, 0.5032},
};

// Attention-head probes kept at the 0.5 cut, by published rank.
constexpr HeadRow kHeadRows[] = {
    {1, 17, 9, 0.5368},
    {2, 17, 11, 0.5317},
    {3, 16, 28, 0.5278},
    {4, 20, 15, 0.5271},
    {5, 16, 23, 0.5256},
    {6, 20, 13, 0.5252},
    {7, 17, 8, 0.5239},
    {8, 15, 20, 0.5217},
    {9, 20, 6, 0.5216},
    {10, 16, 24, 0.5198},
    {11, 20, 31, 0.5182},
    {12, 36, 25, 0.5177},
    {13, 16, 31, 0.5169},
    {14, 15, 8, 0.5167},
    {15, 15, 0, 0.5166},
    {16, 15, 15, 0.5157},
    {17, 14, 17, 0.5157},
    {18, 16, 29, 0.5156},
    {19, 16, 22, 0.5151},
    {20, 17, 10, 0.5137},
    {21, 20, 30, 0.5136},
    {22, 15, 23, 0.5134},
    {23, 36, 27, 0.5133},
    {24, 17, 28, 0.5131},
    {25, 15, 9, 0.5128},
    {26, 15, 22, 0.5127},
    {27, 14, 10, 0.5121},
    {28, 15, 28, 0.5120},
    {29, 20, 7, 0.5119},
    {30, 17, 26, 0.5118},
    {31, 12, 10, 0.5109},
    {32, 15, 21, 0.5109},
    {33, 20, 28, 0.5108},
    {34, 14, 16, 0.5107},
    {35, 20, 29, 0.5102},
    {36, 15, 13, 0.5093},
    {37, 15, 12, 0.5078},
    {38, 16, 7, 0.5069},
    {39, 19, 7, 0.5066},
    {40, 14, 19, 0.5063},
    {41, 19, 6, 0.5062},
    {42, 29, 28, 0.5060},
    {43, 15, 10, 0.5058},
    {44, 17, 29, 0.5054},
    {45, 14, 8, 0.5051},
    {46, 15, 30, 0.5050},
    {47, 15, 31, 0.5047},
    {48, 19, 4, 0.5047},
    {49, 19, 5, 0.5041},
    {50, 20, 14, 0.5040},
    {51, 27, 17, 0.5040},
    {52, 20, 12, 0.5040},
    {53, 14, 11, 0.5035},
    {54, 27, 18, 0.5021},
    {55, 12, 0, 0.5018},
    {56, 14, 24, 0.5013},
    {57, 16, 2, 0.5009},
    {58, 39, 25, 0.5009},
};

// F1 threshold | filters | accuracy | missing | hallucination | trustfulness | ensemble threshold
constexpr PublishedAblationRow kAblationRows[] = {
    {0.0, 1321, 0.068, 0.886, 0.045, 0.023, 0.56},
    {0.1, 1321, 0.068, 0.886, 0.045, 0.023, 0.56},
    {0.2, 1321, 0.068, 0.886, 0.045, 0.023, 0.56},
    {0.3, 1313, 0.069, 0.885, 0.046, 0.023, 0.56},
    {0.4, 752, 0.074, 0.878, 0.048, 0.026, 0.58},
    {0.5, 65, 0.082, 0.873, 0.045, 0.036, 0.65},
};

struct ResultLiteral {
  const char* table;
  const char* method;
  double accuracy, missing, hallucination, trustfulness;
};

constexpr ResultLiteral kResultRows[] = {
    {"single-turn", "Baseline", 0.207, 0.058, 0.735, -0.528},
    {"single-turn", "+ only hidden_state (HS)", 0.099, 0.812, 0.089, 0.010},
    {"single-turn", "+ only attention_heads (MH)", 0.081, 0.873, 0.046, 0.035},
    {"single-turn", "+ HS+ MH", 0.082, 0.873, 0.045, 0.036},
    {"single-turn", "Leaderboard (Task 1)", 0.088, 0.860, 0.052, 0.036},
    {"single-turn", "Leaderboard (Task 2)", 0.088, 0.859, 0.053, 0.034},
    {"multi-turn", "Baseline", 0.268, 0.352, 0.379, -0.111},
    {"multi-turn", "+ only hidden_state (HS)", 0.173, 0.742, 0.084, 0.089},
    {"multi-turn", "+ only attention_heads (MH)", 0.156, 0.784, 0.060, 0.097},
    {"multi-turn", "+ HS+ MH", 0.155, 0.784, 0.061, 0.094},
    {"multi-turn", "Leaderboard (Task 3)", 0.138, 0.827, 0.035, 0.104},
};

// Synthetic fill for the 1256 sites without a published F1, in canonical
// order of those sites: band (lower, upper] and how many sites go in it.
struct FillBand {
  double lower;
  std::size_t count;
};
constexpr FillBand kFillBands[] = {{0.2, 8}, {0.3, 561}, {0.4, 687}};

SiteEvaluation with_counts(const ProbeSite& site, double f1) {
  SiteEvaluation e;
  e.site = site;
  const auto tp = static_cast<std::uint64_t>(std::llround(f1 * 10000.0));
  e.confusion = {tp, 10000 - tp, 10000 - tp, 0};
  e.f1 = f1_score(e.confusion);
  return e;
}

}  // namespace

const char* fixture_id(FixtureName name) {
  switch (name) {
    case FixtureName::AppendixBHidden: return "appendix_b_hidden";
    case FixtureName::AppendixBHeads: return "appendix_b_heads";
    case FixtureName::AppendixCCounts: return "appendix_c_counts";
    case FixtureName::Table1Rows: return "table1_rows";
  }
  return "";
}

Fixture load_paper_fixture(FixtureName name) {
  Fixture f{name, {}, {}, {}, {}};
  switch (name) {
    case FixtureName::AppendixBHidden:
      f.origin = "hidden states selected by non-hallucination F1 (appendix table)";
      for (const auto& r : kHiddenRows) f.sites.push_back({r.rank, ProbeSite::hidden(r.layer), r.f1});
      break;
    case FixtureName::AppendixBHeads:
      f.origin = "top 58 attention heads selected by non-hallucination F1 (appendix table)";
      for (const auto& r : kHeadRows) f.sites.push_back({r.rank, ProbeSite::attention(r.layer, r.head), r.f1});
      break;
    case FixtureName::AppendixCCounts:
      f.origin = "F1-threshold filter-selection ablation (appendix table)";
      f.ablation.assign(std::begin(kAblationRows), std::end(kAblationRows));
      break;
    case FixtureName::Table1Rows:
      f.origin = "results for single-turn and multi-turn tasks (main results table)";
      for (const auto& r : kResultRows) {
        f.results.push_back({r.table, r.method, r.accuracy, r.missing, r.hallucination, r.trustfulness});
      }
      break;
  }
  return f;
}

Fixture load_paper_fixture(const std::string& name) {
  for (auto n : {FixtureName::AppendixBHidden, FixtureName::AppendixBHeads, FixtureName::AppendixCCounts,
                 FixtureName::Table1Rows}) {
    if (name == fixture_id(n)) return load_paper_fixture(n);
  }
  throw Error(ErrorCode::UnknownFixture, "no fixture named '" + name + "'");
}

std::string fixture_text(const Fixture& f) {
  std::string out = fmt::format("{}\t{}\n", fixture_id(f.name), f.origin);
  for (const auto& s : f.sites) out += fmt::format("{}\t{}\t{:.4f}\n", s.rank, to_string(s.site), s.f1);
  for (const auto& a : f.ablation) {
    out += fmt::format("{:.1f}\t{}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.2f}\n", a.f1_threshold, a.filters, a.accuracy,
                       a.missing, a.hallucination, a.trustfulness, a.ensemble_threshold);
  }
  for (const auto& r : f.results) {
    out += fmt::format("{}\t{}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3f}\n", r.table, r.method, r.accuracy, r.missing,
                       r.hallucination, r.trustfulness);
  }
  return out;
}

std::uint64_t fixture_checksum(FixtureName name) { return fnv1a64(fixture_text(load_paper_fixture(name))); }

std::vector<SiteEvaluation> published_evaluations() {
  std::vector<SiteEvaluation> out;
  for (const auto& r : kHiddenRows) out.push_back(with_counts(ProbeSite::hidden(r.layer), r.f1));
  for (const auto& r : kHeadRows) out.push_back(with_counts(ProbeSite::attention(r.layer, r.head), r.f1));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.site < b.site; });
  return out;
}

std::vector<SiteEvaluation> reference_scale_evaluations() {
  const auto published = published_evaluations();
  std::vector<SiteEvaluation> out;
  out.reserve(reference_scale_config().total_sites());
  std::size_t band = 0;
  std::size_t in_band = 0;
  for (const auto& site : enumerate_sites(reference_scale_config())) {
    auto it = std::lower_bound(published.begin(), published.end(), site,
                               [](const SiteEvaluation& e, const ProbeSite& s) { return e.site < s; });
    if (it != published.end() && it->site == site) {
      out.push_back(*it);
      continue;
    }
    while (in_band == kFillBands[band].count) {
      ++band;
      in_band = 0;
    }
    // SYNTHETIC: spread evenly over [lower + 0.001, lower + 0.099].
    const auto& b = kFillBands[band];
    const double t = b.count > 1 ? static_cast<double>(in_band) / static_cast<double>(b.count - 1) : 0.0;
    const double f1 = std::round((b.lower + 0.001 + 0.098 * t) * 10000.0) / 10000.0;
    out.push_back(with_counts(site, f1));
    ++in_band;
  }
  return out;
}

}  // namespace halluprobe
