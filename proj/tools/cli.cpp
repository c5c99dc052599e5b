// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "halluprobe/activation_store.hpp"
#include "halluprobe/ensemble.hpp"
#include "halluprobe/error.hpp"
#include "halluprobe/evaluation.hpp"
#include "halluprobe/fixtures.hpp"
#include "halluprobe/probe.hpp"
#include "halluprobe/probe_bundle.hpp"
#include "halluprobe/selection.hpp"
#include "halluprobe/synthetic.hpp"

namespace halluprobe::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutEnv = "HALLUPROBE_OUT";

struct Options {
  std::string out = "halluprobe_out";
  unsigned workers = 1;
  std::optional<std::uint64_t> seed;
  std::string train;
  std::string select;
  std::string eval;
  double lambda = 1e-4;
  double pca_cumvar = 0.95;
  double f1_threshold = 0.5;
  double decision_threshold = kDefaultDecisionThreshold;
  std::string sweep_grid = "0.50:0.90:0.01";

  std::string spec_file;                      // gen
  std::string evaluations;                    // select, ablate
  bool fixture = false;                       // select, ablate
  std::string f1_grid = "0.0:1.0:0.1";        // ablate
  std::string answers;                        // ensemble
  std::vector<double> logprob_thresholds;     // eval
  std::string outcomes;                       // eval
};

fs::path out_dir(const Options& o) { return fs::path(o.out); }

fs::path input_or_default(const std::string& given, const Options& o, const char* name) {
  return given.empty() ? out_dir(o) / name : fs::path(given);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error(ErrorCode::IoFailure, "failed writing '" + path.string() + "'");
}

TraceDataset load_traces(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::IoFailure, "trace file '" + path.string() + "' not found");
  return read_trace_file(path);
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  return f;
}

std::vector<SiteEvaluation> evaluations_from(const Options& o, std::ostream& log) {
  if (o.fixture) {
    log << "using the published 1321-site F1 fixture (synthetic fill below the published sites)\n";
    return reference_scale_evaluations();
  }
  auto in = open_in(o.evaluations);
  return read_site_evaluations(in);
}

// Ensemble manifest: selected members and the decision threshold.
void write_ensemble_manifest(const EnsembleModel& model, const fs::path& path) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : model.members) members.push_back(to_string(m.site));
  nlohmann::json j = {{"format", "halluprobe-ensemble"},
                      {"version", 1},
                      {"decision_threshold", model.decision_threshold},
                      {"members", members}};
  write_text(path, j.dump(2) + "\n");
}

EnsembleModel read_ensemble_manifest(const fs::path& path, const ProbeBundle& bundle) {
  auto in = open_in(path);
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "halluprobe-ensemble") throw Error(ErrorCode::BadMagic, "not an ensemble manifest");
    std::vector<ProbeSite> sites;
    for (const auto& s : j.at("members")) sites.push_back(parse_site(s.get<std::string>()));
    return make_ensemble(bundle, sites, j.at("decision_threshold").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("ensemble manifest: ") + e.what());
  }
}

std::string selection_summary(const SelectionReport& r) {
  return fmt::format("selected {} sites ({} hidden-state, {} attention-head) with F1 > {}{}", r.selected.size(),
                     r.hidden_selected, r.heads_selected, r.threshold,
                     r.status == SelectionStatus::EmptySelection ? " [warning: empty selection]" : "");
}

// --- subcommands ----------------------------------------------------------

void cmd_gen(const Options& o, std::ostream& log) {
  SyntheticSpec spec = o.spec_file.empty() ? desk_benchmark_spec() : read_synthetic_spec(o.spec_file);
  if (o.seed) spec.seed = *o.seed;
  write_text(out_dir(o) / "synthetic.cfg", format_synthetic_spec(spec));
  for (const char* split : {"train", "select", "eval"}) {
    spec.split = split;
    const auto dataset = generate(spec, o.workers);
    const auto path = out_dir(o) / (std::string(split) + ".htr");
    const auto bytes = write_trace_file(dataset, path);
    log << fmt::format("wrote {} ({} samples, {} bytes)\n", path.string(), dataset.size(), bytes);
  }
}

void cmd_train(const Options& o, std::ostream& log) {
  const auto train = load_traces(input_or_default(o.train, o, "train.htr"));
  ProbeTrainingOptions options;
  options.lambda = o.lambda;
  options.pca_cumvar = o.pca_cumvar;
  ProbeBundle bundle;
  bundle.config = train.config;
  bundle.probes = train_probes(train, enumerate_sites(train.config), options, o.workers);
  write_probe_bundle(bundle, out_dir(o));
  std::size_t converged = 0;
  for (const auto& p : bundle.probes) converged += p.logreg.converged ? 1 : 0;
  log << fmt::format("trained {} probes on {} samples ({} converged)\n", bundle.probes.size(), train.size(),
                     converged);
}

void cmd_select(const Options& o, std::ostream& log) {
  std::vector<SiteEvaluation> evaluations;
  if (o.fixture || !o.evaluations.empty()) {
    evaluations = evaluations_from(o, log);
  } else {
    const auto bundle = read_probe_bundle(out_dir(o));
    const auto select = load_traces(input_or_default(o.select, o, "select.htr"));
    if (!(select.config == bundle.config)) throw Error(ErrorCode::ConfigMismatch, "selection split config differs");
    evaluations = evaluate_probes(bundle.probes, select, o.workers);
  }
  const auto report = select_sites(evaluations, o.f1_threshold);
  std::ostringstream table;
  write_selection_report(report, table);
  write_text(out_dir(o) / "selection.tsv", table.str());
  log << selection_summary(report) << '\n';
  const auto ranked = rank_by_f1(report.evaluations);
  for (std::size_t i = 0; i < ranked.size() && i < report.selected.size() && i < 10; ++i) {
    log << fmt::format("  {:>2}  {:<10} F1 {:.4f}\n", i + 1, to_string(ranked[i].site), ranked[i].f1);
  }
}

void cmd_ensemble(const Options& o, std::ostream& log) {
  const auto bundle = read_probe_bundle(out_dir(o));
  auto in = open_in(out_dir(o) / "selection.tsv");
  std::vector<ProbeSite> selected;
  read_site_evaluations(in, &selected);
  if (selected.empty()) throw Error(ErrorCode::EmptyEnsemble, "selection report lists no sites");
  const auto model = make_ensemble(bundle, selected, o.decision_threshold);
  write_ensemble_manifest(model, out_dir(o) / "ensemble.json");
  log << fmt::format("ensemble of {} probes, accept when mean > {}\n", model.members.size(),
                     model.decision_threshold);

  const auto eval_path = input_or_default(o.eval, o, "eval.htr");
  if (!o.eval.empty() || fs::exists(eval_path)) {
    const auto dataset = load_traces(eval_path);
    const auto decisions = batch_filter(model, dataset, o.workers);
    std::ostringstream table;
    write_decisions(decisions, table);
    write_text(out_dir(o) / "decisions.tsv", table.str());
    std::size_t accepted = 0;
    for (const auto& d : decisions) accepted += d.decision.verdict == Verdict::Accept ? 1 : 0;
    log << fmt::format("{} of {} answers accepted\n", accepted, decisions.size());
    if (!o.answers.empty()) {
      auto answers_in = open_in(o.answers);
      std::map<std::string, std::string> answers;
      std::string line;
      while (std::getline(answers_in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.rfind("sample_id\t", 0) == 0) continue;
        answers[line.substr(0, tab)] = line.substr(tab + 1);
      }
      std::ostringstream final_answers;
      write_final_answers(decisions, answers, final_answers);
      write_text(out_dir(o) / "answers.tsv", final_answers.str());
    }
  }
}

void cmd_eval(const Options& o, bool threshold_given, std::ostream& log) {
  std::vector<std::pair<std::string, EvaluationReport>> rows;
  if (!o.outcomes.empty()) {
    auto in = open_in(o.outcomes);
    rows.emplace_back("Outcomes", score_outcomes(read_outcomes(in)));
  } else {
    const auto bundle = read_probe_bundle(out_dir(o));
    auto model = read_ensemble_manifest(out_dir(o) / "ensemble.json", bundle);
    if (threshold_given) model.decision_threshold = o.decision_threshold;
    const auto dataset = load_traces(input_or_default(o.eval, o, "eval.htr"));
    rows.emplace_back("Baseline", baseline_report(dataset));
    for (double t : o.logprob_thresholds) rows.emplace_back(fmt::format("Logprobs ({})", t), logprob_report(dataset, t));
    rows.emplace_back(fmt::format("Ensemble (> {})", model.decision_threshold),
                      apply_and_score(model, dataset, o.workers));
  }
  std::ostringstream table;
  write_reports(rows, table);
  write_text(out_dir(o) / "report.tsv", table.str());
  log << format_report_table(rows);
}

void cmd_sweep(const Options& o, std::ostream& log) {
  const auto bundle = read_probe_bundle(out_dir(o));
  const auto model = read_ensemble_manifest(out_dir(o) / "ensemble.json", bundle);
  const auto dataset = load_traces(input_or_default(o.select, o, "select.htr"));
  const auto sweep = sweep_threshold(model, dataset, parse_threshold_grid(o.sweep_grid), o.workers);
  std::ostringstream table;
  write_sweep(sweep, table);
  write_text(out_dir(o) / "sweep.tsv", table.str());
  for (const auto& [t, r] : sweep.table) {
    if (t == sweep.best_threshold) {
      log << fmt::format("best decision threshold {} (trustfulness {:.3f})\n", t, r.trustfulness);
    }
  }
}

void cmd_ablate(const Options& o, std::ostream& log) {
  const auto f1_grid = parse_threshold_grid(o.f1_grid);
  const auto sweep_grid = parse_threshold_grid(o.sweep_grid);
  std::vector<AblationRow> rows;
  if (o.fixture || !o.evaluations.empty()) {
    rows = ablation_run(evaluations_from(o, log), f1_grid, nullptr, sweep_grid);
  } else {
    const auto bundle = read_probe_bundle(out_dir(o));
    const auto select = load_traces(input_or_default(o.select, o, "select.htr"));
    const auto evaluations = evaluate_probes(bundle.probes, select, o.workers);
    const auto table = score_table(bundle.probes, select, o.workers);
    rows = ablation_run(evaluations, f1_grid, &table, sweep_grid);
  }
  std::ostringstream table;
  write_ablation(rows, table);
  write_text(out_dir(o) / "ablation.tsv", table.str());
  log << "F1 threshold | filters | trustfulness | ensemble threshold\n";
  for (const auto& r : rows) {
    log << fmt::format("{:>12.1f} | {:>7} | {:>12} | {}\n", r.f1_threshold, r.filters,
                       r.report ? fmt::format("{:.3f}", r.report->trustfulness) : "-",
                       r.ensemble_threshold ? fmt::format("{:.2f}", *r.ensemble_threshold)
                                            : (r.filters == 0 ? "no filters" : "-"));
  }
}

void cmd_fixtures(const Options& o, std::ostream& log) {
  for (auto name : {FixtureName::AppendixBHidden, FixtureName::AppendixBHeads, FixtureName::AppendixCCounts,
                    FixtureName::Table1Rows}) {
    const auto fixture = load_paper_fixture(name);
    write_text(out_dir(o) / (std::string(fixture_id(name)) + ".tsv"), fixture_text(fixture));
    log << fmt::format("{:<18} {:016x}\n", fixture_id(name), fixture_checksum(name));
  }
  const auto report = select_sites(reference_scale_evaluations(), o.f1_threshold);
  std::ostringstream table;
  write_selection_report(report, table);
  write_text(out_dir(o) / "fixture_evaluations.tsv", table.str());
  log << "wrote " << (out_dir(o) / "fixture_evaluations.tsv").string() << " (1321 sites)\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Linear hallucination probes: train, select, ensemble, evaluate."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--pipeline-config", "", "INI/TOML file with default flag values");
  app.add_option("--out", o.out, "Output directory for all artifacts")->envname(kOutEnv);
  app.add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Seed override for synthetic generation");
  app.add_option("--train", o.train, "Training trace file");
  app.add_option("--select", o.select, "Selection / tuning trace file");
  app.add_option("--eval", o.eval, "Evaluation trace file");
  app.add_option("--lambda", o.lambda, "L2 regularization")->check(CLI::NonNegativeNumber);
  app.add_option("--pca-cumvar", o.pca_cumvar, "PCA cumulative variance target")->check(CLI::Range(1e-9, 1.0));
  app.add_option("--f1-threshold", o.f1_threshold, "Keep sites with F1 strictly above this");
  auto* decision = app.add_option("--decision-threshold", o.decision_threshold, "Accept when ensemble mean exceeds this")
                       ->check(CLI::Range(0.0, 1.0));
  app.add_option("--sweep-grid", o.sweep_grid, "Decision threshold grid lo:hi:step");

  auto* gen = app.add_subcommand("gen", "Generate synthetic train/select/eval trace files");
  gen->add_option("--spec", o.spec_file, "Synthetic spec (key = value)");
  auto* train = app.add_subcommand("train", "Train one probe per site");
  auto* select = app.add_subcommand("select", "Evaluate probes and select sites by F1");
  select->add_option("--evaluations", o.evaluations, "Use a site-evaluation table instead of probes");
  select->add_flag("--fixture", o.fixture, "Use the published 1321-site F1 fixture");
  auto* ensemble = app.add_subcommand("ensemble", "Build the ensemble and filter the eval split");
  ensemble->add_option("--answers", o.answers, "sample_id<TAB>answer file; writes final answers");
  auto* eval = app.add_subcommand("eval", "Score the filtered eval split");
  eval->add_option("--logprob-threshold", o.logprob_thresholds, "Also report the logprob baseline at these thresholds");
  eval->add_option("--outcomes", o.outcomes, "Score a sample_id<TAB>grade file instead");
  auto* sweep = app.add_subcommand("sweep", "Sweep the decision threshold on the select split");
  auto* ablate = app.add_subcommand("ablate", "F1-threshold ablation");
  ablate->add_option("--evaluations", o.evaluations, "Use a site-evaluation table instead of probes");
  ablate->add_flag("--fixture", o.fixture, "Use the published 1321-site F1 fixture");
  ablate->add_option("--f1-grid", o.f1_grid, "F1 threshold grid lo:hi:step");
  auto* fixtures = app.add_subcommand("fixtures", "Write the published reference tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) cmd_gen(o, out);
    else if (train->parsed()) cmd_train(o, out);
    else if (select->parsed()) cmd_select(o, out);
    else if (ensemble->parsed()) cmd_ensemble(o, out);
    else if (eval->parsed()) cmd_eval(o, decision->count() > 0, out);
    else if (sweep->parsed()) cmd_sweep(o, out);
    else if (ablate->parsed()) cmd_ablate(o, out);
    else if (fixtures->parsed()) cmd_fixtures(o, out);
  } catch (const Error& e) {
    err << "error: " << error_name(e.code()) << ": " << e.message() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: IoFailure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace halluprobe::cli
