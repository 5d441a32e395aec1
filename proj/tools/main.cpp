#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "comment_mme/baseline.hpp"
#include "comment_mme/corpus.hpp"
#include "comment_mme/ensemble.hpp"
#include "comment_mme/golden.hpp"
#include "comment_mme/metrics.hpp"
#include "comment_mme/pipeline.hpp"
#include "comment_mme/provider.hpp"
#include "comment_mme/report.hpp"
#include "comment_mme/synthetic.hpp"
#include "comment_mme/textprep.hpp"
#include "comment_mme/thresholds.hpp"
#include "comment_mme/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace comment_mme;
using corpus::Language;
using nlohmann::json;

namespace {

// Standalone subcommands stamp their outputs with the seed and a digest of
// the command line.
ArtifactHeader header_for(std::uint64_t seed, const std::vector<std::string>& args) {
  std::string joined;
  for (const auto& a : args) joined += a + '\x1f';
  return {seed, hex64(fnv1a64(joined))};
}

std::string stamp(const ArtifactHeader& header, std::string_view leader, const std::string& body) {
  return header.render(leader) + body;
}

corpus::Split parse_split_or_throw(const std::string& name) {
  auto s = corpus::parse_split(name);
  if (!s) throw ConfigError("unknown split '" + name + "'");
  return *s;
}

// Labels for the rows of `probs` whose records fall in `split`.
struct Aligned {
  ensemble::ProbabilityMatrix probs;
  corpus::LabelMatrix labels;
};

Aligned align(const ensemble::ProbabilityMatrix& probs, const corpus::Dataset& data, corpus::Split split) {
  Aligned out;
  out.probs.language = probs.language;
  std::vector<const corpus::SentenceRecord*> records;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < probs.ids.size(); ++i) {
    const auto* r = data.find(probs.ids[i]);
    if (!r) throw DataError("probabilities mention id '" + probs.ids[i] + "' absent from the labels file");
    if (r->split != split) continue;
    records.push_back(r);
    rows.push_back(i);
  }
  if (records.empty()) throw corpus::EmptySelection(probs.language, split);
  out.labels = corpus::label_matrix(records, probs.language);
  out.probs.ids = out.labels.ids;
  out.probs.values = RealMatrix(rows.size(), probs.values.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t c = 0; c < probs.values.cols(); ++c) out.probs.values(k, c) = probs.values(rows[k], c);
  return out;
}

std::map<Language, ensemble::ProbabilityMatrix> load_probs(const fs::path& path) {
  return ensemble::parse_probabilities_jsonl(read_text_file(path));
}

void print_counts(const corpus::Dataset& data) {
  for (auto lang : data.languages()) {
    std::cout << corpus::to_string(lang);
    for (auto split : {corpus::Split::train, corpus::Split::valid, corpus::Split::test})
      std::cout << ' ' << corpus::to_string(split) << '=' << data.select(lang, split).size();
    std::cout << '\n';
  }
}

// "a.b=value" -> {"a": {"b": value}}; value is JSON when it parses, else a string.
json override_patch(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  json value;
  const std::string raw = assignment.substr(eq + 1);
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  std::vector<std::string> path;
  std::stringstream keys(assignment.substr(0, eq));
  for (std::string k; std::getline(keys, k, '.');) path.push_back(k);
  json patch = value;
  for (auto it = path.rbegin(); it != path.rend(); ++it) patch = json{{*it, patch}};
  return patch;
}

struct CliState {
  std::vector<std::string> args;

  // ingest
  fs::path ingest_in, ingest_out;

  // preprocess
  fs::path prep_in, prep_out, golden_dir;
  bool segment = false;
  bool no_case_split = false;
  bool no_caret_fix = false;

  // train-baseline
  fs::path tb_data, tb_out, tb_manifest;
  std::string tb_name = "baseline";
  double tb_cost = 0.0;
  provider::TrainConfig tb_config;

  // fit-ensemble
  fs::path fe_data, fe_out, fe_probs_out;
  std::vector<fs::path> fe_providers;
  std::string fe_method = "simplex_grid";
  double fe_resolution = 0.05;
  std::uint64_t fe_seed = 0;

  // tune-thresholds
  fs::path tt_probs, tt_labels, tt_out;
  std::string tt_grid = "0.10:0.90:0.02";
  std::string tt_split = "valid";

  // evaluate
  fs::path ev_probs, ev_labels, ev_thresholds, ev_out;
  std::string ev_split = "test";
  double ev_runtime = 0.0, ev_gflops = 0.0;
  double ev_t_max = 45.13, ev_g_max = 235759.28;

  // score
  std::optional<double> sc_f1, sc_t_model, sc_g_model;
  fs::path sc_report;
  double sc_t_max = 45.13, sc_g_max = 235759.28;

  // report
  fs::path rp_weights, rp_out_dir;

  // run
  fs::path run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_dataset, run_output, run_method, run_grid;
  std::optional<double> run_t_max, run_g_max, run_t_model;
  std::vector<std::string> run_sets;

  // synth
  fs::path synth_out;
  std::uint64_t synth_seed = 1;
};

int cmd_ingest(const CliState& s) {
  auto data = corpus::load_dataset(s.ingest_in);
  print_counts(data);
  if (!s.ingest_out.empty()) {
    std::ostringstream out;
    corpus::write_dataset(out, data);
    write_text_file(s.ingest_out, out.str());
  }
  return 0;
}

int cmd_preprocess(const CliState& s) {
  int status = 0;
  if (!s.golden_dir.empty()) {
    auto results = textprep::check_golden(textprep::load_golden(s.golden_dir));
    std::size_t failed = 0;
    for (const auto& r : results) {
      if (r.matches && r.idempotent) continue;
      ++failed;
      std::cout << "FAIL " << r.name << (r.matches ? " (not idempotent)" : "") << ": " << r.actual << '\n';
    }
    std::cout << "golden: " << results.size() - failed << "/" << results.size() << " passed\n";
    if (failed) status = static_cast<int>(Stage::data);
  }
  if (!s.prep_in.empty()) {
    if (s.prep_out.empty()) throw ConfigError("preprocess --in needs --out");
    std::vector<textprep::PrepConfig> configs;
    for (auto lang : corpus::kLanguages) {
      auto c = textprep::PrepConfig::defaults(lang);
      c.enable_case_split = !s.no_case_split;
      c.enable_caret_fix = !s.no_caret_fix;
      c.enable_segmentation = s.segment && lang == Language::pharo;
      configs.push_back(c);
    }
    auto data = textprep::preprocess_dataset(corpus::load_dataset(s.prep_in), configs);
    std::ostringstream out;
    corpus::write_dataset(out, data);
    write_text_file(s.prep_out, out.str());
  } else if (s.golden_dir.empty()) {
    throw ConfigError("preprocess needs --in/--out or --golden-dir");
  }
  return status;
}

int cmd_train_baseline(const CliState& s) {
  s.tb_config.validate();
  auto data = corpus::load_dataset(s.tb_data);
  auto logits = pipeline::baseline_logits(data, s.tb_config, s.tb_name);
  pipeline::write_logits_file(s.tb_out, logits, header_for(s.tb_config.seed, s.args));
  if (!s.tb_manifest.empty()) {
    provider::ProviderDescriptor d;
    d.name = s.tb_name;
    d.cost_gflops_per_sample = s.tb_cost;
    d.logits = fs::relative(fs::absolute(s.tb_out), fs::absolute(s.tb_manifest).parent_path());
    write_text_file(s.tb_manifest, provider::manifest_json(d));
  }
  return 0;
}

int cmd_fit_ensemble(const CliState& s) {
  auto data = corpus::load_dataset(s.fe_data);
  std::vector<std::map<Language, provider::LogitMatrix>> all;
  for (const auto& manifest : s.fe_providers) {
    auto d = provider::load_manifest(manifest);
    all.push_back(provider::load_logits_any(d.logits, d.name));
  }
  ensemble::FitOptions options;
  options.method = ensemble::parse_fit_method(s.fe_method);
  options.resolution = s.fe_resolution;
  options.seed = s.fe_seed;

  ensemble::EnsembleWeights weights;
  std::string probs_out;
  for (auto lang : data.languages()) {
    auto valid = data.require(lang, corpus::Split::valid);
    std::vector<std::string> ids;
    for (const auto* r : valid) ids.push_back(r->id);
    std::vector<provider::LogitMatrix> valid_logits, full;
    for (std::size_t p = 0; p < all.size(); ++p) {
      auto it = all[p].find(lang);
      if (it == all[p].end())
        throw ProviderError(s.fe_providers[p].string() + " has no " + std::string(corpus::to_string(lang)) + " logits");
      valid_logits.push_back(it->second.select(ids));
      full.push_back(it->second);
    }
    auto fit = ensemble::fit_weights(valid_logits, corpus::label_matrix(valid, lang), options);
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
    weights.merge(fit.weights);
    if (!s.fe_probs_out.empty()) probs_out += ensemble::probabilities_jsonl(ensemble::combine(full, fit.weights));
  }
  const auto header = header_for(s.fe_seed, s.args);
  write_text_file(s.fe_out, stamp(header, "//", ensemble::weights_json(weights)));
  if (!s.fe_probs_out.empty()) write_text_file(s.fe_probs_out, stamp(header, "//", probs_out));
  return 0;
}

int cmd_tune_thresholds(const CliState& s) {
  auto grid = thresholds::Grid::parse(s.tt_grid);
  auto data = corpus::load_dataset(s.tt_labels);
  const auto split = parse_split_or_throw(s.tt_split);
  thresholds::ThresholdTable table;
  table.grid = grid;
  for (const auto& [lang, probs] : load_probs(s.tt_probs)) {
    auto a = align(probs, data, split);
    auto t = thresholds::tune_thresholds(a.probs, a.labels, grid);
    for (const auto& [key, e] : t.entries)
      if (e.fallback) std::cerr << "warning: NoPositiveExamples(" << key << "): threshold 0.5\n";
    table.merge(t);
  }
  write_text_file(s.tt_out, stamp(header_for(0, s.args), "//", thresholds::thresholds_json(table)));
  return 0;
}

int cmd_evaluate(const CliState& s) {
  auto data = corpus::load_dataset(s.ev_labels);
  const auto split = parse_split_or_throw(s.ev_split);
  auto table = thresholds::parse_thresholds_json(read_text_file(s.ev_thresholds));
  metrics::EvalReport report;
  for (const auto& [lang, probs] : load_probs(s.ev_probs)) {
    auto a = align(probs, data, split);
    auto rows = pipeline::evaluate_language(thresholds::apply_thresholds(a.probs, table), a.labels);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  report.aggregate();
  report.runtime_ms_per_sample = s.ev_runtime;
  report.total_gflops = s.ev_gflops;
  report.score = metrics::submission_score({report.macro_f1, s.ev_runtime, s.ev_t_max, s.ev_gflops, s.ev_g_max});
  const auto csv = metrics::report_csv(report);
  if (s.ev_out.empty())
    std::cout << csv;
  else
    write_text_file(s.ev_out, stamp(header_for(0, s.args), "#", csv));
  return 0;
}

int cmd_score(const CliState& s) {
  metrics::ScoreInputs in;
  in.t_max = s.sc_t_max;
  in.g_max = s.sc_g_max;
  if (!s.sc_report.empty()) {
    auto report = metrics::parse_report_csv(read_text_file(s.sc_report));
    in.f1_avg = report.macro_f1;
    in.t_model = report.runtime_ms_per_sample;
    in.g_model = report.total_gflops;
  } else if (!s.sc_f1) {
    throw ConfigError("score needs --f1 or --report");
  }
  if (s.sc_f1) in.f1_avg = *s.sc_f1;
  if (s.sc_t_model) in.t_model = *s.sc_t_model;
  if (s.sc_g_model) in.g_model = *s.sc_g_model;
  const double score = metrics::submission_score(in);
  std::cout << "score " << format_fixed(score, 4) << " (" << format_fixed(100.0 * score, 2) << "%)\n";
  return 0;
}

int cmd_report(const CliState& s) {
  const auto text = read_text_file(s.rp_weights);
  auto weights = ensemble::parse_weights_json(text);
  const auto header = ArtifactHeader::parse(text).value_or(header_for(0, s.args));
  write_text_file(s.rp_out_dir / "heatmap.svg", report::heatmap_svg(weights, header));
  write_text_file(s.rp_out_dir / "heatmap.csv", report::heatmap_csv(weights, header));
  write_text_file(s.rp_out_dir / "contribution.csv", report::contribution_csv(weights, header));
  return 0;
}

int cmd_run(const CliState& s) {
  json overrides = json::object();
  if (s.run_seed) overrides["seed"] = *s.run_seed;
  if (s.run_dataset) overrides["dataset"] = fs::absolute(*s.run_dataset).string();
  if (s.run_output) overrides["output_dir"] = fs::absolute(*s.run_output).string();
  if (s.run_method) overrides["ensemble"]["method"] = *s.run_method;
  if (s.run_grid) overrides["thresholds"]["grid"] = *s.run_grid;
  if (s.run_t_max) overrides["score"]["t_max"] = *s.run_t_max;
  if (s.run_g_max) overrides["score"]["g_max"] = *s.run_g_max;
  if (s.run_t_model) overrides["score"]["t_model_ms"] = *s.run_t_model;
  for (const auto& a : s.run_sets) overrides.merge_patch(override_patch(a));

  auto config = pipeline::load_run_config(s.run_config, overrides);
  auto result = pipeline::run_pipeline(config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  const auto& r = result.report;
  std::cout << "macro_f1 " << format_fixed(r.macro_f1, 4) << "\n"
            << "weighted_f1 " << format_fixed(r.weighted_f1, 4) << "\n";
  for (const auto& [lang, m] : r.language_macro)
    std::cout << "macro_f1_" << corpus::to_string(lang) << ' ' << format_fixed(m, 4) << '\n';
  std::cout << "runtime_ms_per_sample " << format_fixed(r.runtime_ms_per_sample, 4) << "\n"
            << "total_gflops " << format_fixed(r.total_gflops, 2) << "\n"
            << "score " << format_fixed(r.score, 4) << "\n";
  for (const auto& p : result.artifacts) std::cout << "wrote " << p.string() << '\n';
  return 0;
}

int cmd_synth(const CliState& s) {
  synthetic::CorpusSpec spec;
  spec.seed = s.synth_seed;
  auto data = synthetic::make_corpus(spec);
  std::ostringstream out;
  corpus::write_dataset(out, data);
  write_text_file(s.synth_out, out.str());
  print_counts(data);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CliState s;
  for (int i = 1; i < argc; ++i) s.args.emplace_back(argv[i]);

  CLI::App app{"Multi-label code comment classification: ensemble, thresholds, evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Validate a dataset JSONL and print record counts");
  ingest->add_option("--in", s.ingest_in, "Dataset JSONL")->required();
  ingest->add_option("--out", s.ingest_out, "Write the validated dataset here");

  auto* prep = app.add_subcommand("preprocess", "Mask, fix carets, split identifiers, segment Pharo comments");
  prep->add_option("--in", s.prep_in, "Dataset JSONL");
  prep->add_option("--out", s.prep_out, "Preprocessed dataset JSONL");
  prep->add_option("--golden-dir", s.golden_dir, "Check raw/expected fixture pairs in this directory");
  prep->add_flag("--segment", s.segment, "Split structured Pharo comments into sentences");
  prep->add_flag("--no-case-split", s.no_case_split, "Keep camelCase identifiers whole");
  prep->add_flag("--no-caret-fix", s.no_caret_fix, "Leave '^' characters untouched");

  auto* tb = app.add_subcommand("train-baseline", "Train the hashed n-gram baseline and write its logits");
  tb->add_option("--data", s.tb_data, "Preprocessed dataset JSONL")->required();
  tb->add_option("--out", s.tb_out, "Logits JSONL")->required();
  tb->add_option("--name", s.tb_name, "Provider name");
  tb->add_option("--manifest", s.tb_manifest, "Also write a provider manifest");
  tb->add_option("--cost", s.tb_cost, "Declared GFLOPs per sample for the manifest");
  tb->add_option("--seed", s.tb_config.seed);
  tb->add_option("--epochs", s.tb_config.epochs);
  tb->add_option("--batch-size", s.tb_config.batch_size);
  tb->add_option("--learning-rate", s.tb_config.learning_rate);
  tb->add_option("--weight-decay", s.tb_config.weight_decay);
  tb->add_option("--gamma", s.tb_config.gamma);
  tb->add_option("--patience", s.tb_config.patience);
  tb->add_option("--feature-bits", s.tb_config.feature_bits);
  tb->add_option("--min-count", s.tb_config.min_count);

  auto* fe = app.add_subcommand("fit-ensemble", "Fit per-category mixing weights on the validation split");
  fe->add_option("--data", s.fe_data, "Dataset JSONL with labels and splits")->required();
  fe->add_option("--provider", s.fe_providers, "Provider manifest JSON (repeatable)")->required();
  fe->add_option("--out", s.fe_out, "Weights JSON")->required();
  fe->add_option("--probs-out", s.fe_probs_out, "Write ensemble probabilities for every scored record");
  fe->add_option("--method", s.fe_method, "simplex_grid or gradient");
  fe->add_option("--resolution", s.fe_resolution, "Simplex grid step");
  fe->add_option("--seed", s.fe_seed);

  auto* tt = app.add_subcommand("tune-thresholds", "Pick the F1-maximising threshold per category");
  tt->add_option("--probs", s.tt_probs, "Probabilities JSONL")->required();
  tt->add_option("--labels", s.tt_labels, "Dataset JSONL")->required();
  tt->add_option("--out", s.tt_out, "Thresholds JSON")->required();
  tt->add_option("--grid", s.tt_grid, "start:end:step");
  tt->add_option("--split", s.tt_split, "Split to tune on");

  auto* ev = app.add_subcommand("evaluate", "Apply thresholds and report per-category metrics");
  ev->add_option("--probs", s.ev_probs, "Probabilities JSONL")->required();
  ev->add_option("--labels", s.ev_labels, "Dataset JSONL")->required();
  ev->add_option("--thresholds", s.ev_thresholds, "Thresholds JSON")->required();
  ev->add_option("--out", s.ev_out, "Report CSV (stdout when omitted)");
  ev->add_option("--split", s.ev_split, "Split to evaluate");
  ev->add_option("--runtime-ms", s.ev_runtime, "Runtime per sample for the score");
  ev->add_option("--gflops", s.ev_gflops, "Total GFLOPS for the score");
  ev->add_option("--t-max", s.ev_t_max);
  ev->add_option("--g-max", s.ev_g_max);

  auto* sc = app.add_subcommand("score", "Composite submission score");
  sc->add_option("--f1", s.sc_f1, "Macro F1");
  sc->add_option("--report", s.sc_report, "Take F1, runtime and GFLOPS from a report CSV");
  sc->add_option("--t-model", s.sc_t_model, "Runtime, ms per sample");
  sc->add_option("--g-model", s.sc_g_model, "Total GFLOPS");
  sc->add_option("--t-max", s.sc_t_max);
  sc->add_option("--g-max", s.sc_g_max);

  auto* rp = app.add_subcommand("report", "Heatmap and contribution summary from a weights file");
  rp->add_option("--weights", s.rp_weights, "Weights JSON")->required();
  rp->add_option("--out-dir", s.rp_out_dir, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Full pipeline from a run configuration");
  run->add_option("--config", s.run_config, "Run configuration JSON")->required();
  run->add_option("--seed", s.run_seed);
  run->add_option("--dataset", s.run_dataset);
  run->add_option("--output-dir", s.run_output);
  run->add_option("--method", s.run_method);
  run->add_option("--grid", s.run_grid);
  run->add_option("--t-max", s.run_t_max);
  run->add_option("--g-max", s.run_g_max);
  run->add_option("--t-model-ms", s.run_t_model);
  run->add_option("--set", s.run_sets, "Override any config key, e.g. ensemble.resolution=0.1");

  auto* synth = app.add_subcommand("synth", "Write the keyword-planted synthetic corpus");
  synth->add_option("--out", s.synth_out, "Dataset JSONL")->required();
  synth->add_option("--seed", s.synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(Stage::config);
  }

  try {
    if (ingest->parsed()) return cmd_ingest(s);
    if (prep->parsed()) return cmd_preprocess(s);
    if (tb->parsed()) return cmd_train_baseline(s);
    if (fe->parsed()) return cmd_fit_ensemble(s);
    if (tt->parsed()) return cmd_tune_thresholds(s);
    if (ev->parsed()) return cmd_evaluate(s);
    if (sc->parsed()) return cmd_score(s);
    if (rp->parsed()) return cmd_report(s);
    if (run->parsed()) return cmd_run(s);
    if (synth->parsed()) return cmd_synth(s);
  } catch (const Error& e) {
    std::cerr << "error[" << stage_name(e.stage()) << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error[data]: " << e.what() << '\n';
    return static_cast<int>(Stage::data);
  }
  return 0;
}
