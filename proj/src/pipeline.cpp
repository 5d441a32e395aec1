#include "comment_mme/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>

#include "comment_mme/focal_loss.hpp"
#include "comment_mme/report.hpp"

namespace comment_mme::pipeline {

namespace {

using json = nlohmann::json;
using corpus::Language;
using corpus::Split;

// Runs one stage; foreign exceptions are tagged with the stage they escaped from.
template <typename Fn>
auto stage(Stage tag, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(tag, e.what());
  }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() ? base / path : path;
}

provider::TrainConfig parse_train_config(const json& j, std::uint64_t default_seed) {
  check_keys(j,
             {"gamma", "pos_weight", "epochs", "batch_size", "learning_rate", "weight_decay", "adam_epsilon",
              "warmup_fraction", "patience", "seed", "feature_bits", "min_count"},
             "builtin_baseline");
  provider::TrainConfig c;
  c.gamma = get_or(j, "gamma", c.gamma);
  c.pos_weight = get_or(j, "pos_weight", c.pos_weight);
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
  c.adam_epsilon = get_or(j, "adam_epsilon", c.adam_epsilon);
  c.warmup_fraction = get_or(j, "warmup_fraction", c.warmup_fraction);
  c.patience = get_or(j, "patience", c.patience);
  c.seed = get_or<std::uint64_t>(j, "seed", default_seed);
  c.feature_bits = get_or(j, "feature_bits", c.feature_bits);
  c.min_count = get_or(j, "min_count", c.min_count);
  c.validate();
  return c;
}

ProviderSpec parse_provider(const json& j, const std::filesystem::path& base, std::uint64_t default_seed) {
  if (j.is_string()) {
    auto path = resolve(base, j.get<std::string>());
    if (!std::filesystem::exists(path)) throw provider::SchemaError("provider manifest not found: " + path.string());
    return ProviderSpec{provider::load_manifest(path), std::nullopt};
  }
  check_keys(j, {"name", "cost_gflops_per_sample", "logits", "builtin_baseline"}, "provider entry");
  ProviderSpec spec;
  spec.descriptor.name = get_or<std::string>(j, "name", "");
  spec.descriptor.cost_gflops_per_sample = get_or(j, "cost_gflops_per_sample", 0.0);
  const bool has_logits = j.contains("logits");
  const bool has_baseline = j.contains("builtin_baseline");
  if (has_logits == has_baseline)
    throw ConfigError("provider " + spec.descriptor.name + " needs exactly one of 'logits' or 'builtin_baseline'");
  if (has_logits) {
    spec.descriptor.source = provider::Source::logit_file;
    spec.descriptor.logits = resolve(base, get_or<std::string>(j, "logits", ""));
  } else {
    spec.descriptor.source = provider::Source::builtin_baseline;
    spec.baseline = parse_train_config(j["builtin_baseline"], default_seed);
  }
  spec.descriptor.validate();
  return spec;
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv(kSeedEnvVar);
  if (!v || !*v) return std::nullopt;
  std::uint64_t seed = 0;
  std::string_view s(v);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(std::string(kSeedEnvVar) + " must be a nonnegative integer");
  return seed;
}

struct LanguageData {
  std::vector<const corpus::SentenceRecord*> valid;
  std::vector<const corpus::SentenceRecord*> test;
  std::vector<std::string> valid_ids;
  std::vector<std::string> test_ids;
};

std::vector<std::string> ids_of(const std::vector<const corpus::SentenceRecord*>& records) {
  std::vector<std::string> ids;
  for (const auto* r : records) ids.push_back(r->id);
  return ids;
}

// Per-record scorer used for the runtime measurement: preprocess, provider
// scores, mixture, thresholds.
class Classifier {
 public:
  Classifier(const RunConfig& config, std::map<std::string, std::map<Language, provider::BaselineModel>> models,
             std::map<std::string, std::map<Language, provider::LogitMatrix>> file_logits,
             const ensemble::EnsembleWeights& weights, const thresholds::ThresholdTable& table)
      : config_(config), models_(std::move(models)), file_logits_(std::move(file_logits)), weights_(weights),
        table_(table) {}

  void classify(std::span<const corpus::SentenceRecord* const> records) const {
    std::size_t positives = 0;
    for (const auto* r : records) {
      auto prepped = textprep::preprocess(*r, prep_for(r->language));
      const auto tax = corpus::taxonomy(r->language);
      std::vector<double> p(tax.size(), 0.0);
      std::optional<provider::SparseFeatures> features;
      for (std::size_t m = 0; m < config_.providers.size(); ++m) {
        const auto& name = config_.providers[m].descriptor.name;
        std::vector<double> z(tax.size());
        if (auto it = models_.find(name); it != models_.end()) {
          const auto& model = it->second.at(r->language);
          if (!features) features = provider::featurize(prepped.text, model.feature_bits);
          for (std::size_t c = 0; c < tax.size(); ++c) z[c] = model.logit(c, *features);
        } else {
          const auto& logits = file_logits_.at(name).at(r->language);
          auto row = logits.values.row(*logits.row_of(r->id));
          std::copy(row.begin(), row.end(), z.begin());
        }
        for (std::size_t c = 0; c < tax.size(); ++c)
          p[c] += weights_.weights(r->language, c)[m] * provider::sigmoid(z[c]);
      }
      for (std::size_t c = 0; c < tax.size(); ++c) positives += p[c] >= table_.find(r->language, tax[c])->t;
    }
    sink_ = positives;
  }

 private:
  textprep::PrepConfig prep_for(Language language) const {
    for (const auto& p : config_.prep)
      if (p.language == language) return textprep::PrepConfig{language, p.enable_case_split, p.enable_caret_fix, false};
    return textprep::PrepConfig::defaults(language);
  }

  const RunConfig& config_;
  std::map<std::string, std::map<Language, provider::BaselineModel>> models_;
  std::map<std::string, std::map<Language, provider::LogitMatrix>> file_logits_;
  const ensemble::EnsembleWeights& weights_;
  const thresholds::ThresholdTable& table_;
  mutable std::size_t sink_ = 0;
};

}  // namespace

RunConfig parse_run_config(const json& config, const std::filesystem::path& base_dir, const json& overrides) {
  json effective = config;
  if (!effective.is_object()) throw ConfigError("run configuration must be a JSON object");
  effective.merge_patch(overrides);
  if (auto seed = env_seed()) effective["seed"] = *seed;

  check_keys(effective,
             {"seed", "dataset", "output_dir", "providers", "prep", "ensemble", "thresholds", "score",
              "runtime_repetitions"},
             "run configuration");

  RunConfig c;
  c.seed = get_or<std::uint64_t>(effective, "seed", 0);
  if (!effective.contains("dataset")) throw ConfigError("run configuration lacks 'dataset'");
  c.dataset = resolve(base_dir, get_or<std::string>(effective, "dataset", ""));
  c.output_dir = resolve(base_dir, get_or<std::string>(effective, "output_dir", "out"));
  c.runtime_repetitions = get_or(effective, "runtime_repetitions", 3);
  if (c.runtime_repetitions < 3) throw ConfigError("runtime_repetitions must be at least 3");

  if (!effective.contains("providers") || !effective["providers"].is_array() || effective["providers"].empty())
    throw ConfigError("run configuration needs a non-empty 'providers' list");
  std::set<std::string> names;
  std::uint64_t index = 0;
  for (const auto& p : effective["providers"]) {
    auto spec = parse_provider(p, base_dir, c.seed + (++index));
    if (!names.insert(spec.descriptor.name).second)
      throw ConfigError("provider name '" + spec.descriptor.name + "' used twice");
    c.providers.push_back(std::move(spec));
  }

  if (effective.contains("prep")) {
    const auto& prep = effective["prep"];
    check_keys(prep, {"java", "python", "pharo"}, "prep");
    for (const auto& [lang_name, toggles] : prep.items()) {
      check_keys(toggles, {"case_split", "caret_fix", "segmentation"}, "prep." + lang_name);
      auto lang = *corpus::parse_language(lang_name);
      textprep::PrepConfig pc = textprep::PrepConfig::defaults(lang);
      pc.enable_case_split = get_or(toggles, "case_split", pc.enable_case_split);
      pc.enable_caret_fix = get_or(toggles, "caret_fix", pc.enable_caret_fix);
      pc.enable_segmentation = get_or(toggles, "segmentation", pc.enable_segmentation);
      pc.validate();
      c.prep.push_back(pc);
    }
  }

  c.ensemble.seed = c.seed;
  if (effective.contains("ensemble")) {
    const auto& e = effective["ensemble"];
    check_keys(e, {"method", "seed", "resolution", "gamma", "steps", "learning_rate"}, "ensemble");
    c.ensemble.method = ensemble::parse_fit_method(get_or<std::string>(e, "method", "simplex_grid"));
    c.ensemble.seed = get_or<std::uint64_t>(e, "seed", c.seed);
    c.ensemble.resolution = get_or(e, "resolution", c.ensemble.resolution);
    c.ensemble.gamma = get_or(e, "gamma", c.ensemble.gamma);
    c.ensemble.steps = get_or(e, "steps", c.ensemble.steps);
    c.ensemble.learning_rate = get_or(e, "learning_rate", c.ensemble.learning_rate);
  }

  if (effective.contains("thresholds")) {
    const auto& t = effective["thresholds"];
    check_keys(t, {"grid"}, "thresholds");
    c.grid = thresholds::Grid::parse(get_or<std::string>(t, "grid", "0.10:0.90:0.02"));
  }

  if (effective.contains("score")) {
    const auto& s = effective["score"];
    check_keys(s, {"t_max", "g_max", "t_model_ms"}, "score");
    c.t_max = get_or(s, "t_max", c.t_max);
    c.g_max = get_or(s, "g_max", c.g_max);
    if (s.contains("t_model_ms")) c.t_model_ms = get_or(s, "t_model_ms", 0.0);
  }
  if (!(c.t_max > 0) || !(c.g_max > 0)) throw ConfigError("score.t_max and score.g_max must be positive");

  c.config_hash = hex64(fnv1a64(effective.dump()));
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const json& overrides) {
  json j;
  try {
    j = json::parse(read_text_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(j, path.parent_path(), overrides);
}

const std::vector<std::string>& artifact_names() {
  static const std::vector<std::string> names = {"weights.json", "thresholds.json", "report.csv",
                                                 "heatmap.csv",  "heatmap.svg",     "contribution.csv"};
  return names;
}

std::map<Language, provider::LogitMatrix> baseline_logits(const corpus::Dataset& dataset,
                                                          const provider::TrainConfig& config,
                                                          const std::string& name) {
  std::map<Language, provider::LogitMatrix> out;
  for (auto lang : dataset.languages()) {
    auto trained = provider::train_baseline(dataset, lang, config);
    std::vector<const corpus::SentenceRecord*> all;
    for (auto split : {Split::train, Split::valid, Split::test}) {
      auto part = dataset.select(lang, split);
      all.insert(all.end(), part.begin(), part.end());
    }
    out.emplace(lang, provider::predict_logits(trained.model, all, name));
  }
  return out;
}

void write_logits_file(const std::filesystem::path& path, const std::map<Language, provider::LogitMatrix>& logits,
                       const ArtifactHeader& header) {
  std::ostringstream out;
  out << header.render("//");
  for (const auto& [lang, m] : logits) provider::write_logits(out, m);
  write_text_file(path, out.str());
}

std::vector<metrics::CategoryRow> evaluate_language(const BinaryMatrix& predictions, const corpus::LabelMatrix& labels) {
  if (predictions.rows() != labels.values.rows() || predictions.cols() != labels.values.cols())
    throw metrics::LengthMismatch("prediction and label matrices differ in shape");
  const auto tax = corpus::taxonomy(labels.language);
  std::vector<metrics::CategoryRow> rows;
  for (std::size_t c = 0; c < tax.size(); ++c) {
    auto pred = predictions.column(c);
    auto gold = labels.values.column(c);
    rows.push_back({labels.language, std::string(tax[c]), metrics::category_outcome(pred, gold)});
  }
  return rows;
}

RunResult run_pipeline(const RunConfig& config) {
  RunResult result;
  const ArtifactHeader header = config.header();

  // data
  const corpus::Dataset raw = stage(Stage::data, [&] { return corpus::load_dataset(config.dataset); });
  const corpus::Dataset dataset = stage(Stage::data, [&] { return textprep::preprocess_dataset(raw, config.prep); });
  const auto languages = dataset.languages();
  if (languages.empty()) throw DataError("dataset " + config.dataset.string() + " has no records");

  const bool needs_train = std::any_of(config.providers.begin(), config.providers.end(),
                                       [](const auto& p) { return p.baseline.has_value(); });
  std::map<Language, LanguageData> data;
  stage(Stage::data, [&] {
    for (auto lang : languages) {
      if (needs_train) dataset.require(lang, Split::train);
      auto& d = data[lang];
      d.valid = dataset.require(lang, Split::valid);
      d.test = dataset.require(lang, Split::test);
      d.valid_ids = ids_of(d.valid);
      d.test_ids = ids_of(d.test);
    }
    return 0;
  });

  // provider
  std::map<std::string, std::map<Language, provider::BaselineModel>> models;
  std::map<std::string, std::map<Language, provider::LogitMatrix>> file_logits;
  std::map<Language, std::vector<provider::LogitMatrix>> valid_logits, test_logits;
  for (const auto& spec : config.providers) {
    const auto& name = spec.descriptor.name;
    std::map<Language, provider::LogitMatrix> all;
    if (spec.baseline) {
      stage(Stage::fitting, [&] {
        for (auto lang : languages) {
          auto trained = provider::train_baseline(dataset, lang, *spec.baseline);
          std::vector<const corpus::SentenceRecord*> records = data[lang].valid;
          records.insert(records.end(), data[lang].test.begin(), data[lang].test.end());
          all.emplace(lang, provider::predict_logits(trained.model, records, name));
          models[name].emplace(lang, std::move(trained.model));
        }
        return 0;
      });
    } else {
      all = stage(Stage::provider, [&] {
        if (!std::filesystem::exists(spec.descriptor.logits))
          throw ProviderError("logits file for provider " + name + " not found: " + spec.descriptor.logits.string());
        return provider::load_logits_any(spec.descriptor.logits, name);
      });
      file_logits[name] = all;
    }
    stage(Stage::provider, [&] {
      for (auto lang : languages) {
        auto it = all.find(lang);
        if (it == all.end())
          throw ProviderError("provider " + name + " has no " + std::string(corpus::to_string(lang)) + " logits");
        valid_logits[lang].push_back(it->second.select(data[lang].valid_ids));
        test_logits[lang].push_back(it->second.select(data[lang].test_ids));
      }
      return 0;
    });
  }

  // fitting
  result.weights.providers.clear();
  result.thresholds.grid = config.grid;
  stage(Stage::fitting, [&] {
    for (auto lang : languages) {
      auto labels = corpus::label_matrix(data[lang].valid, lang);
      auto fit = ensemble::fit_weights(valid_logits[lang], labels, config.ensemble);
      result.weights.merge(fit.weights);
      result.warnings.insert(result.warnings.end(), fit.warnings.begin(), fit.warnings.end());

      auto probs = ensemble::combine(valid_logits[lang], fit.weights);
      auto table = thresholds::tune_thresholds(probs, labels, config.grid);
      for (const auto& [key, e] : table.entries)
        if (e.fallback) result.warnings.push_back("NoPositiveExamples(" + key + "): threshold 0.5");
      result.thresholds.merge(table);
    }
    return 0;
  });

  // evaluation
  std::vector<const corpus::SentenceRecord*> test_records;
  stage(Stage::data, [&] {
    for (auto lang : languages) {
      auto probs = ensemble::combine(test_logits[lang], result.weights);
      auto preds = thresholds::apply_thresholds(probs, result.thresholds);
      auto rows = evaluate_language(preds, corpus::label_matrix(data[lang].test, lang));
      result.report.rows.insert(result.report.rows.end(), rows.begin(), rows.end());
      for (const auto* r : data[lang].test) test_records.push_back(raw.find(r->id));
    }
    result.report.aggregate();
    return 0;
  });

  std::vector<provider::ProviderDescriptor> descriptors;
  for (const auto& p : config.providers) descriptors.push_back(p.descriptor);
  result.report.total_gflops = metrics::total_gflops(descriptors, test_records.size());

  if (config.t_model_ms) {
    result.report.runtime_ms_per_sample = *config.t_model_ms;
  } else {
    // Segmented Pharo records have no raw counterpart; time the rest.
    std::erase(test_records, nullptr);
    Classifier classifier(config, models, file_logits, result.weights, result.thresholds);
    result.report.runtime_ms_per_sample = metrics::measure_runtime(
        [&](auto records) { classifier.classify(records); }, test_records, config.runtime_repetitions);
  }
  result.report.score = metrics::submission_score(
      {result.report.macro_f1, result.report.runtime_ms_per_sample, config.t_max, result.report.total_gflops, config.g_max});

  // artifacts
  stage(Stage::data, [&] {
    const auto& dir = config.output_dir;
    std::filesystem::create_directories(dir);
    auto emit = [&](const std::string& name, const std::string& content) {
      write_text_file(dir / name, content);
      result.artifacts.push_back(dir / name);
    };
    emit("weights.json", header.render("//") + ensemble::weights_json(result.weights));
    emit("thresholds.json", header.render("//") + thresholds::thresholds_json(result.thresholds));
    emit("report.csv", header.render("#") + metrics::report_csv(result.report));
    emit("heatmap.csv", report::heatmap_csv(result.weights, header));
    emit("heatmap.svg", report::heatmap_svg(result.weights, header));
    emit("contribution.csv", report::contribution_csv(result.weights, header));
    return 0;
  });
  return result;
}

}  // namespace comment_mme::pipeline
