#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comment_mme/baseline.hpp"
#include "comment_mme/corpus.hpp"
#include "comment_mme/ensemble.hpp"
#include "comment_mme/metrics.hpp"
#include "comment_mme/provider.hpp"
#include "comment_mme/textprep.hpp"
#include "comment_mme/thresholds.hpp"
#include "comment_mme/util.hpp"
#include "json.hpp"

namespace comment_mme::pipeline {

inline constexpr const char* kSeedEnvVar = "COMMENT_MME_SEED";

struct ProviderSpec {
  provider::ProviderDescriptor descriptor;
  std::optional<provider::TrainConfig> baseline;  // set for builtin_baseline providers
};

struct RunConfig {
  std::filesystem::path dataset;
  std::vector<ProviderSpec> providers;
  std::vector<textprep::PrepConfig> prep;
  ensemble::FitOptions ensemble;
  thresholds::Grid grid;
  double t_max = 45.13;
  double g_max = 235759.28;
  std::optional<double> t_model_ms;  // declared runtime; measured when absent
  int runtime_repetitions = 3;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  // Hex digest of the effective configuration (after overrides).
  std::string config_hash;

  ArtifactHeader header() const { return {seed, config_hash}; }
};

// Builds a RunConfig from JSON. Relative paths resolve against `base_dir`.
// `overrides` is merged over `config` key by key before parsing; the seed
// environment variable wins over both.
RunConfig parse_run_config(const nlohmann::json& config, const std::filesystem::path& base_dir,
                           const nlohmann::json& overrides = nlohmann::json::object());
RunConfig load_run_config(const std::filesystem::path& path, const nlohmann::json& overrides = nlohmann::json::object());

struct RunResult {
  metrics::EvalReport report;
  ensemble::EnsembleWeights weights;
  thresholds::ThresholdTable thresholds;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> artifacts;
};

// Names of the files written by run_pipeline, relative to the output directory.
const std::vector<std::string>& artifact_names();

// preprocess -> provider logits -> fit weights (valid) -> tune thresholds
// (valid) -> evaluate (test) -> score; writes every artifact.
RunResult run_pipeline(const RunConfig& config);

// Per-language logits of every provider, restricted to the given split.
struct ProviderLogits {
  std::map<corpus::Language, std::vector<provider::LogitMatrix>> valid;
  std::map<corpus::Language, std::vector<provider::LogitMatrix>> test;
};

// Trains a baseline on the train split of every language and returns logits
// for all records of that language, rows sorted by id.
std::map<corpus::Language, provider::LogitMatrix> baseline_logits(const corpus::Dataset& dataset,
                                                                  const provider::TrainConfig& config,
                                                                  const std::string& name);

// Writes one logits file covering all languages.
void write_logits_file(const std::filesystem::path& path,
                       const std::map<corpus::Language, provider::LogitMatrix>& logits, const ArtifactHeader& header);

// Evaluation rows for one language.
std::vector<metrics::CategoryRow> evaluate_language(const BinaryMatrix& predictions, const corpus::LabelMatrix& labels);

}  // namespace comment_mme::pipeline
