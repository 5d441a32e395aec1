#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "comment_mme/corpus.hpp"
#include "comment_mme/error.hpp"
#include "comment_mme/matrix.hpp"
#include "comment_mme/provider.hpp"

namespace comment_mme::provider {

// Training recipe for the built-in baseline. Defaults are the encoder recipe
// (focal gamma 2, 20 epochs, batch 16, lr 2e-4, AdamW eps 1e-8, decay 0.01,
// 10% warmup, patience 3).
struct TrainConfig {
  double gamma = 2.0;
  std::vector<double> pos_weight;  // per category; empty = derived from the train split
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 2e-4;
  double weight_decay = 0.01;
  double adam_epsilon = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double warmup_fraction = 0.10;
  int patience = 3;
  std::uint64_t seed = 0;
  int feature_bits = 18;  // hash width 2^feature_bits
  int min_count = 2;      // buckets seen in fewer training sentences stay at zero

  void validate() const;
};

class DivergedLoss : public FitError {
 public:
  explicit DivergedLoss(int epoch) : FitError("training loss became non-finite in epoch " + std::to_string(epoch)) {}
};

class LanguageMismatch : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// Sparse feature vector: (bucket, value) pairs sorted by bucket.
using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;

// Lowercased ASCII alphanumeric word tokens.
std::vector<std::string> tokenize(std::string_view text);

// Signed hashing of word unigrams and bigrams into 2^feature_bits buckets,
// L2-normalised. The sign comes from the top bit of the 64-bit hash.
SparseFeatures featurize(std::string_view text, int feature_bits);

struct BaselineModel {
  corpus::Language language = corpus::Language::java;
  int feature_bits = 18;
  RealMatrix weights;         // [categories x 2^feature_bits]
  std::vector<double> bias;   // [categories]

  static BaselineModel zeros(corpus::Language language, int feature_bits);

  std::size_t feature_dim() const { return std::size_t{1} << feature_bits; }
  double logit(std::size_t category, const SparseFeatures& x) const;

  friend bool operator==(const BaselineModel&, const BaselineModel&) = default;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_macro_f1 = 0.0;
};

struct TrainResult {
  BaselineModel model;  // best snapshot by validation macro-F1
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  int epochs_run = 0;
};

// Per-category positive weight: negatives / positives, clamped to [1, 100].
std::vector<double> default_pos_weights(std::span<const corpus::SentenceRecord* const> train, corpus::Language language);

TrainResult train_baseline(std::span<const corpus::SentenceRecord* const> train,
                           std::span<const corpus::SentenceRecord* const> valid, corpus::Language language,
                           const TrainConfig& config);

TrainResult train_baseline(const corpus::Dataset& dataset, corpus::Language language, const TrainConfig& config);

// Logits for `records`, rows sorted ascending by id.
LogitMatrix predict_logits(const BaselineModel& model, std::span<const corpus::SentenceRecord* const> records,
                           const std::string& provider_name = "baseline");

}  // namespace comment_mme::provider
