#include "comment_mme/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "comment_mme/focal_loss.hpp"
#include "comment_mme/metrics.hpp"
#include "comment_mme/util.hpp"

namespace comment_mme::provider {

namespace {

struct Example {
  SparseFeatures x;
  std::vector<unsigned char> y;
};

std::vector<Example> encode(std::span<const corpus::SentenceRecord* const> records, corpus::Language language,
                            int feature_bits) {
  auto labels = corpus::label_matrix(records, language);
  std::vector<Example> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out[i].x = featurize(records[i]->text, feature_bits);
    auto row = labels.values.row(i);
    out[i].y.assign(row.begin(), row.end());
  }
  return out;
}

double macro_f1_at_half(const BaselineModel& model, const std::vector<Example>& examples) {
  const std::size_t categories = model.bias.size();
  std::vector<metrics::CategoryOutcome> outcomes;
  for (std::size_t c = 0; c < categories; ++c) {
    std::vector<unsigned char> pred(examples.size()), gold(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      pred[i] = sigmoid(model.logit(c, examples[i].x)) >= 0.5 ? 1 : 0;
      gold[i] = examples[i].y[c];
    }
    outcomes.push_back(metrics::category_outcome(pred, gold));
  }
  return metrics::macro_f1(outcomes);
}

// Linear warmup over `warmup` steps, then linear decay to zero at `total`.
double scheduled_rate(double base, long step, long warmup, long total) {
  if (step < warmup) return base * static_cast<double>(step) / static_cast<double>(std::max(1L, warmup));
  return base * std::max(0.0, static_cast<double>(total - step) / static_cast<double>(std::max(1L, total - warmup)));
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0)) throw ConfigError("gamma must be >= 0");
  if (!(warmup_fraction >= 0 && warmup_fraction < 1)) throw ConfigError("warmup_fraction must lie in [0, 1)");
  if (epochs <= 0 || batch_size <= 0 || patience <= 0) throw ConfigError("epochs, batch_size and patience must be positive");
  if (!(learning_rate > 0) || !(adam_epsilon > 0) || !(weight_decay >= 0))
    throw ConfigError("learning_rate and adam_epsilon must be positive, weight_decay nonnegative");
  if (feature_bits < 4 || feature_bits > 24) throw ConfigError("feature_bits must lie in [4, 24]");
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  for (double w : pos_weight)
    if (!(w > 0) || !std::isfinite(w)) throw ConfigError("pos_weight entries must be positive and finite");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) && c < 128) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

SparseFeatures featurize(std::string_view text, int feature_bits) {
  const auto tokens = tokenize(text);
  const std::uint64_t mask = (std::uint64_t{1} << feature_bits) - 1;
  SparseFeatures raw;
  auto add = [&](const std::string& feature) {
    std::uint64_t h = fnv1a64(feature);
    double sign = (h >> 63) ? -1.0 : 1.0;
    raw.emplace_back(static_cast<std::uint32_t>(h & mask), sign);
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add("u:" + tokens[i]);
    if (i + 1 < tokens.size()) add("b:" + tokens[i] + " " + tokens[i + 1]);
  }
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  SparseFeatures merged;
  for (const auto& [idx, v] : raw) {
    if (!merged.empty() && merged.back().first == idx)
      merged.back().second += v;
    else
      merged.emplace_back(idx, v);
  }
  std::erase_if(merged, [](const auto& p) { return p.second == 0.0; });
  double norm = 0;
  for (const auto& p : merged) norm += p.second * p.second;
  if (norm > 0) {
    norm = std::sqrt(norm);
    for (auto& p : merged) p.second /= norm;
  }
  return merged;
}

BaselineModel BaselineModel::zeros(corpus::Language language, int feature_bits) {
  BaselineModel m;
  m.language = language;
  m.feature_bits = feature_bits;
  const std::size_t categories = corpus::taxonomy(language).size();
  m.weights = RealMatrix(categories, std::size_t{1} << feature_bits, 0.0);
  m.bias.assign(categories, 0.0);
  return m;
}

double BaselineModel::logit(std::size_t category, const SparseFeatures& x) const {
  double z = bias[category];
  auto w = weights.row(category);
  for (const auto& [idx, v] : x) z += w[idx] * v;
  return z;
}

std::vector<double> default_pos_weights(std::span<const corpus::SentenceRecord* const> train, corpus::Language language) {
  auto labels = corpus::label_matrix(train, language);
  std::vector<double> out(labels.values.cols(), 1.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    double pos = 0;
    for (std::size_t i = 0; i < labels.values.rows(); ++i) pos += labels.values(i, c);
    double neg = static_cast<double>(labels.values.rows()) - pos;
    out[c] = pos > 0 ? std::clamp(neg / pos, 1.0, 100.0) : 1.0;
  }
  return out;
}

TrainResult train_baseline(std::span<const corpus::SentenceRecord* const> train,
                           std::span<const corpus::SentenceRecord* const> valid, corpus::Language language,
                           const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw corpus::EmptySelection(language, corpus::Split::train);
  if (valid.empty()) throw corpus::EmptySelection(language, corpus::Split::valid);

  const std::size_t categories = corpus::taxonomy(language).size();
  std::vector<double> pos_weight = config.pos_weight.empty() ? default_pos_weights(train, language) : config.pos_weight;
  if (pos_weight.size() != categories) throw ConfigError("pos_weight must have one entry per category");

  auto train_set = encode(train, language, config.feature_bits);
  if (config.min_count > 1) {
    std::vector<int> df(std::size_t{1} << config.feature_bits, 0);
    for (const auto& ex : train_set)
      for (const auto& [idx, v] : ex.x) ++df[idx];
    for (auto& ex : train_set) std::erase_if(ex.x, [&](const auto& p) { return df[p.first] < config.min_count; });
  }
  const auto valid_set = encode(valid, language, config.feature_bits);

  BaselineModel model = BaselineModel::zeros(language, config.feature_bits);
  const std::size_t dim = model.feature_dim();
  RealMatrix m1(categories, dim, 0.0), m2(categories, dim, 0.0), grad(categories, dim, 0.0);
  std::vector<double> b1(categories, 0.0), b2(categories, 0.0), gbias(categories, 0.0);

  // Buckets that have ever received a gradient. Every other weight has zero
  // value and zero moments, so its AdamW update is exactly zero and can be skipped.
  std::vector<char> touched(dim, 0);
  std::vector<std::uint32_t> active;

  const long steps_per_epoch = static_cast<long>((train_set.size() + config.batch_size - 1) / config.batch_size);
  const long total_steps = steps_per_epoch * config.epochs;
  const long warmup_steps = static_cast<long>(std::floor(config.warmup_fraction * static_cast<double>(total_steps)));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);

  TrainResult result;
  result.model = model;
  double best_f1 = -1.0;
  int since_best = 0;
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    deterministic_shuffle(std::span<std::size_t>(order), rng);
    double epoch_loss = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>((end - start) * categories);
      std::vector<std::uint32_t> batch_buckets;
      std::fill(gbias.begin(), gbias.end(), 0.0);
      double batch_loss = 0;

      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train_set[order[k]];
        for (const auto& [idx, v] : ex.x) {
          batch_buckets.push_back(idx);
          if (!touched[idx]) {
            touched[idx] = 1;
            active.push_back(idx);
          }
        }
        for (std::size_t c = 0; c < categories; ++c) {
          const double z = model.logit(c, ex.x);
          batch_loss += focal_loss(sigmoid(z), ex.y[c], config.gamma, pos_weight[c]);
          const double g = focal_loss_grad_logit(z, ex.y[c], config.gamma, pos_weight[c]) * scale;
          gbias[c] += g;
          auto gw = grad.row(c);
          for (const auto& [idx, v] : ex.x) gw[idx] += g * v;
        }
      }
      batch_loss *= scale;
      if (!std::isfinite(batch_loss)) throw DivergedLoss(epoch);
      epoch_loss += batch_loss;

      ++step;
      const double lr = scheduled_rate(config.learning_rate, step - 1, warmup_steps, total_steps);
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto adamw = [&](double& w, double& m, double& v, double g, bool decay) {
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g * g;
        if (decay) w -= lr * config.weight_decay * w;
        w -= lr * (m / bc1) / (std::sqrt(v / bc2) + config.adam_epsilon);
      };
      for (std::size_t c = 0; c < categories; ++c) {
        auto w = model.weights.row(c);
        auto m = m1.row(c);
        auto v = m2.row(c);
        auto g = grad.row(c);
        for (auto idx : active) adamw(w[idx], m[idx], v[idx], g[idx], true);
        adamw(model.bias[c], b1[c], b2[c], gbias[c], false);
        for (auto idx : batch_buckets) g[idx] = 0.0;
      }
    }

    const double f1 = macro_f1_at_half(model, valid_set);
    result.history.push_back({epoch, epoch_loss / static_cast<double>(steps_per_epoch), f1});
    result.epochs_run = epoch;
    if (f1 > best_f1) {
      best_f1 = f1;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

TrainResult train_baseline(const corpus::Dataset& dataset, corpus::Language language, const TrainConfig& config) {
  auto train = dataset.require(language, corpus::Split::train);
  auto valid = dataset.require(language, corpus::Split::valid);
  return train_baseline(train, valid, language, config);
}

LogitMatrix predict_logits(const BaselineModel& model, std::span<const corpus::SentenceRecord* const> records,
                           const std::string& provider_name) {
  std::vector<const corpus::SentenceRecord*> sorted(records.begin(), records.end());
  for (const auto* r : sorted)
    if (r->language != model.language)
      throw LanguageMismatch("record " + r->id + " is " + std::string(corpus::to_string(r->language)) + ", model is " +
                             std::string(corpus::to_string(model.language)));
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i]->id == sorted[i - 1]->id) throw ProviderError("duplicate sample id '" + sorted[i]->id + "'");

  LogitMatrix out;
  out.provider = provider_name;
  out.language = model.language;
  out.values = RealMatrix(sorted.size(), model.bias.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.ids.push_back(sorted[i]->id);
    const auto x = featurize(sorted[i]->text, model.feature_bits);
    for (std::size_t c = 0; c < model.bias.size(); ++c) out.values(i, c) = model.logit(c, x);
  }
  return out;
}

}  // namespace comment_mme::provider
