#include "comment_mme/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "comment_mme/focal_loss.hpp"
#include "comment_mme/util.hpp"
#include "json.hpp"

namespace comment_mme::ensemble {

namespace {

using ojson = nlohmann::ordered_json;

// F1 as the exact fraction 2tp / (2tp + fp + fn); 0/0 is 0/1.
struct F1Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  friend bool operator<(const F1Fraction& a, const F1Fraction& b) { return a.num * b.den < b.num * a.den; }
  friend bool operator==(const F1Fraction& a, const F1Fraction& b) { return a.num * b.den == b.num * a.den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

F1Fraction f1_fraction(std::size_t tp, std::size_t fp, std::size_t fn) {
  std::uint64_t den = 2 * tp + fp + fn;
  if (den == 0) return {0, 1};
  return {2 * tp, den};
}

void check_aligned(std::span<const provider::LogitMatrix> logits) {
  if (logits.empty()) throw Misaligned("no provider logits given");
  const auto& first = logits.front();
  for (const auto& m : logits) {
    if (m.language != first.language) throw Misaligned("provider logits mix languages");
    if (m.ids != first.ids) throw Misaligned("provider " + m.provider + " rows are not aligned with " + first.provider);
    if (m.values.rows() != m.ids.size() || m.values.cols() != corpus::taxonomy(m.language).size())
      throw Misaligned("provider " + m.provider + " matrix shape does not match its ids and taxonomy");
  }
}

std::vector<double> uniform(std::size_t m) { return std::vector<double>(m, 1.0 / static_cast<double>(m)); }

}  // namespace

std::span<const double> EnsembleWeights::weights(Language language, std::size_t category) const {
  auto it = table.find(language);
  if (it == table.end() || category >= it->second.rows())
    throw FitError("no ensemble weights for " + std::string(corpus::to_string(language)) + " category " +
                   std::to_string(category));
  return it->second.row(category);
}

void EnsembleWeights::validate() const {
  if (providers.empty()) throw FitError("ensemble weights need at least one provider");
  for (const auto& [lang, m] : table) {
    if (m.rows() != corpus::taxonomy(lang).size() || m.cols() != providers.size())
      throw FitError("weight table for " + std::string(corpus::to_string(lang)) + " has the wrong shape");
    for (std::size_t c = 0; c < m.rows(); ++c) {
      double sum = 0;
      for (double w : m.row(c)) {
        if (!(w >= 0) || !std::isfinite(w)) throw FitError("ensemble weights must be nonnegative and finite");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw FitError("ensemble weights of a category must sum to 1");
    }
  }
}

void EnsembleWeights::merge(const EnsembleWeights& other) {
  if (providers.empty()) providers = other.providers;
  if (providers != other.providers) throw FitError("cannot merge weight tables over different providers");
  for (const auto& [lang, m] : other.table) table[lang] = m;
}

std::vector<double> EnsembleWeights::contribution() const {
  std::vector<double> mean(providers.size(), 0.0);
  std::size_t rows = 0;
  for (const auto& [lang, m] : table)
    for (std::size_t c = 0; c < m.rows(); ++c, ++rows)
      for (std::size_t p = 0; p < m.cols(); ++p) mean[p] += m(c, p);
  if (rows == 0) throw FitError("empty weight table");
  for (auto& v : mean) v /= static_cast<double>(rows);
  return mean;
}

ProbabilityMatrix combine(std::span<const provider::LogitMatrix> logits, const EnsembleWeights& weights) {
  check_aligned(logits);
  if (logits.size() != weights.providers.size())
    throw Misaligned("got " + std::to_string(logits.size()) + " provider matrices for " +
                     std::to_string(weights.providers.size()) + " weighted providers");
  for (std::size_t m = 0; m < logits.size(); ++m)
    if (!logits[m].provider.empty() && logits[m].provider != weights.providers[m])
      throw Misaligned("provider order mismatch: " + logits[m].provider + " vs " + weights.providers[m]);

  const auto& first = logits.front();
  ProbabilityMatrix out;
  out.language = first.language;
  out.ids = first.ids;
  out.values = RealMatrix(first.values.rows(), first.values.cols(), 0.0);
  for (std::size_t c = 0; c < first.values.cols(); ++c) {
    auto w = weights.weights(first.language, c);
    for (std::size_t i = 0; i < first.values.rows(); ++i) {
      double p = 0.0;
      for (std::size_t m = 0; m < logits.size(); ++m) p += w[m] * provider::sigmoid(logits[m].values(i, c));
      out.values(i, c) = p;
    }
  }
  return out;
}

std::string_view to_string(FitMethod method) {
  return method == FitMethod::simplex_grid ? "simplex_grid" : "gradient";
}

FitMethod parse_fit_method(std::string_view name) {
  if (name == "simplex_grid") return FitMethod::simplex_grid;
  if (name == "gradient") return FitMethod::gradient;
  throw ConfigError("unknown ensemble method '" + std::string(name) + "'");
}

std::vector<std::vector<double>> simplex_grid(std::size_t providers, double resolution) {
  if (providers == 0) throw ConfigError("simplex grid needs at least one provider");
  const double units_real = 1.0 / resolution;
  const auto units = static_cast<int>(std::lround(units_real));
  if (units < 1 || std::abs(units_real - units) > 1e-9) throw ConfigError("grid resolution must divide 1");

  std::vector<std::vector<double>> out;
  std::vector<int> parts(providers, 0);
  // Descending lexicographic enumeration of integer compositions.
  auto recurse = [&](auto&& self, std::size_t index, int remaining) -> void {
    if (index + 1 == providers) {
      parts[index] = remaining;
      std::vector<double> w(providers);
      for (std::size_t k = 0; k < providers; ++k) w[k] = static_cast<double>(parts[k]) / units;
      out.push_back(std::move(w));
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      parts[index] = v;
      self(self, index + 1, remaining - v);
    }
  };
  recurse(recurse, 0, units);
  return out;
}

double weight_entropy(std::span<const double> w) {
  double h = 0;
  for (double v : w)
    if (v > 0) h -= v * std::log(v);
  return h;
}

FitResult fit_weights(std::span<const provider::LogitMatrix> valid_logits, const corpus::LabelMatrix& valid_labels,
                      const FitOptions& options) {
  check_aligned(valid_logits);
  const auto& first = valid_logits.front();
  if (first.language != valid_labels.language) throw Misaligned("logits and labels belong to different languages");
  if (first.ids != valid_labels.ids) throw Misaligned("logit rows are not aligned with the validation labels");
  const std::size_t n = first.ids.size();
  if (n == 0) throw FitError("EmptyValidation: no validation samples for " + std::string(corpus::to_string(first.language)));

  const std::size_t providers = valid_logits.size();
  const std::size_t categories = first.values.cols();
  const auto tax = corpus::taxonomy(first.language);

  FitResult result;
  for (const auto& m : valid_logits) result.weights.providers.push_back(m.provider);
  RealMatrix table(categories, providers, 0.0);
  result.objective.assign(categories, 0.0);

  // sigmoid(z) per provider, category-major for the inner loops.
  std::vector<RealMatrix> probs(providers, RealMatrix(categories, n));
  for (std::size_t m = 0; m < providers; ++m)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < categories; ++c) probs[m](c, i) = provider::sigmoid(valid_logits[m].values(i, c));

  std::vector<std::vector<double>> candidates;
  if (options.method == FitMethod::simplex_grid) {
    candidates = simplex_grid(providers, options.resolution);
    // The barycentre is not a grid point when M does not divide the grid; it
    // is added so that ties between equivalent providers resolve to uniform.
    auto u = uniform(providers);
    if (std::find(candidates.begin(), candidates.end(), u) == candidates.end()) candidates.push_back(u);
  }
  std::mt19937_64 rng(options.seed);

  for (std::size_t c = 0; c < categories; ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) positives += valid_labels.values(i, c);
    if (positives == 0) {
      result.warnings.push_back("NoPositiveExamples(" + corpus::category_key(first.language, tax[c]) +
                                "): uniform weights");
      auto u = uniform(providers);
      std::copy(u.begin(), u.end(), table.row(c).begin());
      continue;
    }

    if (options.method == FitMethod::simplex_grid) {
      const std::vector<double>* best = nullptr;
      F1Fraction best_f1;
      double best_entropy = 0;
      for (const auto& w : candidates) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double p = 0.0;
          for (std::size_t m = 0; m < providers; ++m) p += w[m] * probs[m](c, i);
          const bool pred = p >= 0.5;
          const bool gold = valid_labels.values(i, c) != 0;
          tp += pred && gold;
          fp += pred && !gold;
          fn += !pred && gold;
        }
        const F1Fraction f1 = f1_fraction(tp, fp, fn);
        const double h = weight_entropy(w);
        if (!best || best_f1 < f1 || (f1 == best_f1 && h > best_entropy + 1e-12)) {
          best = &w;
          best_f1 = f1;
          best_entropy = h;
        }
      }
      std::copy(best->begin(), best->end(), table.row(c).begin());
      result.objective[c] = best_f1.value();
    } else {
      std::vector<double> theta(providers);
      for (auto& t : theta) t = 0.01 * (2.0 * uniform01(rng) - 1.0);
      std::vector<double> w(providers), grad(providers);
      auto softmax = [&] {
        const double mx = *std::max_element(theta.begin(), theta.end());
        double sum = 0;
        for (std::size_t m = 0; m < providers; ++m) sum += (w[m] = std::exp(theta[m] - mx));
        for (auto& v : w) v /= sum;
      };
      double loss = 0;
      for (int step = 0; step <= options.steps; ++step) {
        softmax();
        std::fill(grad.begin(), grad.end(), 0.0);
        loss = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double p = 0.0;
          for (std::size_t m = 0; m < providers; ++m) p += w[m] * probs[m](c, i);
          const int y = valid_labels.values(i, c);
          loss += provider::focal_loss(p, y, options.gamma, 1.0);
          const double dp = provider::focal_loss_grad_prob(p, y, options.gamma, 1.0);
          for (std::size_t k = 0; k < providers; ++k) grad[k] += dp * w[k] * (probs[k](c, i) - p);
        }
        loss /= static_cast<double>(n);
        if (!std::isfinite(loss)) throw FitError("ensemble weight descent diverged");
        if (step == options.steps) break;
        for (std::size_t k = 0; k < providers; ++k) theta[k] -= options.learning_rate * grad[k] / static_cast<double>(n);
      }
      std::copy(w.begin(), w.end(), table.row(c).begin());
      result.objective[c] = loss;
    }
  }
  result.weights.table.emplace(first.language, std::move(table));
  result.weights.validate();
  return result;
}

std::string weights_json(const EnsembleWeights& weights) {
  ojson j = ojson::object();
  for (auto lang : corpus::kLanguages) {
    auto it = weights.table.find(lang);
    if (it == weights.table.end()) continue;
    const auto tax = corpus::taxonomy(lang);
    for (std::size_t c = 0; c < tax.size(); ++c) {
      ojson row = ojson::object();
      for (std::size_t p = 0; p < weights.providers.size(); ++p) row[weights.providers[p]] = it->second(c, p);
      j[corpus::category_key(lang, tax[c])] = std::move(row);
    }
  }
  return j.dump(2) + "\n";
}

EnsembleWeights parse_weights_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const ojson::exception& e) {
    throw FitError(std::string("weights JSON: ") + e.what());
  }
  if (!j.is_object() || j.empty()) throw FitError("weights JSON must be a non-empty object");

  EnsembleWeights out;
  for (const auto& [key, row] : j.items()) {
    if (!row.is_object() || row.empty()) throw FitError("weights for " + key + " must be a non-empty object");
    if (out.providers.empty())
      for (const auto& [name, v] : row.items()) out.providers.push_back(name);
  }
  std::map<Language, std::size_t> seen;
  for (const auto& [key, row] : j.items()) {
    auto slash = key.find('/');
    auto lang = slash == std::string::npos ? std::nullopt : corpus::parse_language(key.substr(0, slash));
    auto c = lang ? corpus::category_index(*lang, key.substr(slash + 1)) : std::nullopt;
    if (!c) throw FitError("weights JSON: unknown category key '" + key + "'");
    auto& table = out.table[*lang];
    if (table.empty()) table = RealMatrix(corpus::taxonomy(*lang).size(), out.providers.size(), -1.0);
    if (row.size() != out.providers.size()) throw FitError("weights for " + key + " cover a different provider set");
    for (std::size_t p = 0; p < out.providers.size(); ++p) {
      auto it = row.find(out.providers[p]);
      if (it == row.end() || !it->is_number()) throw FitError("weights for " + key + " lack provider " + out.providers[p]);
      table(*c, p) = it->get<double>();
    }
    ++seen[*lang];
  }
  for (const auto& [lang, count] : seen)
    if (count != corpus::taxonomy(lang).size())
      throw FitError("weights JSON is missing categories of " + std::string(corpus::to_string(lang)));
  out.validate();
  return out;
}

std::string probabilities_jsonl(const ProbabilityMatrix& probs) {
  const auto tax = corpus::taxonomy(probs.language);
  std::string out;
  for (std::size_t i = 0; i < probs.ids.size(); ++i) {
    out += "{\"id\":" + ojson(probs.ids[i]).dump() + ",\"probs\":{";
    for (std::size_t c = 0; c < tax.size(); ++c) {
      if (c) out += ',';
      out += '"' + corpus::category_key(probs.language, tax[c]) + "\":" + format_real(probs.values(i, c));
    }
    out += "}}\n";
  }
  return out;
}

std::map<Language, ProbabilityMatrix> parse_probabilities_jsonl(std::string_view text) {
  std::map<Language, std::vector<std::pair<std::string, std::vector<double>>>> rows;
  std::size_t no = 0;
  for (const auto& line : split_lines(text)) {
    ++no;
    if (is_skippable_line(line)) continue;
    const std::string where = "probabilities line " + std::to_string(no);
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("probs") || !j["probs"].is_object() ||
        j["probs"].empty())
      throw DataError(where + ": expected {\"id\": string, \"probs\": {...}}");
    const auto& first = j["probs"].begin().key();
    const auto lang = corpus::parse_language(first.substr(0, first.find('/')));
    if (!lang) throw DataError(where + ": unknown category key '" + first + "'");
    const auto tax = corpus::taxonomy(*lang);
    std::vector<double> values(tax.size());
    for (std::size_t c = 0; c < tax.size(); ++c) {
      const auto key = corpus::category_key(*lang, tax[c]);
      if (!j["probs"].contains(key) || !j["probs"][key].is_number()) throw DataError(where + ": missing " + key);
      values[c] = j["probs"][key].get<double>();
      if (!(values[c] >= 0.0 && values[c] <= 1.0)) throw DataError(where + ": " + key + " is not a probability");
    }
    if (j["probs"].size() != tax.size()) throw DataError(where + ": keys outside the " + std::string(corpus::to_string(*lang)) + " taxonomy");
    rows[*lang].emplace_back(j["id"].get<std::string>(), std::move(values));
  }

  std::map<Language, ProbabilityMatrix> out;
  for (auto& [lang, list] : rows) {
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    ProbabilityMatrix m;
    m.language = lang;
    m.values = RealMatrix(list.size(), corpus::taxonomy(lang).size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i && list[i].first == list[i - 1].first) throw DataError("probabilities: duplicate id '" + list[i].first + "'");
      m.ids.push_back(list[i].first);
      for (std::size_t c = 0; c < list[i].second.size(); ++c) m.values(i, c) = list[i].second[c];
    }
    out.emplace(lang, std::move(m));
  }
  return out;
}

}  // namespace comment_mme::ensemble
