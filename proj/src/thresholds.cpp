#include "comment_mme/thresholds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "comment_mme/metrics.hpp"
#include "comment_mme/util.hpp"
#include "json.hpp"

namespace comment_mme::thresholds {

namespace {

using ojson = nlohmann::ordered_json;

double parse_number(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("bad number '" + std::string(s) + "' in grid");
  return v;
}

}  // namespace

void Grid::validate() const {
  if (!(start < end) || !(step > 0) || start < 0 || end > 1)
    throw ConfigError("threshold grid needs 0 <= start < end <= 1 and step > 0");
}

std::size_t Grid::count() const {
  validate();
  return static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
}

double Grid::at(std::size_t k) const {
  // Snapped to 1e-9 so that decimal grids hit their nominal values exactly
  // (0.10 + 20 * 0.02 is 0.5, not 0.5000000000000001).
  return std::round((start + static_cast<double>(k) * step) * 1e9) / 1e9;
}

Grid Grid::parse(std::string_view spec) {
  auto a = spec.find(':');
  auto b = a == std::string_view::npos ? a : spec.find(':', a + 1);
  if (b == std::string_view::npos) throw ConfigError("grid must look like start:end:step");
  Grid g{parse_number(spec.substr(0, a)), parse_number(spec.substr(a + 1, b - a - 1)), parse_number(spec.substr(b + 1))};
  g.validate();
  return g;
}

const ThresholdEntry* ThresholdTable::find(Language language, std::string_view category) const {
  auto it = entries.find(corpus::category_key(language, category));
  return it == entries.end() ? nullptr : &it->second;
}

void ThresholdTable::merge(const ThresholdTable& other) {
  for (const auto& [k, v] : other.entries) entries[k] = v;
}

ThresholdTable tune_thresholds(const ensemble::ProbabilityMatrix& probs, const corpus::LabelMatrix& labels,
                               const Grid& grid) {
  const std::size_t points = grid.count();
  if (probs.language != labels.language || probs.ids != labels.ids || probs.values.rows() != labels.values.rows() ||
      probs.values.cols() != labels.values.cols())
    throw ensemble::Misaligned("probabilities and labels are not aligned");

  const std::size_t n = probs.values.rows();
  const auto tax = corpus::taxonomy(probs.language);
  ThresholdTable table;
  table.grid = grid;

  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < probs.values.cols(); ++c) {
    const std::string key = corpus::category_key(probs.language, tax[c]);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) positives += labels.values(i, c);
    if (positives == 0) {
      table.entries[key] = ThresholdEntry{0.5, 0.0, true};
      continue;
    }

    // Ascending sweep: samples with P below the current threshold are negatives.
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return probs.values(a, c) < probs.values(b, c); });
    std::size_t below = 0, positives_below = 0;
    ThresholdEntry best{grid.at(0), -1.0, false};
    for (std::size_t k = 0; k < points; ++k) {
      const double t = grid.at(k);
      while (below < n && probs.values(order[below], c) < t) {
        positives_below += labels.values(order[below], c);
        ++below;
      }
      const std::size_t tp = positives - positives_below;
      const std::size_t fp = (n - below) - tp;
      const std::size_t fn = positives_below;
      const std::size_t tn = below - positives_below;
      const double f1 = metrics::CategoryOutcome::from_counts(tp, fp, fn, tn).f1;
      if (f1 > best.f1_valid) best = ThresholdEntry{t, f1, false};
    }
    table.entries[key] = best;
  }
  return table;
}

BinaryMatrix apply_thresholds(const ensemble::ProbabilityMatrix& probs, const ThresholdTable& table) {
  const auto tax = corpus::taxonomy(probs.language);
  BinaryMatrix out(probs.values.rows(), probs.values.cols(), 0);
  for (std::size_t c = 0; c < probs.values.cols(); ++c) {
    const auto* entry = table.find(probs.language, tax[c]);
    if (!entry) throw MissingThreshold(corpus::category_key(probs.language, tax[c]));
    for (std::size_t i = 0; i < probs.values.rows(); ++i) out(i, c) = probs.values(i, c) >= entry->t ? 1 : 0;
  }
  return out;
}

ThresholdTable constant_table(Language language, double t) {
  ThresholdTable table;
  for (auto category : corpus::taxonomy(language)) table.entries[corpus::category_key(language, category)] = {t, 0.0, false};
  return table;
}

std::string thresholds_json(const ThresholdTable& table) {
  ojson j = ojson::object();
  for (auto lang : corpus::kLanguages)
    for (auto category : corpus::taxonomy(lang)) {
      auto key = corpus::category_key(lang, category);
      auto it = table.entries.find(key);
      if (it == table.entries.end()) continue;
      ojson e;
      e["t"] = it->second.t;
      e["f1_valid"] = it->second.f1_valid;
      e["fallback"] = it->second.fallback;
      j[key] = std::move(e);
    }
  return "// grid " + format_real(table.grid.start) + ":" + format_real(table.grid.end) + ":" +
         format_real(table.grid.step) + "\n" + j.dump(2) + "\n";
}

ThresholdTable parse_thresholds_json(std::string_view text) {
  ThresholdTable table;
  for (const auto& line : split_lines(text)) {
    auto t = trim(line);
    if (t.starts_with("// grid ")) table.grid = Grid::parse(trim(t.substr(8)));
  }
  ojson j;
  try {
    j = ojson::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const ojson::exception& e) {
    throw FitError(std::string("thresholds JSON: ") + e.what());
  }
  if (!j.is_object()) throw FitError("thresholds JSON must be an object");
  for (const auto& [key, e] : j.items()) {
    auto slash = key.find('/');
    auto lang = slash == std::string::npos ? std::nullopt : corpus::parse_language(key.substr(0, slash));
    if (!lang || !corpus::category_index(*lang, key.substr(slash + 1)))
      throw FitError("thresholds JSON: unknown category key '" + key + "'");
    if (!e.is_object() || !e.contains("t") || !e["t"].is_number())
      throw FitError("thresholds JSON: entry " + key + " lacks a numeric 't'");
    ThresholdEntry entry;
    entry.t = e["t"].get<double>();
    if (e.contains("f1_valid")) entry.f1_valid = e["f1_valid"].get<double>();
    if (e.contains("fallback")) entry.fallback = e["fallback"].get<bool>();
    table.entries[key] = entry;
  }
  return table;
}

}  // namespace comment_mme::thresholds
