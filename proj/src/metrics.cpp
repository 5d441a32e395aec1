#include "comment_mme/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "comment_mme/util.hpp"

namespace comment_mme::metrics {

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_from_pr(double precision, double recall) {
  return safe_ratio(2.0 * precision * recall, precision + recall);
}

CategoryOutcome CategoryOutcome::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  CategoryOutcome o{tp, fp, fn, tn};
  o.precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  o.recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  o.f1 = f1_from_pr(o.precision, o.recall);
  return o;
}

CategoryOutcome category_outcome(std::span<const unsigned char> preds, std::span<const unsigned char> labels) {
  if (preds.size() != labels.size())
    throw LengthMismatch("predictions (" + std::to_string(preds.size()) + ") and labels (" +
                         std::to_string(labels.size()) + ") differ in length");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0;
    const bool y = labels[i] != 0;
    tp += p && y;
    fp += p && !y;
    fn += !p && y;
    tn += !p && !y;
  }
  return CategoryOutcome::from_counts(tp, fp, fn, tn);
}

double macro_f1(std::span<const double> f1_values) {
  if (f1_values.empty()) throw DataError("macro_f1 of an empty list");
  return std::accumulate(f1_values.begin(), f1_values.end(), 0.0) / static_cast<double>(f1_values.size());
}

double macro_f1(std::span<const CategoryOutcome> outcomes) {
  std::vector<double> f1;
  f1.reserve(outcomes.size());
  for (const auto& o : outcomes) f1.push_back(o.f1);
  return macro_f1(f1);
}

double weighted_f1(std::span<const CategoryOutcome> outcomes) {
  double num = 0, den = 0;
  for (const auto& o : outcomes) {
    num += static_cast<double>(o.support()) * o.f1;
    den += static_cast<double>(o.support());
  }
  if (den == 0) throw DataError("weighted_f1: total support is zero");
  return num / den;
}

void ScoreInputs::validate() const {
  if (!(f1_avg >= 0) || !(t_model >= 0) || !(g_model >= 0))
    throw ConfigError("score inputs must be nonnegative");
  if (!(t_max > 0) || !(g_max > 0)) throw ConfigError("t_max and g_max must be positive");
}

double submission_score(const ScoreInputs& in) {
  in.validate();
  return 0.6 * in.f1_avg + 0.2 * std::max((in.t_max - in.t_model) / in.t_max, 0.0) +
         0.2 * std::max((in.g_max - in.g_model) / in.g_max, 0.0);
}

double measure_runtime(const std::function<void(std::span<const corpus::SentenceRecord* const>)>& pipeline,
                       std::span<const corpus::SentenceRecord* const> records, int repetitions) {
  if (records.empty()) throw DataError("measure_runtime: no records");
  if (repetitions < 3) throw ConfigError("measure_runtime needs at least 3 repetitions");
  using clock = std::chrono::steady_clock;
  pipeline(records);
  std::vector<double> per_sample;
  for (int r = 0; r < repetitions; ++r) {
    auto start = clock::now();
    pipeline(records);
    std::chrono::duration<double, std::milli> elapsed = clock::now() - start;
    per_sample.push_back(elapsed.count() / static_cast<double>(records.size()));
  }
  std::sort(per_sample.begin(), per_sample.end());
  const std::size_t n = per_sample.size();
  return n % 2 ? per_sample[n / 2] : 0.5 * (per_sample[n / 2 - 1] + per_sample[n / 2]);
}

double total_gflops(std::span<const provider::ProviderDescriptor> manifest, std::size_t n_samples) {
  double total = 0;
  for (const auto& p : manifest) total += p.cost_gflops_per_sample * static_cast<double>(n_samples);
  return total;
}

void EvalReport::aggregate() {
  std::vector<CategoryOutcome> all;
  std::map<corpus::Language, std::vector<CategoryOutcome>> by_language;
  for (const auto& r : rows) {
    all.push_back(r.outcome);
    by_language[r.language].push_back(r.outcome);
  }
  macro_f1 = metrics::macro_f1(all);
  weighted_f1 = metrics::weighted_f1(all);
  language_macro.clear();
  for (const auto& [lang, outcomes] : by_language) language_macro[lang] = metrics::macro_f1(outcomes);
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "language,category,precision,recall,f1,support,tp,fp,fn,tn\n";
  for (const auto& r : report.rows) {
    const auto& o = r.outcome;
    out << corpus::to_string(r.language) << ',' << r.category << ',' << format_real(o.precision) << ','
        << format_real(o.recall) << ',' << format_real(o.f1) << ',' << o.support() << ',' << o.tp << ',' << o.fp
        << ',' << o.fn << ',' << o.tn << '\n';
  }
  out << "summary,macro_f1," << format_real(report.macro_f1) << '\n';
  out << "summary,weighted_f1," << format_real(report.weighted_f1) << '\n';
  for (const auto& [lang, v] : report.language_macro)
    out << "summary,macro_f1_" << corpus::to_string(lang) << ',' << format_real(v) << '\n';
  out << "summary,runtime_ms_per_sample," << format_real(report.runtime_ms_per_sample) << '\n';
  out << "summary,total_gflops," << format_real(report.total_gflops) << '\n';
  out << "summary,score," << format_real(report.score) << '\n';
  return out.str();
}

namespace {

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_real(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("report: bad number '" + s + "'");
  return v;
}

std::size_t to_count(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("report: bad count '" + s + "'");
  return v;
}

}  // namespace

EvalReport parse_report_csv(std::string_view text) {
  EvalReport report;
  bool header_seen = false;
  for (const auto& line : split_lines(text)) {
    if (is_skippable_line(line)) continue;
    auto f = split_csv(line);
    if (!header_seen) {
      if (f.empty() || f[0] != "language") throw DataError("report: missing column header");
      header_seen = true;
      continue;
    }
    if (f.size() == 3 && f[0] == "summary") {
      const std::string& key = f[1];
      double v = to_real(f[2]);
      if (key == "macro_f1") report.macro_f1 = v;
      else if (key == "weighted_f1") report.weighted_f1 = v;
      else if (key == "runtime_ms_per_sample") report.runtime_ms_per_sample = v;
      else if (key == "total_gflops") report.total_gflops = v;
      else if (key == "score") report.score = v;
      else if (key.starts_with("macro_f1_")) {
        auto lang = corpus::parse_language(key.substr(9));
        if (!lang) throw DataError("report: unknown summary key " + key);
        report.language_macro[*lang] = v;
      } else {
        throw DataError("report: unknown summary key " + key);
      }
      continue;
    }
    if (f.size() != 10) throw DataError("report: expected 10 columns in '" + line + "'");
    auto lang = corpus::parse_language(f[0]);
    if (!lang) throw DataError("report: unknown language " + f[0]);
    CategoryRow row{*lang, f[1], CategoryOutcome{to_count(f[6]), to_count(f[7]), to_count(f[8]), to_count(f[9])}};
    row.outcome.precision = to_real(f[2]);
    row.outcome.recall = to_real(f[3]);
    row.outcome.f1 = to_real(f[4]);
    if (to_count(f[5]) != row.outcome.support()) throw DataError("report: support does not match tp + fn");
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace comment_mme::metrics
