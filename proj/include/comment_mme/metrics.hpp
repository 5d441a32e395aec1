#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "comment_mme/corpus.hpp"
#include "comment_mme/error.hpp"
#include "comment_mme/provider.hpp"

namespace comment_mme::metrics {

// 0/0 is 0 for precision, recall and F1.
double safe_ratio(double num, double den);
double f1_from_pr(double precision, double recall);

struct CategoryOutcome {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::size_t support() const { return tp + fn; }
  std::size_t total() const { return tp + fp + fn + tn; }

  static CategoryOutcome from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

CategoryOutcome category_outcome(std::span<const unsigned char> preds, std::span<const unsigned char> labels);

// Unweighted mean of F1 over categories.
double macro_f1(std::span<const CategoryOutcome> outcomes);
double macro_f1(std::span<const double> f1_values);

// Support-weighted mean of F1.
double weighted_f1(std::span<const CategoryOutcome> outcomes);

struct ScoreInputs {
  double f1_avg = 0.0;
  double t_model = 0.0;  // ms per sample
  double t_max = 0.0;
  double g_model = 0.0;  // GFLOPS
  double g_max = 0.0;

  void validate() const;
};

// 0.6 F1 + 0.2 max((Tmax - T)/Tmax, 0) + 0.2 max((Gmax - G)/Gmax, 0).
double submission_score(const ScoreInputs& inputs);

// Median over `repetitions` timed passes of (wall clock / records), in ms,
// after one discarded warm-up pass. Runs serially.
double measure_runtime(const std::function<void(std::span<const corpus::SentenceRecord* const>)>& pipeline,
                       std::span<const corpus::SentenceRecord* const> records, int repetitions);

// Sum over providers of declared per-sample cost times samples.
double total_gflops(std::span<const provider::ProviderDescriptor> manifest, std::size_t n_samples);

struct CategoryRow {
  corpus::Language language = corpus::Language::java;
  std::string category;
  CategoryOutcome outcome;
};

struct EvalReport {
  std::vector<CategoryRow> rows;  // taxonomy order, languages in canonical order
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::map<corpus::Language, double> language_macro;
  double runtime_ms_per_sample = 0.0;
  double total_gflops = 0.0;
  double score = 0.0;

  // Fills the aggregate fields from `rows`.
  void aggregate();
};

// Table-style CSV: language,category,precision,recall,f1,support,tp,fp,fn,tn
// followed by "summary,<key>,<value>" lines.
std::string report_csv(const EvalReport& report);
EvalReport parse_report_csv(std::string_view text);

}  // namespace comment_mme::metrics
