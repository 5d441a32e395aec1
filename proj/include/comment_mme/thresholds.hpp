#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "comment_mme/corpus.hpp"
#include "comment_mme/ensemble.hpp"
#include "comment_mme/error.hpp"
#include "comment_mme/matrix.hpp"

namespace comment_mme::thresholds {

using corpus::Language;

// Inclusive threshold grid start + k * step, k = 0..count()-1.
struct Grid {
  double start = 0.10;
  double end = 0.90;
  double step = 0.02;

  void validate() const;
  std::size_t count() const;
  double at(std::size_t k) const;

  // "0.10:0.90:0.02"
  static Grid parse(std::string_view spec);
};

struct ThresholdEntry {
  double t = 0.5;
  double f1_valid = 0.0;
  bool fallback = false;  // no positive validation example; t defaulted to 0.5
};

struct ThresholdTable {
  Grid grid;
  std::map<std::string, ThresholdEntry> entries;  // key "<lang>/<category>"

  const ThresholdEntry* find(Language language, std::string_view category) const;
  void merge(const ThresholdTable& other);
};

class MissingThreshold : public FitError {
 public:
  explicit MissingThreshold(const std::string& key) : FitError("no threshold for " + key) {}
};

// Per category: the grid point maximising F1 of (P >= t); smallest t on ties.
ThresholdTable tune_thresholds(const ensemble::ProbabilityMatrix& probs, const corpus::LabelMatrix& labels,
                               const Grid& grid = {});

// prediction(i, c) = P(i, c) >= t_c.
BinaryMatrix apply_thresholds(const ensemble::ProbabilityMatrix& probs, const ThresholdTable& table);

// Table with the same t for every category of `language` (fixed-threshold baseline).
ThresholdTable constant_table(Language language, double t);

// {"<lang>/<category>": {"t": .., "f1_valid": .., "fallback": ..}}
std::string thresholds_json(const ThresholdTable& table);
ThresholdTable parse_thresholds_json(std::string_view text);

}  // namespace comment_mme::thresholds
