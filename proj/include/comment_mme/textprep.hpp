#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "comment_mme/corpus.hpp"
#include "comment_mme/error.hpp"

namespace comment_mme::textprep {

using corpus::Language;

// Placeholder/original pairs produced by mask_protected. Placeholders are
// "MSK0", "MSK1", ... in order of appearance.
struct MaskEntry {
  std::string placeholder;
  std::string original;

  friend bool operator==(const MaskEntry&, const MaskEntry&) = default;
};

using MaskTable = std::vector<MaskEntry>;

struct MaskedText {
  std::string text;
  MaskTable table;
};

struct PrepConfig {
  Language language = Language::java;
  bool enable_case_split = true;
  bool enable_caret_fix = true;
  bool enable_segmentation = false;  // pharo only

  static PrepConfig defaults(Language language) { return PrepConfig{language, true, true, false}; }

  // Throws ConfigError when segmentation is enabled for a non-Pharo language.
  void validate() const;
};

class MissingPlaceholder : public DataError {
 public:
  explicit MissingPlaceholder(const std::string& token)
      : DataError("placeholder " + token + " does not occur exactly once"), token_(token) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

// Java/Python: every '^' becomes '.'. Pharo: only a caret flanked by word
// characters on both sides that is not the first non-blank character of its
// line; anything else is the return operator and stays.
std::string fix_carets(std::string_view text, Language language);

// Replaces protected spans (selectors, version numbers, documentation tags,
// Smalltalk operators) with placeholders.
MaskedText mask_protected(std::string_view text, Language language);

std::string unmask(std::string_view text, const MaskTable& table);

// Inserts a space at lower->upper and acronym->word boundaries. Never splits
// directly in front of a mask placeholder.
std::string split_cases(std::string_view text);

// Splits a structured Pharo class comment into sentences and headers.
std::vector<std::string> segment_pharo(std::string_view comment);

// mask_protected -> fix_carets -> split_cases -> unmask.
corpus::SentenceRecord preprocess(const corpus::SentenceRecord& record, const PrepConfig& config);

// Applies preprocess to every record. With segmentation enabled, Pharo records
// whose text yields several segments are replaced by one record per segment
// (ids suffixed "#<k>", labels copied).
corpus::Dataset preprocess_dataset(const corpus::Dataset& dataset, const std::vector<PrepConfig>& configs);

// Header line of a structured Pharo comment: 1-5 alphabetic words and a final ':'.
bool is_pharo_header(std::string_view line);

}  // namespace comment_mme::textprep
