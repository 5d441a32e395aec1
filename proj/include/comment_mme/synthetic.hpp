#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "comment_mme/corpus.hpp"

namespace comment_mme::synthetic {

// Keyword-planted corpus: every category has one unique trigger token that
// appears in exactly the sentences labelled with it.
struct CorpusSpec {
  std::map<corpus::Language, std::size_t> sentences = {
      {corpus::Language::java, 250}, {corpus::Language::python, 170}, {corpus::Language::pharo, 180}};
  double train_fraction = 0.6;
  double valid_fraction = 0.2;
  double multi_label_rate = 0.15;
  double empty_rate = 0.05;
  std::uint64_t seed = 1;
};

// Trigger token of a category ("kw" + two-letter language tag + category).
std::string keyword(corpus::Language language, std::string_view category);

corpus::Dataset make_corpus(const CorpusSpec& spec);

}  // namespace comment_mme::synthetic
