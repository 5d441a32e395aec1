#include "comment_mme/synthetic.hpp"

#include <array>
#include <cstdio>
#include <numeric>
#include <random>

#include "comment_mme/util.hpp"

namespace comment_mme::synthetic {

namespace {

// Filler words are syllable pairs drawn from a large vocabulary so that no
// filler recurs often enough to stand in for a trigger token.
constexpr std::array<std::string_view, 24> kSyllables = {"ba", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "re",
                                                         "si", "to", "vu", "wa", "xe", "yi", "zo", "qu", "ja", "be", "co", "du"};

std::string filler_word(std::mt19937_64& rng) {
  std::string w;
  for (int k = 0; k < 3; ++k) w += kSyllables[uniform_index(rng, kSyllables.size())];
  return w;
}

// Language-flavoured fragments that exercise preprocessing.
constexpr std::array<std::string_view, 4> kJavaBits = {"obj^getValue()", "{@code toString}", "getUserName",
                                                       "since 3.2.1"};
constexpr std::array<std::string_view, 4> kPythonBits = {":param key:", "parseHTTPHeader", "self^items",
                                                         ":rtype: dict"};
constexpr std::array<std::string_view, 4> kPharoBits = {"at:put:", "^ self size", "#printOn:", "aStream nextPutAll:"};

std::span<const std::string_view> bits_for(corpus::Language lang) {
  switch (lang) {
    case corpus::Language::java:
      return kJavaBits;
    case corpus::Language::python:
      return kPythonBits;
    case corpus::Language::pharo:
      return kPharoBits;
  }
  return {};
}

std::string tag(corpus::Language lang) { return std::string(corpus::to_string(lang).substr(0, 2)); }

}  // namespace

std::string keyword(corpus::Language language, std::string_view category) {
  return "kw" + tag(language) + std::string(category);
}

corpus::Dataset make_corpus(const CorpusSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::vector<corpus::SentenceRecord> records;

  for (const auto& [lang, n] : spec.sentences) {
    const auto tax = corpus::taxonomy(lang);
    const auto bits = bits_for(lang);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    deterministic_shuffle(std::span<std::size_t>(order), rng);
    const auto n_train = static_cast<std::size_t>(spec.train_fraction * static_cast<double>(n));
    const auto n_valid = static_cast<std::size_t>(spec.valid_fraction * static_cast<double>(n));
    std::vector<corpus::Split> split_of(n, corpus::Split::test);
    for (std::size_t k = 0; k < n; ++k)
      split_of[order[k]] = k < n_train ? corpus::Split::train : k < n_train + n_valid ? corpus::Split::valid : corpus::Split::test;

    for (std::size_t i = 0; i < n; ++i) {
      corpus::SentenceRecord r;
      char id[32];
      std::snprintf(id, sizeof id, "%s%04zu", tag(lang).c_str(), i);
      r.id = id;
      r.language = lang;
      r.split = split_of[i];

      // Round-robin primary label keeps every category populated in every split.
      std::vector<std::size_t> cats;
      if (uniform01(rng) >= spec.empty_rate) {
        cats.push_back((i + uniform_index(rng, 2)) % tax.size());
        if (uniform01(rng) < spec.multi_label_rate) {
          std::size_t second = uniform_index(rng, tax.size() - 1);
          if (second >= cats[0]) ++second;
          cats.push_back(second);
        }
      }

      std::vector<std::string> words;
      const std::size_t filler = 3 + uniform_index(rng, 4);
      for (std::size_t w = 0; w < filler; ++w) words.push_back(filler_word(rng));
      for (auto c : cats) {
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, words.size() + 1)),
                     keyword(lang, tax[c]));
        r.labels.emplace_back(tax[c]);
      }
      if (uniform01(rng) < 0.1) words.emplace_back(bits[uniform_index(rng, bits.size())]);

      for (std::size_t w = 0; w < words.size(); ++w) {
        if (w) r.text += ' ';
        r.text += words[w];
      }
      r.text += '.';
      if (uniform01(rng) < 0.25) r.context = "void example() {}";
      records.push_back(std::move(r));
    }
  }
  return corpus::Dataset(std::move(records));
}

}  // namespace comment_mme::synthetic
