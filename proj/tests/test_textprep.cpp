#include <cctype>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "comment_mme/textprep.hpp"
#include "comment_mme/util.hpp"
#include "doctest.h"

using namespace comment_mme;
using namespace comment_mme::textprep;

namespace {

// Caret rule written from its definition: flanked by word characters and not
// the first non-blank character of the line.
std::string caret_oracle(const std::string& s) {
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  std::string out = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '^') continue;
    if (i == 0 || i + 1 >= s.size() || !word(s[i - 1]) || !word(s[i + 1])) continue;
    std::size_t line_start = s.rfind('\n', i - 1);
    line_start = line_start == std::string::npos ? 0 : line_start + 1;
    const bool first = s.find_first_not_of(" \t", line_start) == i;
    if (!first) out[i] = '.';
  }
  return out;
}

std::string random_text(std::mt19937_64& rng, std::size_t len) {
  static const std::string alphabet = "abcXYZ019 ^:.#[]|@{}<>/=_-\n\tMSK";
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[uniform_index(rng, alphabet.size())];
  return s;
}

std::string pharo_text(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"at:put:", "self", "^", "aStream", "printOn:", "x", ":=", "#foo",
                                                 "[nil]",   "|",    "3.2.1", "ifTrue:ifFalse:", "getValue", "at:",
                                                 "the",     "a^b",  "MSK3"};
  std::string s;
  const auto n = 1 + uniform_index(rng, 10);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += uniform_index(rng, 8) == 0 ? "\n" : " ";
    s += words[uniform_index(rng, words.size())];
  }
  return s;
}

corpus::SentenceRecord record(corpus::Language lang, const std::string& text) {
  corpus::SentenceRecord r;
  r.id = "r1";
  r.language = lang;
  r.text = text;
  r.labels = {};
  return r;
}

}  // namespace

TEST_CASE("fix_carets") {
  CHECK(fix_carets("obj^toString()", Language::java) == "obj.toString()");
  CHECK(fix_carets("a ^ b^", Language::python) == "a . b.");
  CHECK(fix_carets("^ self size", Language::pharo) == "^ self size");
  CHECK(fix_carets("see class^method docs", Language::pharo) == "see class.method docs");
  CHECK(fix_carets("^self", Language::pharo) == "^self");
  CHECK(fix_carets("x\n  a^b", Language::pharo) == "x\n  a.b");
  CHECK(fix_carets("", Language::pharo).empty());
}

TEST_CASE("pharo caret rule agrees with the oracle on random text") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 2000; ++i) {
    const auto s = random_text(rng, uniform_index(rng, 30));
    CHECK(fix_carets(s, Language::pharo) == caret_oracle(s));
  }
}

TEST_CASE("mask_protected") {
  auto m = mask_protected("use at:put: here", Language::pharo);
  CHECK(m.text == "use MSK0 here");
  REQUIRE(m.table.size() == 1);
  CHECK(m.table[0] == MaskEntry{"MSK0", "at:put:"});

  auto v = mask_protected("since 3.2.1 release", Language::python);
  CHECK(v.text == "since MSK0 release");
  CHECK(v.table[0].original == "3.2.1");

  auto none = mask_protected("nothing to see", Language::java);
  CHECK(none.text == "nothing to see");
  CHECK(none.table.empty());

  auto tags = mask_protected("@return the {@link Foo} or <code>x</code>", Language::java);
  CHECK(tags.text == "MSK0 the MSK1 or MSK2");

  auto sphinx = mask_protected(":param x: value :return: y :rtype: int", Language::python);
  CHECK(sphinx.table.size() == 3);
  CHECK(sphinx.table[0].original == ":param x:");

  auto ops = mask_protected("x := #sym | [a b] |", Language::pharo);
  CHECK(ops.text == "x MSK0 MSK1 MSK2 MSK3 MSK4");
}

TEST_CASE("unmask") {
  CHECK(unmask("use MSK0 here", {{"MSK0", "at:put:"}}) == "use at:put: here");
  CHECK(unmask("plain", {}) == "plain");
  CHECK(unmask("MSK0 MSK1", {{"MSK0", "a"}, {"MSK1", "b"}}) == "a b");
  CHECK(unmask("MSK1 MSK0", {{"MSK0", "a"}, {"MSK1", "b"}}) == "b a");
  CHECK_THROWS_AS(unmask("nothing", {{"MSK0", "a"}}), MissingPlaceholder);
  CHECK_THROWS_AS(unmask("MSK0 MSK0", {{"MSK0", "a"}}), MissingPlaceholder);
}

TEST_CASE("masking round-trips on random input") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 3000; ++i) {
    const auto s = random_text(rng, uniform_index(rng, 40));
    for (auto lang : corpus::kLanguages) {
      auto m = mask_protected(s, lang);
      CHECK(unmask(m.text, m.table) == s);
      for (std::size_t k = 0; k < m.table.size(); ++k) CHECK(m.table[k].placeholder == "MSK" + std::to_string(k));
    }
  }
}

TEST_CASE("split_cases") {
  CHECK(split_cases("getUserName") == "get User Name");
  CHECK(split_cases("HTTPServer") == "HTTP Server");
  CHECK(split_cases("plain words") == "plain words");
  CHECK(split_cases("parseXMLFile") == "parse XML File");
  CHECK(split_cases("HTML") == "HTML");
  CHECK(split_cases("getMSK0") == "getMSK0");
  CHECK(split_cases(split_cases("getHTTPServerName")) == split_cases("getHTTPServerName"));
}

TEST_CASE("segment_pharo") {
  CHECK(segment_pharo("Intent:\nI represent a point.") == std::vector<std::string>{"Intent:", "I represent a point."});
  CHECK(segment_pharo("Use at:put: to store.") == std::vector<std::string>{"Use at:put: to store."});
  CHECK(segment_pharo("").empty());
  CHECK(segment_pharo("\n\n  \n").empty());
  CHECK(segment_pharo("One thing. Two things.") == std::vector<std::string>{"One thing.", "Two things."});
  CHECK(segment_pharo("Version 3.2.1 is out.") == std::vector<std::string>{"Version 3.2.1 is out."});
  CHECK(is_pharo_header("Key Messages:"));
  CHECK(is_pharo_header("Public API and Key Messages:"));
  CHECK_FALSE(is_pharo_header("This is a rather long prose line:"));
  CHECK_FALSE(is_pharo_header("at:put:"));
  CHECK_FALSE(is_pharo_header("Intent"));
}

TEST_CASE("segment_pharo keeps every non-blank character and no empty segment") {
  std::mt19937_64 rng(9);
  auto squash = [](const std::string& s) {
    std::string out;
    for (char c : s)
      if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
  };
  for (int i = 0; i < 1000; ++i) {
    std::string s = pharo_text(rng);
    if (uniform_index(rng, 3) == 0) s = "Intent:\n" + s + ". Tail here.";
    const auto parts = segment_pharo(s);
    std::string joined;
    for (const auto& p : parts) {
      CHECK_FALSE(trim(p).empty());
      joined += p;
    }
    CHECK(squash(joined) == squash(s));
  }
}

TEST_CASE("preprocess composes the rules") {
  CHECK(preprocess(record(Language::java, "obj^getId()"), PrepConfig::defaults(Language::java)).text ==
        "obj.get Id()");

  auto r = record(Language::java, "obj^getId()");
  r.context = "int getId();";
  r.labels = {"summary"};
  auto out = preprocess(r, PrepConfig{Language::java, false, false, false});
  CHECK(out == r);

  auto ph = preprocess(record(Language::pharo, "^ answer at:put: stored"), PrepConfig::defaults(Language::pharo));
  CHECK(ph.text == "^ answer at:put: stored");

  CHECK_THROWS_AS(preprocess(record(Language::pharo, "x"), PrepConfig::defaults(Language::java)), ConfigError);
}

TEST_CASE("segmentation is a pharo-only option") {
  CHECK_THROWS_AS((PrepConfig{Language::java, true, true, true}.validate()), ConfigError);
  CHECK_NOTHROW((PrepConfig{Language::pharo, true, true, true}.validate()));
}

TEST_CASE("selector safety and caret totality on random input") {
  std::mt19937_64 rng(13);
  const std::regex selector(R"(([a-z][A-Za-z0-9_]*:)+)");
  for (int i = 0; i < 1000; ++i) {
    const auto s = pharo_text(rng);
    const auto out = preprocess(record(Language::pharo, s), PrepConfig::defaults(Language::pharo)).text;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), selector); it != std::sregex_iterator(); ++it)
      CHECK(out.find(it->str()) != std::string::npos);
    for (auto lang : {Language::java, Language::python}) {
      const auto t = random_text(rng, uniform_index(rng, 40));
      CHECK(preprocess(record(lang, t), PrepConfig::defaults(lang)).text.find('^') == std::string::npos);
    }
  }
}

TEST_CASE("preprocess is idempotent on random input") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    for (auto lang : corpus::kLanguages) {
      const auto s = lang == Language::pharo ? pharo_text(rng) : random_text(rng, uniform_index(rng, 30));
      const auto cfg = PrepConfig::defaults(lang);
      const auto once = preprocess(record(lang, s), cfg);
      CHECK(preprocess(once, cfg).text == once.text);
    }
  }
}

TEST_CASE("preprocess_dataset splits segmented pharo records") {
  std::vector<corpus::SentenceRecord> records;
  auto p = record(corpus::Language::pharo, "Intent:\nI represent aPoint.");
  p.id = "p1";
  p.labels = {"intent"};
  auto j = record(corpus::Language::java, "getName");
  j.id = "j1";
  records.push_back(p);
  records.push_back(j);
  corpus::Dataset d(records);

  auto plain = preprocess_dataset(d, {});
  CHECK(plain.size() == 2);
  CHECK(plain.find("j1")->text == "get Name");

  auto seg = preprocess_dataset(d, {PrepConfig{Language::pharo, true, true, true}});
  REQUIRE(seg.size() == 3);
  CHECK(seg.find("p1#0")->text == "Intent:");
  CHECK(seg.find("p1#1")->text == "I represent a Point.");
  CHECK(seg.find("p1#1")->labels == std::vector<std::string>{"intent"});
  CHECK(seg.find("p1") == nullptr);
}
