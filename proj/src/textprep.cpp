#include "comment_mme/textprep.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>

#include "comment_mme/util.hpp"

namespace comment_mme::textprep {

namespace {

// ASCII-only classification: bytes of multi-byte UTF-8 sequences are never
// letters, digits or word characters.
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_alpha(char c) { return is_lower(c) || is_upper(c); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_word(char c) { return is_alpha(c) || is_digit(c) || c == '_'; }
bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

char at(std::string_view s, std::size_t i) { return i < s.size() ? s[i] : '\0'; }
char before(std::string_view s, std::size_t i) { return i > 0 ? s[i - 1] : '\0'; }

std::size_t word_end(std::string_view s, std::size_t i) {
  while (i < s.size() && is_word(s[i])) ++i;
  return i;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  return true;
}

std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i)
    if (iequals(hay.substr(i, needle.size()), needle)) return i;
  return std::string_view::npos;
}

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& table, std::string_view word) {
  return std::find(table.begin(), table.end(), word) != table.end();
}

// Shipped protected-tag tables. Tags outside these tables pass through.
constexpr std::array<std::string_view, 24> kJavadocTags = {
    "param",   "return",    "returns",  "see",         "deprecated", "throws",  "exception", "since",
    "author",  "version",   "serial",   "serialData",  "serialField", "inheritDoc", "link",   "linkplain",
    "code",    "literal",   "value",    "docRoot",     "hidden",     "apiNote", "implSpec",  "implNote"};

// HTML elements retained in Java comments. Content elements are masked with
// their body; the rest are masked tag by tag.
constexpr std::array<std::string_view, 2> kHtmlContentElements = {"code", "pre"};
constexpr std::array<std::string_view, 1> kHtmlTagElements = {"p"};

constexpr std::array<std::string_view, 22> kSphinxFields = {
    "param",  "parameter", "arg",   "argument", "key",     "keyword", "type",    "raises",
    "raise",  "except",    "exception", "var",  "ivar",    "cvar",    "vartype", "return",
    "returns", "rtype",    "yield", "yields",   "ytype",   "meta"};

std::size_t match_mask_literal(std::string_view s, std::size_t i) {
  if (s.substr(i, 3) != "MSK" || !is_digit(at(s, i + 3))) return 0;
  std::size_t e = i + 3;
  while (e < s.size() && is_digit(s[e])) ++e;
  return e - i;
}

std::size_t match_version(std::string_view s, std::size_t i) {
  if (!is_digit(s[i])) return 0;
  char prev = before(s, i);
  if (is_digit(prev) || prev == '.') return 0;
  std::size_t e = i;
  while (e < s.size() && is_digit(s[e])) ++e;
  int groups = 0;
  while (at(s, e) == '.' && is_digit(at(s, e + 1))) {
    e += 1;
    while (e < s.size() && is_digit(s[e])) ++e;
    ++groups;
  }
  return groups > 0 ? e - i : 0;
}

std::size_t match_javadoc_block_tag(std::string_view s, std::size_t i) {
  if (s[i] != '@' || is_word(before(s, i))) return 0;
  std::size_t e = word_end(s, i + 1);
  if (e == i + 1 || !contains(kJavadocTags, s.substr(i + 1, e - i - 1))) return 0;
  return e - i;
}

std::size_t match_javadoc_inline_tag(std::string_view s, std::size_t i) {
  if (s[i] != '{' || at(s, i + 1) != '@') return 0;
  std::size_t e = word_end(s, i + 2);
  if (e == i + 2 || !contains(kJavadocTags, s.substr(i + 2, e - i - 2))) return 0;
  char next = at(s, e);
  if (next != '}' && !is_blank(next) && next != '\n') return 0;
  int depth = 1;
  for (std::size_t k = i + 1; k < s.size(); ++k) {
    if (s[k] == '{') ++depth;
    if (s[k] == '}' && --depth == 0) return k + 1 - i;
  }
  return 0;
}

std::size_t match_html(std::string_view s, std::size_t i) {
  if (s[i] != '<') return 0;
  std::size_t k = i + 1;
  bool closing = false;
  if (at(s, k) == '/') {
    closing = true;
    ++k;
  }
  std::size_t name_end = k;
  while (name_end < s.size() && is_alpha(s[name_end])) ++name_end;
  if (name_end == k) return 0;
  std::string name(s.substr(k, name_end - k));
  std::transform(name.begin(), name.end(), name.begin(), [](char c) { return static_cast<char>(std::tolower(c)); });
  char next = at(s, name_end);
  if (next != '>' && next != '/' && !is_blank(next)) return 0;
  std::size_t close = s.find('>', name_end);
  if (close == std::string_view::npos) return 0;
  std::size_t tag_end = close + 1;
  bool self_closing = s[close - 1] == '/';

  if (contains(kHtmlContentElements, name)) {
    if (!closing && !self_closing) {
      std::size_t end_tag = ifind(s, "</" + name + ">", tag_end);
      if (end_tag != std::string_view::npos) return end_tag + name.size() + 3 - i;
    }
    return tag_end - i;
  }
  if (contains(kHtmlTagElements, name)) return tag_end - i;
  return 0;
}

std::size_t match_sphinx_field(std::string_view s, std::size_t i) {
  if (s[i] != ':') return 0;
  char prev = before(s, i);
  if (is_word(prev) || prev == ':') return 0;
  std::size_t e = i + 1;
  while (e < s.size() && is_alpha(s[e])) ++e;
  if (!contains(kSphinxFields, s.substr(i + 1, e - i - 1))) return 0;
  if (at(s, e) == ':') return e + 1 - i;
  // Up to two argument words (":param x:", ":param int x:").
  constexpr std::size_t kMaxFieldLength = 80;
  for (int words = 0; words < 2; ++words) {
    if (!is_blank(at(s, e))) return 0;
    while (is_blank(at(s, e))) ++e;
    std::size_t w = e;
    while (w < s.size() && s[w] != ':' && s[w] != '\n' && !is_blank(s[w])) ++w;
    if (w == e) return 0;
    e = w;
    if (at(s, e) == ':') return (e + 1 - i) <= kMaxFieldLength ? e + 1 - i : 0;
  }
  return 0;
}

std::size_t match_pharo_assignment(std::string_view s, std::size_t i) {
  return s.substr(i, 2) == ":=" ? 2 : 0;
}

std::size_t match_pharo_symbol(std::string_view s, std::size_t i) {
  if (s[i] != '#') return 0;
  std::size_t e = i + 1;
  while (e < s.size() && (is_word(s[e]) || s[e] == ':')) ++e;
  return e - i;
}

std::size_t match_pharo_block(std::string_view s, std::size_t i) {
  if (s[i] != '[') return 0;
  for (std::size_t k = i + 1; k < s.size(); ++k) {
    if (s[k] == '[' || s[k] == '\n') return 0;
    if (s[k] == ']') return k + 1 - i;
  }
  return 0;
}

std::size_t match_pharo_bar(std::string_view s, std::size_t i) { return s[i] == '|' ? 1 : 0; }

// One or more identifier+':' runs with no blank in between ("at:put:"),
// starting with a lowercase letter. A run followed by '=' (assignment) or a
// digit is not a selector.
std::size_t match_pharo_selector(std::string_view s, std::size_t i) {
  if (!is_lower(s[i])) return 0;
  char prev = before(s, i);
  if (is_word(prev) || prev == ':') return 0;
  std::size_t e = i;
  std::size_t last = 0;
  while (e < s.size() && (is_alpha(s[e]) || s[e] == '_')) {
    std::size_t w = word_end(s, e);
    if (at(s, w) != ':') break;
    e = w + 1;
    last = e;
  }
  if (last == 0) return 0;
  char next = at(s, last);
  if (next == '=' || is_digit(next) || next == ':') return 0;
  return last - i;
}

using Matcher = std::size_t (*)(std::string_view, std::size_t);

std::vector<Matcher> matchers_for(Language language) {
  std::vector<Matcher> m = {match_mask_literal, match_version};
  switch (language) {
    case Language::java:
      m.insert(m.end(), {match_javadoc_inline_tag, match_javadoc_block_tag, match_html});
      break;
    case Language::python:
      m.push_back(match_sphinx_field);
      break;
    case Language::pharo:
      m.insert(m.end(), {match_pharo_assignment, match_pharo_symbol, match_pharo_block, match_pharo_selector,
                         match_pharo_bar});
      break;
  }
  return m;
}

bool placeholder_at(std::string_view s, std::size_t i) {
  return s.substr(i, 3) == "MSK" && is_digit(at(s, i + 3));
}

}  // namespace

void PrepConfig::validate() const {
  if (enable_segmentation && language != Language::pharo)
    throw ConfigError("segmentation is only defined for pharo, not " + std::string(corpus::to_string(language)));
}

std::string fix_carets(std::string_view text, Language language) {
  std::string out(text);
  if (language != Language::pharo) {
    std::replace(out.begin(), out.end(), '^', '.');
    return out;
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '^') continue;
    if (!is_word(before(text, i)) || !is_word(at(text, i + 1))) continue;
    // First non-blank character of its line is the return position.
    std::size_t line_start = text.rfind('\n', i);
    line_start = line_start == std::string_view::npos ? 0 : line_start + 1;
    bool first_on_line = true;
    for (std::size_t k = line_start; k < i; ++k)
      if (!is_blank(text[k])) first_on_line = false;
    if (first_on_line) continue;
    out[i] = '.';
  }
  return out;
}

MaskedText mask_protected(std::string_view text, Language language) {
  const auto matchers = matchers_for(language);
  MaskedText result;
  result.text.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = 0;
    for (auto m : matchers) {
      len = m(text, i);
      if (len > 0) break;
    }
    if (len == 0) {
      result.text.push_back(text[i]);
      ++i;
      continue;
    }
    // A placeholder must never be followed by a digit ("MSK0" + "5" would
    // read back as "MSK05"), so trailing digits join the protected span.
    std::size_t end = i + len;
    while (end < text.size() && is_digit(text[end])) ++end;
    std::string placeholder = "MSK" + std::to_string(result.table.size());
    result.text += placeholder;
    result.table.push_back({std::move(placeholder), std::string(text.substr(i, end - i))});
    i = end;
  }
  return result;
}

namespace {

// Substitutes every placeholder of `table` found in `text`; counts uses per entry.
std::string restore(std::string_view text, const MaskTable& table, std::vector<int>& uses) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t k = 0; k < table.size(); ++k) index.emplace(table[k].placeholder, k);
  uses.assign(table.size(), 0);

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (placeholder_at(text, i)) {
      std::size_t e = i + 3;
      while (e < text.size() && is_digit(text[e])) ++e;
      auto it = index.find(text.substr(i, e - i));
      if (it != index.end()) {
        out += table[it->second].original;
        ++uses[it->second];
        i = e;
        continue;
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

}  // namespace

std::string unmask(std::string_view text, const MaskTable& table) {
  if (table.empty()) return std::string(text);
  std::vector<int> uses;
  std::string out = restore(text, table, uses);
  for (std::size_t k = 0; k < table.size(); ++k)
    if (uses[k] != 1) throw MissingPlaceholder(table[k].placeholder);
  return out;
}

std::string split_cases(std::string_view text) {
  std::string out;
  out.reserve(text.size() + text.size() / 4);
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (i > 0 && is_upper(c) && !placeholder_at(text, i)) {
      char prev = text[i - 1];
      bool lower_to_upper = is_lower(prev);
      bool acronym_to_word = is_upper(prev) && is_lower(at(text, i + 1));
      if (lower_to_upper || acronym_to_word) out.push_back(' ');
    }
    out.push_back(c);
  }
  return out;
}

bool is_pharo_header(std::string_view line) {
  line = trim(line);
  if (line.size() < 2 || line.back() != ':') return false;
  line.remove_suffix(1);
  int words = 0;
  std::size_t i = 0;
  while (i < line.size()) {
    if (!is_alpha(line[i])) return false;
    while (i < line.size() && is_alpha(line[i])) ++i;
    ++words;
    if (i == line.size()) break;
    if (!is_blank(line[i])) return false;
    while (i < line.size() && is_blank(line[i])) ++i;
  }
  return words >= 1 && words <= 5;
}

std::vector<std::string> segment_pharo(std::string_view comment) {
  std::vector<std::string> segments;
  auto emit = [&](std::string_view piece) {
    piece = trim(piece);
    if (!piece.empty()) segments.emplace_back(piece);
  };

  for (const auto& raw_line : split_lines(comment)) {
    std::string_view line = trim(raw_line);
    if (line.empty()) continue;
    if (is_pharo_header(line)) {
      emit(line);
      continue;
    }
    // Selectors and version numbers are masked, so a '.' inside them is never
    // taken for a sentence end.
    auto masked = mask_protected(line, Language::pharo);
    std::string_view m = masked.text;
    std::vector<int> uses;
    std::size_t start = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      bool sentence_end = m[i] == '.' && (i + 1 == m.size() || is_blank(m[i + 1]));
      if (!sentence_end) continue;
      emit(restore(m.substr(start, i + 1 - start), masked.table, uses));
      start = i + 1;
    }
    if (start < m.size()) emit(restore(m.substr(start), masked.table, uses));
  }
  return segments;
}

corpus::SentenceRecord preprocess(const corpus::SentenceRecord& record, const PrepConfig& config) {
  config.validate();
  if (config.language != record.language)
    throw ConfigError("prep config for " + std::string(corpus::to_string(config.language)) + " applied to " +
                      std::string(corpus::to_string(record.language)) + " record " + record.id);

  auto masked = mask_protected(record.text, record.language);
  std::string text = std::move(masked.text);
  if (config.enable_caret_fix) {
    text = fix_carets(text, record.language);
    // Java/Python carets are corruption wherever they occur, including inside
    // retained tags; Pharo spans keep theirs (return operator).
    if (record.language != Language::pharo)
      for (auto& entry : masked.table) entry.original = fix_carets(entry.original, record.language);
  }
  if (config.enable_case_split) text = split_cases(text);

  corpus::SentenceRecord out = record;
  out.text = unmask(text, masked.table);
  return out;
}

corpus::Dataset preprocess_dataset(const corpus::Dataset& dataset, const std::vector<PrepConfig>& configs) {
  auto config_for = [&](Language language) {
    for (const auto& c : configs)
      if (c.language == language) return c;
    return PrepConfig::defaults(language);
  };
  for (const auto& c : configs) c.validate();

  std::vector<corpus::SentenceRecord> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset.records()) {
    PrepConfig config = config_for(r.language);
    if (config.enable_segmentation) {
      auto segments = segment_pharo(r.text);
      if (segments.size() > 1) {
        for (std::size_t k = 0; k < segments.size(); ++k) {
          corpus::SentenceRecord piece = r;
          piece.id = r.id + "#" + std::to_string(k);
          piece.text = segments[k];
          out.push_back(preprocess(piece, config));
        }
        continue;
      }
    }
    out.push_back(preprocess(r, config));
  }
  return corpus::Dataset(std::move(out));
}

}  // namespace comment_mme::textprep
