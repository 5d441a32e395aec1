#include "comment_mme/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "comment_mme/util.hpp"
#include "json.hpp"

namespace comment_mme::corpus {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 7> kJava = {"summary", "ownership", "expand", "usage",
                                                   "pointer", "deprecation", "rational"};
constexpr std::array<std::string_view, 5> kPython = {"usage", "parameters", "developmentnotes", "expand", "summary"};
constexpr std::array<std::string_view, 6> kPharo = {"keyimplementationpoints", "example", "responsibilities",
                                                    "intent", "keymessages", "collaborators"};

struct DisplayName {
  std::string_view id;
  std::string_view display;
};

constexpr std::array<DisplayName, 15> kDisplayNames = {{
    {"summary", "Summary"},
    {"ownership", "Ownership"},
    {"expand", "Expand"},
    {"usage", "Usage"},
    {"pointer", "Pointer"},
    {"deprecation", "Deprecation"},
    {"rational", "Rational"},
    {"parameters", "Parameters"},
    {"developmentnotes", "DevelopmentNotes"},
    {"keyimplementationpoints", "Key Impl. Points"},
    {"example", "Example"},
    {"responsibilities", "Responsibilities"},
    {"intent", "Intent"},
    {"keymessages", "Key Messages"},
    {"collaborators", "Collaborators"},
}};

SentenceRecord record_from_json(const json& j, std::size_t line) {
  auto require_string = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw ParseError(line, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
  };

  SentenceRecord r;
  r.id = require_string("id");
  if (r.id.empty()) throw ParseError(line, "empty id");

  auto lang = parse_language(require_string("lang"));
  if (!lang) throw ParseError(line, "unknown language '" + j["lang"].get<std::string>() + "'");
  r.language = *lang;

  r.text = require_string("text");

  if (auto it = j.find("context"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(line, "field 'context' must be a string or null");
    r.context = it->get<std::string>();
  }

  auto split = parse_split(require_string("split"));
  if (!split) throw ParseError(line, "unknown split '" + j["split"].get<std::string>() + "'");
  r.split = *split;

  auto labels = j.find("labels");
  if (labels == j.end() || !labels->is_array()) throw ParseError(line, "missing or non-array field 'labels'");
  for (const auto& l : *labels) {
    if (!l.is_string()) throw ParseError(line, "labels must be strings");
    r.labels.push_back(l.get<std::string>());
  }
  return r;
}

}  // namespace

std::string_view to_string(Language language) {
  switch (language) {
    case Language::java:
      return "java";
    case Language::python:
      return "python";
    case Language::pharo:
      return "pharo";
  }
  return "?";
}

std::optional<Language> parse_language(std::string_view tag) {
  for (auto l : kLanguages)
    if (to_string(l) == tag) return l;
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::valid:
      return "valid";
    case Split::test:
      return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view tag) {
  for (auto s : {Split::train, Split::valid, Split::test})
    if (to_string(s) == tag) return s;
  return std::nullopt;
}

std::span<const std::string_view> taxonomy(Language language) {
  switch (language) {
    case Language::java:
      return kJava;
    case Language::python:
      return kPython;
    case Language::pharo:
      return kPharo;
  }
  return {};
}

std::optional<std::size_t> category_index(Language language, std::string_view category) {
  auto tax = taxonomy(language);
  auto it = std::find(tax.begin(), tax.end(), category);
  if (it == tax.end()) return std::nullopt;
  return static_cast<std::size_t>(it - tax.begin());
}

std::string_view display_name(std::string_view category) {
  for (const auto& d : kDisplayNames)
    if (d.id == category) return d.display;
  return category;
}

std::string category_key(Language language, std::string_view category) {
  std::string key(to_string(language));
  key += '/';
  key += category;
  return key;
}

Dataset::Dataset(std::vector<SentenceRecord> records) : records_(std::move(records)) {
  for (auto l : kLanguages) counts_[l] = 0;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!by_id_.emplace(r.id, i).second) throw DuplicateId(r.id);
    std::vector<std::string_view> seen;
    for (const auto& label : r.labels) {
      if (!category_index(r.language, label)) throw UnknownCategory(r.id, label);
      if (std::find(seen.begin(), seen.end(), label) != seen.end())
        throw DataError("record " + r.id + ": label '" + label + "' listed twice");
      seen.push_back(label);
    }
    ++counts_[r.language];
  }
}

std::size_t Dataset::count(Language language) const {
  auto it = counts_.find(language);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<Language> Dataset::languages() const {
  std::vector<Language> out;
  for (auto l : kLanguages)
    if (count(l) > 0) out.push_back(l);
  return out;
}

std::vector<const SentenceRecord*> Dataset::select(Language language, Split split) const {
  std::vector<const SentenceRecord*> out;
  for (const auto& r : records_)
    if (r.language == language && r.split == split) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  return out;
}

std::vector<const SentenceRecord*> Dataset::require(Language language, Split split) const {
  auto out = select(language, split);
  if (out.empty()) throw EmptySelection(language, split);
  return out;
}

const SentenceRecord* Dataset::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

Dataset parse_dataset(std::istream& in) {
  std::vector<SentenceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_skippable_line(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");
    records.push_back(record_from_json(j, line_no));
  }
  return Dataset(std::move(records));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return parse_dataset(in);
}

std::string record_to_json_line(const SentenceRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["lang"] = std::string(to_string(r.language));
  j["text"] = r.text;
  j["context"] = r.context ? nlohmann::ordered_json(*r.context) : nlohmann::ordered_json(nullptr);
  j["split"] = std::string(to_string(r.split));
  j["labels"] = r.labels;
  return j.dump();
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& r : dataset.records()) out << record_to_json_line(r) << '\n';
}

LabelMatrix label_matrix(std::span<const SentenceRecord* const> records, Language language) {
  const auto tax = taxonomy(language);
  LabelMatrix m;
  m.language = language;
  m.values = BinaryMatrix(records.size(), tax.size(), 0);
  m.ids.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = *records[i];
    if (r.language != language) throw DataError("record " + r.id + " is not a " + std::string(to_string(language)) + " record");
    m.ids.push_back(r.id);
    for (const auto& label : r.labels) {
      auto c = category_index(language, label);
      if (!c) throw UnknownCategory(r.id, label);
      m.values(i, *c) = 1;
    }
  }
  return m;
}

LabelMatrix label_matrix(const Dataset& dataset, Language language, Split split) {
  auto records = dataset.require(language, split);
  return label_matrix(records, language);
}

}  // namespace comment_mme::corpus
