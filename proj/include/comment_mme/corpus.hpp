#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comment_mme/error.hpp"
#include "comment_mme/matrix.hpp"

namespace comment_mme::corpus {

enum class Language { java, python, pharo };

inline constexpr std::array<Language, 3> kLanguages = {Language::java, Language::python, Language::pharo};

std::string_view to_string(Language language);
std::optional<Language> parse_language(std::string_view tag);

enum class Split { train, valid, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view tag);

// Canonical, ordered category identifiers for a language. The order is the
// column order of every label, logit and probability matrix.
std::span<const std::string_view> taxonomy(Language language);

// Column of `category` in the language's taxonomy, if it belongs to it.
std::optional<std::size_t> category_index(Language language, std::string_view category);

// Human-readable category name ("keyimplementationpoints" -> "Key Impl. Points").
std::string_view display_name(std::string_view category);

// "<lang>/<category>", the key used by every JSON artifact.
std::string category_key(Language language, std::string_view category);

struct SentenceRecord {
  std::string id;
  Language language = Language::java;
  std::string text;
  std::optional<std::string> context;
  Split split = Split::train;
  std::vector<std::string> labels;

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnknownCategory : public DataError {
 public:
  UnknownCategory(const std::string& id, const std::string& label)
      : DataError("record " + id + ": unknown category '" + label + "'"), id_(id), label_(label) {}
  const std::string& id() const noexcept { return id_; }
  const std::string& label() const noexcept { return label_; }

 private:
  std::string id_;
  std::string label_;
};

class DuplicateId : public DataError {
 public:
  explicit DuplicateId(const std::string& id) : DataError("duplicate record id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class EmptySelection : public DataError {
 public:
  EmptySelection(Language language, Split split)
      : DataError("no " + std::string(to_string(language)) + " records in split " + std::string(to_string(split))) {}
};

// Immutable, validated collection of records.
class Dataset {
 public:
  Dataset() = default;

  // Validates labels against the taxonomies and id uniqueness.
  explicit Dataset(std::vector<SentenceRecord> records);

  std::span<const SentenceRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t count(Language language) const;
  const std::map<Language, std::size_t>& counts() const noexcept { return counts_; }

  // Languages with at least one record, in canonical order.
  std::vector<Language> languages() const;

  // Records of one language and split, ascending by id. Empty result is allowed.
  std::vector<const SentenceRecord*> select(Language language, Split split) const;

  // As `select`, but an empty result raises EmptySelection.
  std::vector<const SentenceRecord*> require(Language language, Split split) const;

  const SentenceRecord* find(std::string_view id) const;

 private:
  std::vector<SentenceRecord> records_;
  std::map<Language, std::size_t> counts_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

Dataset parse_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

// One JSONL line per record, in dataset order.
void write_dataset(std::ostream& out, const Dataset& dataset);
std::string record_to_json_line(const SentenceRecord& record);

struct LabelMatrix {
  Language language = Language::java;
  std::vector<std::string> ids;  // ascending
  BinaryMatrix values;           // [ids.size() x taxonomy(language).size()]
};

LabelMatrix label_matrix(const Dataset& dataset, Language language, Split split);

// Label rows for an explicit, already ordered selection of records.
LabelMatrix label_matrix(std::span<const SentenceRecord* const> records, Language language);

}  // namespace comment_mme::corpus
