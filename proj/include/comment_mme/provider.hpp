#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comment_mme/corpus.hpp"
#include "comment_mme/error.hpp"
#include "comment_mme/matrix.hpp"

namespace comment_mme::provider {

using corpus::Language;

enum class Source { logit_file, builtin_baseline };

struct ProviderDescriptor {
  std::string name;
  double cost_gflops_per_sample = 0.0;  // declared, not measured
  Source source = Source::logit_file;
  std::filesystem::path logits;  // logit_file providers only

  void validate() const;
};

// Raw pre-sigmoid scores of one provider for one language. Rows are sorted
// ascending by id; columns follow the taxonomy.
struct LogitMatrix {
  std::string provider;
  Language language = Language::java;
  std::vector<std::string> ids;
  RealMatrix values;

  // Row of `id`, if present (binary search over the sorted ids).
  std::optional<std::size_t> row_of(const std::string& id) const;

  // Sub-matrix with exactly `ids` (in that order); missing ids raise ProviderError.
  LogitMatrix select(const std::vector<std::string>& wanted) const;
};

class SchemaError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class MissingCategory : public ProviderError {
 public:
  MissingCategory(const std::string& id, const std::string& category)
      : ProviderError("sample " + id + ": missing score for " + category) {}
};

class NonFiniteValue : public ProviderError {
 public:
  NonFiniteValue(const std::string& id, const std::string& category)
      : ProviderError("sample " + id + ": non-finite score for " + category) {}
};

// Strict single-language load: every key must belong to `language`'s taxonomy.
LogitMatrix parse_logits(std::istream& in, Language language, const std::string& provider_name = {});
LogitMatrix load_logits(const std::filesystem::path& path, Language language, const std::string& provider_name = {});

// Loads a file whose lines may belong to different languages; each line's
// language is taken from its key prefix and must be uniform within the line.
std::map<Language, LogitMatrix> parse_logits_any(std::istream& in, const std::string& provider_name = {});
std::map<Language, LogitMatrix> load_logits_any(const std::filesystem::path& path,
                                                const std::string& provider_name = {});

// One JSONL line per row, shortest round-trip decimal scores.
void write_logits(std::ostream& out, const LogitMatrix& logits);

// {"name": ..., "cost_gflops_per_sample": ..., "logits": path}. Relative
// logits paths resolve against the manifest's directory.
ProviderDescriptor load_manifest(const std::filesystem::path& path);
std::string manifest_json(const ProviderDescriptor& descriptor);

}  // namespace comment_mme::provider
