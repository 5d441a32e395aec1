#include "comment_mme/provider.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "comment_mme/util.hpp"
#include "json.hpp"

namespace comment_mme::provider {

namespace {

using json = nlohmann::json;

struct ParsedLine {
  std::string id;
  Language language;
  std::vector<double> scores;
};

ParsedLine parse_line(const std::string& line, std::size_t line_no, std::optional<Language> expected) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError("logits line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
    throw SchemaError("logits line " + std::to_string(line_no) + ": missing string 'id'");
  if (!j.contains("scores") || !j["scores"].is_object())
    throw SchemaError("logits line " + std::to_string(line_no) + ": missing object 'scores'");

  ParsedLine out;
  out.id = j["id"].get<std::string>();
  const auto& scores = j["scores"];

  std::optional<Language> language = expected;
  for (const auto& [key, value] : scores.items()) {
    auto slash = key.find('/');
    auto lang = slash == std::string::npos ? std::nullopt : corpus::parse_language(key.substr(0, slash));
    if (!lang) throw SchemaError("sample " + out.id + ": malformed score key '" + key + "'");
    if (!language) language = lang;
    if (*lang != *language || !corpus::category_index(*lang, key.substr(slash + 1)))
      throw SchemaError("sample " + out.id + ": key '" + key + "' outside the " +
                        std::string(corpus::to_string(*language)) + " taxonomy");
  }
  if (!language) throw SchemaError("sample " + out.id + ": empty scores object");
  out.language = *language;

  const auto tax = corpus::taxonomy(*language);
  out.scores.resize(tax.size());
  for (std::size_t c = 0; c < tax.size(); ++c) {
    std::string key = corpus::category_key(*language, tax[c]);
    auto it = scores.find(key);
    if (it == scores.end()) throw MissingCategory(out.id, key);
    if (!it->is_number()) throw SchemaError("sample " + out.id + ": score for " + key + " is not a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) throw NonFiniteValue(out.id, key);
    out.scores[c] = v;
  }
  return out;
}

LogitMatrix assemble(std::vector<ParsedLine> lines, Language language, const std::string& provider_name) {
  std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < lines.size(); ++i)
    if (lines[i].id == lines[i - 1].id) throw SchemaError("duplicate sample id '" + lines[i].id + "'");

  LogitMatrix m;
  m.provider = provider_name;
  m.language = language;
  m.values = RealMatrix(lines.size(), corpus::taxonomy(language).size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    m.ids.push_back(std::move(lines[i].id));
    std::copy(lines[i].scores.begin(), lines[i].scores.end(), m.values.row(i).begin());
  }
  return m;
}

template <typename OnLine>
void for_each_data_line(std::istream& in, OnLine&& on_line) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_skippable_line(line)) continue;
    on_line(line, line_no);
  }
}

std::istringstream open_stream(const std::filesystem::path& path) {
  try {
    return std::istringstream(read_text_file(path));
  } catch (const DataError& e) {
    throw ProviderError(e.what());
  }
}

}  // namespace

void ProviderDescriptor::validate() const {
  if (name.empty()) throw ConfigError("provider name must not be empty");
  if (!std::isfinite(cost_gflops_per_sample) || cost_gflops_per_sample < 0)
    throw ConfigError("provider " + name + ": cost_gflops_per_sample must be finite and nonnegative");
}

std::optional<std::size_t> LogitMatrix::row_of(const std::string& id) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

LogitMatrix LogitMatrix::select(const std::vector<std::string>& wanted) const {
  LogitMatrix out;
  out.provider = provider;
  out.language = language;
  out.ids = wanted;
  out.values = RealMatrix(wanted.size(), values.cols());
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    auto r = row_of(wanted[i]);
    if (!r) throw ProviderError("provider " + provider + " has no " + std::string(corpus::to_string(language)) +
                                " scores for sample " + wanted[i]);
    auto src = values.row(*r);
    std::copy(src.begin(), src.end(), out.values.row(i).begin());
  }
  return out;
}

LogitMatrix parse_logits(std::istream& in, Language language, const std::string& provider_name) {
  std::vector<ParsedLine> lines;
  for_each_data_line(in, [&](const std::string& line, std::size_t no) { lines.push_back(parse_line(line, no, language)); });
  return assemble(std::move(lines), language, provider_name);
}

LogitMatrix load_logits(const std::filesystem::path& path, Language language, const std::string& provider_name) {
  auto in = open_stream(path);
  return parse_logits(in, language, provider_name);
}

std::map<Language, LogitMatrix> parse_logits_any(std::istream& in, const std::string& provider_name) {
  std::map<Language, std::vector<ParsedLine>> by_language;
  for_each_data_line(in, [&](const std::string& line, std::size_t no) {
    auto parsed = parse_line(line, no, std::nullopt);
    by_language[parsed.language].push_back(std::move(parsed));
  });
  std::map<Language, LogitMatrix> out;
  for (auto& [language, lines] : by_language) out.emplace(language, assemble(std::move(lines), language, provider_name));
  return out;
}

std::map<Language, LogitMatrix> load_logits_any(const std::filesystem::path& path, const std::string& provider_name) {
  auto in = open_stream(path);
  return parse_logits_any(in, provider_name);
}

void write_logits(std::ostream& out, const LogitMatrix& logits) {
  const auto tax = corpus::taxonomy(logits.language);
  for (std::size_t i = 0; i < logits.ids.size(); ++i) {
    out << "{\"id\":" << json(logits.ids[i]).dump() << ",\"scores\":{";
    for (std::size_t c = 0; c < tax.size(); ++c) {
      if (!std::isfinite(logits.values(i, c))) throw NonFiniteValue(logits.ids[i], corpus::category_key(logits.language, tax[c]));
      if (c) out << ',';
      out << '"' << corpus::category_key(logits.language, tax[c]) << "\":" << format_real(logits.values(i, c));
    }
    out << "}}\n";
  }
}

ProviderDescriptor load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ProviderError(e.what());
  }
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string() || !j.contains("logits") ||
      !j["logits"].is_string() || !j.contains("cost_gflops_per_sample") || !j["cost_gflops_per_sample"].is_number())
    throw ConfigError("manifest " + path.string() + ": expected {name, cost_gflops_per_sample, logits}");

  ProviderDescriptor d;
  d.name = j["name"].get<std::string>();
  d.cost_gflops_per_sample = j["cost_gflops_per_sample"].get<double>();
  d.source = Source::logit_file;
  std::filesystem::path logits = j["logits"].get<std::string>();
  d.logits = logits.is_relative() ? path.parent_path() / logits : logits;
  d.validate();
  return d;
}

std::string manifest_json(const ProviderDescriptor& d) {
  nlohmann::ordered_json j;
  j["name"] = d.name;
  j["cost_gflops_per_sample"] = d.cost_gflops_per_sample;
  j["logits"] = d.logits.generic_string();
  return j.dump(2) + "\n";
}

}  // namespace comment_mme::provider
