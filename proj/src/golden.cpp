#include "comment_mme/golden.hpp"

#include <algorithm>

#include "comment_mme/error.hpp"
#include "comment_mme/textprep.hpp"
#include "comment_mme/util.hpp"

namespace comment_mme::textprep {

namespace {

constexpr std::string_view kRawSuffix = ".raw.txt";

std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

std::string prep(corpus::Language lang, const std::string& text) {
  corpus::SentenceRecord r;
  r.id = "golden";
  r.language = lang;
  r.text = text;
  return preprocess(r, PrepConfig::defaults(lang)).text;
}

}  // namespace

std::vector<GoldenCase> load_golden(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("golden directory not found: " + dir.string());
  std::vector<GoldenCase> cases;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.size() <= kRawSuffix.size() || !file.ends_with(kRawSuffix)) continue;
    GoldenCase c;
    c.name = file.substr(0, file.size() - kRawSuffix.size());
    const auto first = c.name.find('_');
    const auto second = first == std::string::npos ? first : c.name.find('_', first + 1);
    if (second == std::string::npos) throw DataError("golden file name lacks a mode: " + file);
    c.mode = c.name.substr(first + 1, second - first - 1);
    if (c.mode != "pharoseg" && !corpus::parse_language(c.mode))
      throw DataError("golden file " + file + " has unknown mode '" + c.mode + "'");
    const auto expected = dir / (c.name + ".expected.txt");
    if (!std::filesystem::exists(expected)) throw DataError("golden file " + file + " has no expected twin");
    c.raw = strip_final_newline(read_text_file(entry.path()));
    c.expected = strip_final_newline(read_text_file(expected));
    cases.push_back(std::move(c));
  }
  std::sort(cases.begin(), cases.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return cases;
}

std::string run_golden(const std::string& mode, const std::string& text) {
  if (mode == "pharoseg") {
    std::string out;
    for (const auto& segment : segment_pharo(text)) {
      if (!out.empty()) out += '\n';
      out += prep(corpus::Language::pharo, segment);
    }
    return out;
  }
  auto lang = corpus::parse_language(mode);
  if (!lang) throw DataError("unknown golden mode '" + mode + "'");
  return prep(*lang, text);
}

std::vector<GoldenResult> check_golden(const std::vector<GoldenCase>& cases) {
  std::vector<GoldenResult> out;
  for (const auto& c : cases) {
    GoldenResult r;
    r.name = c.name;
    r.actual = run_golden(c.mode, c.raw);
    r.matches = r.actual == c.expected;
    r.idempotent = run_golden(c.mode, r.actual) == r.actual;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace comment_mme::textprep
