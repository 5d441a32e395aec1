#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace comment_mme::textprep {

// One raw/expected pair. File names are "<nnn>_<mode>_<name>.raw.txt" with a
// matching ".expected.txt"; mode is a language tag or "pharoseg" (segment,
// then preprocess each part; segments joined with newlines). A single final
// newline in either file is ignored.
struct GoldenCase {
  std::string name;
  std::string mode;
  std::string raw;
  std::string expected;
};

std::vector<GoldenCase> load_golden(const std::filesystem::path& dir);

std::string run_golden(const std::string& mode, const std::string& text);

struct GoldenResult {
  std::string name;
  std::string actual;
  bool matches = false;
  bool idempotent = false;
};

std::vector<GoldenResult> check_golden(const std::vector<GoldenCase>& cases);

}  // namespace comment_mme::textprep
