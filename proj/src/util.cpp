#include "comment_mme/util.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "comment_mme/error.hpp"

namespace comment_mme {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::config:
      return "config";
    case Stage::data:
      return "data";
    case Stage::provider:
      return "provider";
    case Stage::fitting:
      return "fitting";
  }
  return "unknown";
}

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_real: conversion failed");
  return {buf.data(), end};
}

std::string format_fixed(double value, int decimals) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) throw std::runtime_error("format_fixed: conversion failed");
  std::string out(buf.data(), end);
  // "-0.00" renders as "0.00" so that golden files do not depend on the sign of zero.
  if (!out.empty() && out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return buf.data();
}

std::string ArtifactHeader::render(std::string_view leader) const {
  std::string body = "comment-mme " + std::string(kVersion) + " seed=" + std::to_string(seed) +
                     " config=" + (config_hash.empty() ? std::string("none") : config_hash);
  if (leader == "<!--") return "<!-- " + body + " -->\n";
  return std::string(leader) + " " + body + "\n";
}

std::optional<ArtifactHeader> ArtifactHeader::parse(std::string_view text) {
  auto line = text.substr(0, text.find('\n'));
  for (std::string_view leader : {"//", "#", "<!--"})
    if (line.starts_with(leader)) {
      line.remove_prefix(leader.size());
      break;
    }
  if (line.ends_with("-->")) line.remove_suffix(3);
  std::istringstream in{std::string(trim(line))};
  std::string name, version, seed, config;
  if (!(in >> name >> version >> seed >> config) || name != "comment-mme" || !seed.starts_with("seed=") ||
      !config.starts_with("config="))
    return std::nullopt;
  ArtifactHeader h;
  auto digits = std::string_view(seed).substr(5);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), h.seed);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  h.config_hash = config.substr(7);
  if (h.config_hash == "none") h.config_hash.clear();
  return h;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  if (!lines.empty() && !lines.back().empty() && lines.back().back() == '\r') lines.back().pop_back();
  return lines;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

bool is_skippable_line(std::string_view line) {
  auto t = trim(line);
  return t.empty() || t.starts_with("//") || t.starts_with('#');
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound) {
  // Rejection sampling keeps the draw unbiased and fully specified.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

}  // namespace comment_mme
