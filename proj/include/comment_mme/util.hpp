#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace comment_mme {

inline constexpr std::string_view kVersion = "0.3.0";

// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

// Fixed-point text with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

// 64-bit FNV-1a. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

// Provenance written at the top of every emitted artifact.
struct ArtifactHeader {
  std::uint64_t seed = 0;
  std::string config_hash;  // hex digest of the canonical run configuration

  // Rendered with the comment leader of the target format ("//", "#", or "<!--").
  std::string render(std::string_view leader) const;

  // Reads the header back from the first line of an artifact, if present.
  static std::optional<ArtifactHeader> parse(std::string_view text);
};

// Reads a text file, failing with DataError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

// Writes `content` atomically enough for batch use (truncate + write).
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Splits on '\n', dropping a trailing '\r' per line.
std::vector<std::string> split_lines(std::string_view text);

// True for blank lines and provenance header lines ("//" or "#" leaders).
bool is_skippable_line(std::string_view line);

std::string_view trim(std::string_view text);

// Deterministic random helpers built only on the raw mt19937_64 output, which
// the standard pins down exactly (distribution classes are implementation
// defined).
double uniform01(std::mt19937_64& rng);
std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound);

template <typename T>
void deterministic_shuffle(std::span<T> items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace comment_mme
