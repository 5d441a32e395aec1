#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "comment_mme/error.hpp"
#include "comment_mme/util.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace comment_mme;

TEST_CASE("format_real round-trips doubles") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double v = (uniform01(rng) - 0.5) * std::pow(10.0, static_cast<double>(uniform_index(rng, 20)) - 10.0);
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(1.0) == "1");
}

TEST_CASE("format_fixed never prints negative zero") {
  CHECK(format_fixed(0.25, 2) == "0.25");
  CHECK(format_fixed(-0.001, 2) == "0.00");
  CHECK(format_fixed(1.0, 2) == "1.00");
  CHECK(format_fixed(-0.5, 2) == "-0.50");
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("artifact header uses the format's comment leader") {
  ArtifactHeader h{42, "deadbeef"};
  CHECK(h.render("//") == "// comment-mme 0.3.0 seed=42 config=deadbeef\n");
  CHECK(h.render("#") == "# comment-mme 0.3.0 seed=42 config=deadbeef\n");
  CHECK(h.render("<!--") == "<!-- comment-mme 0.3.0 seed=42 config=deadbeef -->\n");
  CHECK(is_skippable_line("// comment-mme"));
  CHECK(is_skippable_line("# x"));
  CHECK(is_skippable_line("   "));
  CHECK_FALSE(is_skippable_line("{\"id\":1}"));
}

TEST_CASE("text file helpers") {
  testing::TempDir dir("util");
  write_text_file(dir / "a/b/c.txt", "x\r\ny\n");
  CHECK(read_text_file(dir / "a/b/c.txt") == "x\r\ny\n");
  CHECK(split_lines("x\r\ny\n") == std::vector<std::string>{"x", "y"});
  CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), DataError);
  CHECK(trim("  a b \t") == "a b");
}

TEST_CASE("deterministic random helpers") {
  std::mt19937_64 a(3), b(3);
  for (int i = 0; i < 100; ++i) CHECK(uniform01(a) == uniform01(b));
  std::mt19937_64 rng(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = uniform_index(rng, 7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(c > 800);

  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::mt19937_64 s1(5), s2(5);
  auto x = items, y = items;
  deterministic_shuffle(std::span<int>(x), s1);
  deterministic_shuffle(std::span<int>(y), s2);
  CHECK(x == y);
  CHECK(std::set<int>(x.begin(), x.end()).size() == 10);
}

TEST_CASE("errors carry stage exit codes") {
  CHECK(ConfigError("x").exit_code() == 2);
  CHECK(DataError("x").exit_code() == 3);
  CHECK(ProviderError("x").exit_code() == 4);
  CHECK(FitError("x").exit_code() == 5);
  CHECK(stage_name(Stage::provider) == "provider");
}

TEST_CASE("artifact headers parse back from every leader") {
  ArtifactHeader h{42, "00ff00ff00ff00ff"};
  for (std::string_view leader : {"//", "#", "<!--"}) {
    auto back = ArtifactHeader::parse(h.render(leader) + "rest\n");
    REQUIRE(back);
    CHECK(back->seed == 42);
    CHECK(back->config_hash == h.config_hash);
  }
  auto none = ArtifactHeader::parse(ArtifactHeader{7, ""}.render("#"));
  REQUIRE(none);
  CHECK(none->config_hash.empty());
  CHECK_FALSE(ArtifactHeader::parse("{\"a\":1}"));
  CHECK_FALSE(ArtifactHeader::parse("// comment-mme 0.3.0 seed=x config=none"));
}
