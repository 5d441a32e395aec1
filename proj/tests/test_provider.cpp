#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "comment_mme/provider.hpp"
#include "comment_mme/util.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace comment_mme;
using namespace comment_mme::provider;
using corpus::Language;

namespace {

const char* kJavaLine =
    R"({"id":"j1","scores":{"java/summary":1.3,"java/ownership":-2,"java/expand":0,"java/usage":0.5,)"
    R"("java/pointer":-0.25,"java/deprecation":4,"java/rational":-1e-3}})";

LogitMatrix parse(const std::string& text, Language lang = Language::java) {
  std::istringstream in(text);
  return parse_logits(in, lang, "p");
}

LogitMatrix random_logits(std::mt19937_64& rng, Language lang, std::size_t n) {
  LogitMatrix m;
  m.provider = "rand";
  m.language = lang;
  const auto cats = corpus::taxonomy(lang).size();
  m.values = RealMatrix(n, cats);
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%03zu", i);
    m.ids.push_back(id);
    for (std::size_t c = 0; c < cats; ++c) m.values(i, c) = (uniform01(rng) - 0.5) * 40.0;
  }
  return m;
}

}  // namespace

TEST_CASE("a logits line becomes one row") {
  auto m = parse(kJavaLine);
  REQUIRE(m.ids.size() == 1);
  CHECK(m.ids[0] == "j1");
  CHECK(m.provider == "p");
  CHECK(m.values(0, 0) == 1.3);
  CHECK(m.values(0, 1) == -2.0);
  CHECK(m.values(0, 6) == -1e-3);
}

TEST_CASE("schema violations") {
  std::string missing = kJavaLine;
  missing.replace(missing.find("\"java/summary\":1.3,"), std::string("\"java/summary\":1.3,").size(), "");
  CHECK_THROWS_AS(parse(missing), MissingCategory);

  std::string foreign = kJavaLine;
  foreign.replace(foreign.find("java/summary"), 12, "python/usage");
  CHECK_THROWS_AS(parse(foreign), SchemaError);

  std::string text = kJavaLine;
  text.replace(text.find("1.3"), 3, "\"x\"");
  CHECK_THROWS_AS(parse(text), SchemaError);

  CHECK_THROWS_AS(parse("{\"id\":\"a\"}"), SchemaError);
  CHECK_THROWS_AS(parse("not json"), SchemaError);
  CHECK_THROWS_AS(parse(std::string(kJavaLine) + "\n" + kJavaLine), SchemaError);
}

TEST_CASE("non-finite scores are rejected") {
  LogitMatrix m;
  m.language = Language::python;
  m.ids = {"a"};
  m.values = RealMatrix(1, 5, 0.0);
  m.values(0, 2) = std::numeric_limits<double>::infinity();
  std::ostringstream out;
  CHECK_THROWS_AS(write_logits(out, m), NonFiniteValue);

  std::string line = kJavaLine;
  line.replace(line.find("1.3"), 3, "1e999");
  CHECK_THROWS_AS(parse(line), SchemaError);
}

TEST_CASE("two providers over the same ids share row order") {
  const auto line = [](const char* id, double v) {
    std::string s = R"({"id":")" + std::string(id) + R"(","scores":{)";
    const char* cats[] = {"usage", "parameters", "developmentnotes", "expand", "summary"};
    for (int c = 0; c < 5; ++c) s += std::string(c ? "," : "") + "\"python/" + cats[c] + "\":" + std::to_string(v);
    return s + "}}\n";
  };
  auto a = parse(line("p3", 1) + line("p1", 2) + line("p2", 3), Language::python);
  auto b = parse(line("p2", 1) + line("p3", 2) + line("p1", 3), Language::python);
  CHECK(a.ids == b.ids);
  CHECK(a.ids == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(a.values(0, 0) == 2.0);
  CHECK(*a.row_of("p2") == 1);
  CHECK_FALSE(a.row_of("zz").has_value());

  auto sub = a.select({"p3", "p1"});
  CHECK(sub.ids == std::vector<std::string>{"p3", "p1"});
  CHECK(sub.values(0, 0) == 1.0);
  CHECK_THROWS_AS(a.select({"zz"}), ProviderError);
}

TEST_CASE("write then load is the identity") {
  std::mt19937_64 rng(3);
  for (auto lang : corpus::kLanguages) {
    auto m = random_logits(rng, lang, 50);
    std::ostringstream out;
    write_logits(out, m);
    auto back = parse(out.str(), lang);
    CHECK(back.ids == m.ids);
    CHECK(back.values == m.values);
  }
}

TEST_CASE("mixed-language files split by key prefix") {
  std::mt19937_64 rng(4);
  auto j = random_logits(rng, Language::java, 3);
  auto p = random_logits(rng, Language::pharo, 2);
  std::ostringstream out;
  out << "// header\n";
  write_logits(out, j);
  write_logits(out, p);
  std::istringstream in(out.str());
  auto all = parse_logits_any(in, "mix");
  REQUIRE(all.size() == 2);
  CHECK(all.at(Language::java).values == j.values);
  CHECK(all.at(Language::pharo).values == p.values);
  CHECK(all.at(Language::pharo).provider == "mix");

  std::istringstream mixed(
      R"({"id":"x","scores":{"java/summary":1,"python/usage":2}})");
  CHECK_THROWS_AS(parse_logits_any(mixed), SchemaError);
}

TEST_CASE("manifests resolve logits relative to themselves") {
  testing::TempDir dir("manifest");
  std::filesystem::create_directories(dir / "m");
  write_text_file(dir / "m/unixcoder.json",
                  "{\"name\":\"unixcoder\",\"cost_gflops_per_sample\":12.5,\"logits\":\"logits/u.jsonl\"}");
  auto d = load_manifest(dir / "m/unixcoder.json");
  CHECK(d.name == "unixcoder");
  CHECK(d.cost_gflops_per_sample == 12.5);
  CHECK(d.logits == dir / "m/logits/u.jsonl");
  CHECK(d.source == Source::logit_file);

  write_text_file(dir / "bad.json", "{\"name\":\"x\"}");
  CHECK_THROWS_AS(load_manifest(dir / "bad.json"), ConfigError);
  write_text_file(dir / "neg.json", "{\"name\":\"x\",\"cost_gflops_per_sample\":-1,\"logits\":\"a\"}");
  CHECK_THROWS_AS(load_manifest(dir / "neg.json"), Error);

  ProviderDescriptor e{"codebert", 3.0, Source::logit_file, "l.jsonl"};
  write_text_file(dir / "rt.json", manifest_json(e));
  auto back = load_manifest(dir / "rt.json");
  CHECK(back.name == "codebert");
  CHECK(back.cost_gflops_per_sample == 3.0);
}

TEST_CASE("load_logits reads files") {
  testing::TempDir dir("logits");
  write_text_file(dir / "j.jsonl", std::string("// comment-mme 0.3.0 seed=1 config=x\n") + kJavaLine + "\n");
  CHECK(load_logits(dir / "j.jsonl", Language::java).ids.size() == 1);
  CHECK_THROWS_AS(load_logits(dir / "none.jsonl", Language::java), Error);

  write_text_file(dir / "empty.jsonl", "");
  CHECK(load_logits(dir / "empty.jsonl", Language::java).ids.empty());
}
