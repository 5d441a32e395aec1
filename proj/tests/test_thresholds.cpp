#include <cmath>
#include <random>
#include <vector>

#include "comment_mme/thresholds.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace comment_mme;
using namespace comment_mme::thresholds;
using corpus::Language;

namespace {

struct Instance {
  ensemble::ProbabilityMatrix probs;
  corpus::LabelMatrix labels;
};

Instance single_column(Language lang, const std::vector<double>& p, const std::vector<int>& y) {
  const auto cats = corpus::taxonomy(lang).size();
  Instance in;
  in.probs.language = in.labels.language = lang;
  in.probs.values = RealMatrix(p.size(), cats, 0.0);
  in.labels.values = BinaryMatrix(p.size(), cats, 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    in.probs.ids.push_back("s" + std::to_string(100 + i));
    in.probs.values(i, 0) = p[i];
    in.labels.values(i, 0) = static_cast<unsigned char>(y[i]);
  }
  in.labels.ids = in.probs.ids;
  return in;
}

Instance random_instance(std::mt19937_64& rng) {
  const auto lang = corpus::kLanguages[uniform_index(rng, 3)];
  const auto cats = corpus::taxonomy(lang).size();
  const auto n = 1 + uniform_index(rng, 64);
  const double rate = uniform01(rng);
  Instance in;
  in.probs.language = in.labels.language = lang;
  in.probs.values = RealMatrix(n, cats);
  in.labels.values = BinaryMatrix(n, cats);
  for (std::size_t i = 0; i < n; ++i) {
    in.probs.ids.push_back("s" + std::to_string(1000 + i));
    for (std::size_t c = 0; c < cats; ++c) {
      in.probs.values(i, c) = uniform01(rng);
      in.labels.values(i, c) = uniform01(rng) < rate;
    }
  }
  in.labels.ids = in.probs.ids;
  return in;
}

}  // namespace

TEST_CASE("grid") {
  Grid g;
  CHECK(g.count() == 41);
  CHECK(g.at(0) == 0.10);
  CHECK(g.at(20) == 0.5);
  CHECK(g.at(40) == 0.9);
  for (std::size_t k = 0; k < g.count(); ++k) CHECK(g.at(k) == testing::grid_point(10, 2, static_cast<int>(k)));
  auto p = Grid::parse("0.20:0.80:0.05");
  CHECK(p.count() == 13);
  CHECK(p.at(12) == 0.8);
  CHECK_THROWS_AS(Grid::parse("0.9:0.1:0.02"), ConfigError);
  CHECK_THROWS_AS(Grid::parse("0.1:0.9"), ConfigError);
  CHECK_THROWS_AS(Grid::parse("0.1:0.9:0"), ConfigError);
}

TEST_CASE("separable example picks the first perfect threshold") {
  auto in = single_column(Language::java, {0.2, 0.4, 0.7, 0.9}, {0, 0, 1, 1});
  auto t = tune_thresholds(in.probs, in.labels);
  const auto* e = t.find(Language::java, "summary");
  REQUIRE(e);
  CHECK(e->t == 0.42);
  CHECK(e->f1_valid == 1.0);
  CHECK_FALSE(e->fallback);
}

TEST_CASE("all positive and certain picks the smallest threshold") {
  auto in = single_column(Language::java, {1.0, 1.0, 1.0}, {1, 1, 1});
  CHECK(tune_thresholds(in.probs, in.labels).find(Language::java, "summary")->t == 0.10);
}

TEST_CASE("categories without positives fall back to 0.5") {
  auto in = single_column(Language::java, {0.3, 0.6}, {0, 0});
  auto t = tune_thresholds(in.probs, in.labels);
  const auto* e = t.find(Language::java, "summary");
  CHECK(e->t == 0.5);
  CHECK(e->fallback);
  CHECK(t.entries.size() == 7);
}

TEST_CASE("tuning matches the exhaustive oracle and never loses to 0.5") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = random_instance(rng);
    auto table = tune_thresholds(in.probs, in.labels);
    const auto tax = corpus::taxonomy(in.probs.language);
    for (std::size_t c = 0; c < tax.size(); ++c) {
      const auto p = in.probs.values.column(c);
      const auto y = in.labels.values.column(c);
      const auto* e = table.find(in.probs.language, tax[c]);
      REQUIRE(e);
      bool any = false;
      for (auto v : y) any = any || v;
      if (!any) {
        CHECK(e->fallback);
        continue;
      }
      const auto [t, f1] = testing::best_threshold(p, y);
      CHECK(e->t == t);
      CHECK(e->f1_valid == f1);
      CHECK(testing::f1_at(p, y, e->t) >= testing::f1_at(p, y, 0.5));
    }
  }
}

TEST_CASE("tuning is deterministic and on the grid") {
  std::mt19937_64 rng(7);
  auto in = random_instance(rng);
  auto a = tune_thresholds(in.probs, in.labels), b = tune_thresholds(in.probs, in.labels);
  CHECK(thresholds_json(a) == thresholds_json(b));
  for (const auto& [key, e] : a.entries) {
    const double k = (e.t - 0.10) / 0.02;
    CHECK(std::abs(e.t - (0.10 + std::round(k) * 0.02)) < 1e-12);
  }
}

TEST_CASE("apply_thresholds") {
  auto in = single_column(Language::python, {0.5, 0.49, 0.0}, {1, 0, 0});
  auto half = constant_table(Language::python, 0.5);
  auto pred = apply_thresholds(in.probs, half);
  CHECK(pred(0, 0) == 1);
  CHECK(pred(1, 0) == 0);
  for (std::size_t c = 0; c < 5; ++c) CHECK(pred(2, c) == 0);

  ThresholdTable partial = half;
  partial.entries.erase("python/usage");
  CHECK_THROWS_AS(apply_thresholds(in.probs, partial), MissingThreshold);
}

TEST_CASE("thresholds JSON round-trips") {
  std::mt19937_64 rng(8);
  auto in = random_instance(rng);
  auto table = tune_thresholds(in.probs, in.labels, Grid::parse("0.10:0.90:0.05"));
  const auto text = thresholds_json(table);
  CHECK(text.rfind("// grid 0.1:0.9:0.05\n", 0) == 0);
  auto back = parse_thresholds_json("// comment-mme 0.3.0 seed=0 config=x\n" + text);
  CHECK(thresholds_json(back) == text);
  CHECK(back.grid.step == 0.05);
}
