#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <thread>
#include <vector>

#include "comment_mme/metrics.hpp"
#include "comment_mme/util.hpp"
#include "doctest.h"
#include "published.hpp"

using namespace comment_mme;
using namespace comment_mme::metrics;
using corpus::Language;

namespace {

std::vector<unsigned char> bits(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("category_outcome counts") {
  auto o = category_outcome(bits({1, 1, 0, 0, 1}), bits({1, 0, 1, 0, 1}));
  CHECK(o.tp == 2);
  CHECK(o.fp == 1);
  CHECK(o.fn == 1);
  CHECK(o.tn == 1);
  CHECK(o.support() == 3);
  CHECK(o.precision == doctest::Approx(2.0 / 3.0));
  CHECK(o.f1 == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(category_outcome(bits({1}), bits({1, 0})), LengthMismatch);
}

TEST_CASE("perfect and empty predictions") {
  auto perfect = category_outcome(bits({1, 0, 1}), bits({1, 0, 1}));
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  auto none = category_outcome(bits({0, 0}), bits({0, 0}));
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(f1_from_pr(0.0, 0.0) == 0.0);
  CHECK(safe_ratio(0.0, 0.0) == 0.0);
}

TEST_CASE("counts always total n") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto n = uniform_index(rng, 50);
    std::vector<unsigned char> p(n), l(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<unsigned char>(uniform_index(rng, 2));
      l[i] = static_cast<unsigned char>(uniform_index(rng, 2));
    }
    CHECK(category_outcome(p, l).total() == n);
  }
}

TEST_CASE("published precision/recall pairs reproduce the published F1") {
  for (const auto& row : testing::kPublishedRows) {
    CAPTURE(row.category);
    CHECK(std::abs(f1_from_pr(row.precision, row.recall) - row.f1) < 5e-4);
    auto counts = testing::counts_for(row);
    REQUIRE(counts.has_value());
    CHECK(std::abs(counts->f1 - row.f1) < 5e-4);
  }
  CHECK(f1_from_pr(0.8184, 0.9628) == doctest::Approx(0.8848).epsilon(5e-4));
}

TEST_CASE("published aggregates") {
  std::vector<double> all;
  std::map<Language, std::vector<double>> by_lang;
  for (const auto& row : testing::kPublishedRows) {
    all.push_back(row.f1);
    by_lang[row.language].push_back(row.f1);
  }
  CHECK(std::abs(macro_f1(all) - testing::kPublishedMacro) < 5e-4);
  CHECK(std::abs(macro_f1(by_lang[Language::java]) - testing::kPublishedJavaMacro) < 5e-4);
  CHECK(std::abs(macro_f1(by_lang[Language::python]) - testing::kPublishedPythonMacro) < 5e-4);
  CHECK(std::abs(macro_f1(by_lang[Language::pharo]) - testing::kPublishedPharoMacro) < 5e-4);
}

TEST_CASE("macro and weighted F1") {
  std::vector<double> same(5, 0.42);
  CHECK(macro_f1(same) == doctest::Approx(0.42));
  CHECK_THROWS(macro_f1(std::vector<double>{}));

  std::vector<CategoryOutcome> two = {CategoryOutcome::from_counts(1, 0, 0, 5),
                                      CategoryOutcome::from_counts(0, 0, 3, 5)};
  CHECK(weighted_f1(two) == doctest::Approx(0.25));
  std::vector<CategoryOutcome> equal = {CategoryOutcome::from_counts(2, 1, 1, 0),
                                        CategoryOutcome::from_counts(3, 0, 0, 0)};
  CHECK(weighted_f1(equal) == doctest::Approx(macro_f1(equal)));
  std::vector<CategoryOutcome> single = {CategoryOutcome::from_counts(2, 1, 1, 0)};
  CHECK(weighted_f1(single) == doctest::Approx(single[0].f1));
  std::vector<CategoryOutcome> zero = {CategoryOutcome::from_counts(0, 1, 0, 0)};
  CHECK_THROWS(weighted_f1(zero));
}

TEST_CASE("macro F1 ignores category order") {
  std::mt19937_64 rng(2);
  std::vector<double> v(18);
  for (auto& x : v) x = uniform01(rng);
  const double base = macro_f1(v);
  for (int i = 0; i < 20; ++i) {
    deterministic_shuffle(std::span<double>(v), rng);
    CHECK(macro_f1(v) == doctest::Approx(base).epsilon(1e-14));
  }
}

TEST_CASE("submission score") {
  CHECK(submission_score({0.6867, 45.13, 45.13, 235759.28, 235759.28}) == doctest::Approx(0.41202).epsilon(1e-12));
  CHECK(submission_score({1.0, 0.0, 10.0, 0.0, 10.0}) == 1.0);
  CHECK(submission_score({0.0, 5.0, 10.0, 10.0, 10.0}) == doctest::Approx(0.1));
  CHECK(submission_score({0.5, 100.0, 10.0, 100.0, 10.0}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(submission_score({0.5, 1.0, 0.0, 1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(submission_score({-0.1, 1.0, 1.0, 1.0, 1.0}), ConfigError);
}

TEST_CASE("submission score is monotone and bounded") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    ScoreInputs s{uniform01(rng), 100 * uniform01(rng), 1 + 100 * uniform01(rng), 1e3 * uniform01(rng),
                  1 + 1e3 * uniform01(rng)};
    const double base = submission_score(s);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    auto up = s;
    up.f1_avg = std::min(1.0, s.f1_avg + uniform01(rng));
    CHECK(submission_score(up) >= base);
    auto slow = s;
    slow.t_model += 50 * uniform01(rng);
    CHECK(submission_score(slow) <= base);
    auto heavy = s;
    heavy.g_model += 500 * uniform01(rng);
    CHECK(submission_score(heavy) <= base);
  }
}

TEST_CASE("gflops accounting") {
  std::vector<provider::ProviderDescriptor> four(4);
  for (auto& d : four) d.cost_gflops_per_sample = 10.0;
  CHECK(total_gflops(four, 100) == 4000.0);
  CHECK(total_gflops({}, 100) == 0.0);
  std::vector<provider::ProviderDescriptor> one(1);
  one[0].cost_gflops_per_sample = 2.5;
  CHECK(total_gflops(one, 8) == 20.0);
}

TEST_CASE("runtime measurement") {
  std::vector<corpus::SentenceRecord> records(20);
  std::vector<const corpus::SentenceRecord*> ptrs;
  for (auto& r : records) ptrs.push_back(&r);

  auto sleepy = [](std::span<const corpus::SentenceRecord* const> rs) {
    for (std::size_t i = 0; i < rs.size(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  };
  const double ms = measure_runtime(sleepy, ptrs, 3);
  CHECK(ms >= 0.5);
  CHECK(ms <= 1.5);

  CHECK_THROWS(measure_runtime(sleepy, {}, 3));
  CHECK_THROWS(measure_runtime(sleepy, ptrs, 2));

  volatile double sink = 0;
  auto busy = [&](std::span<const corpus::SentenceRecord* const> rs) {
    for (std::size_t i = 0; i < rs.size(); ++i)
      for (int k = 0; k < 20000; ++k) sink = sink + std::sqrt(static_cast<double>(k));
  };
  const double a = measure_runtime(busy, ptrs, 5), b = measure_runtime(busy, ptrs, 5);
  CHECK(std::max(a, b) <= 1.5 * std::min(a, b));
}

TEST_CASE("report CSV round-trips") {
  EvalReport r;
  r.rows.push_back({Language::java, "summary", CategoryOutcome::from_counts(5, 1, 2, 10)});
  r.rows.push_back({Language::python, "usage", CategoryOutcome::from_counts(0, 0, 3, 7)});
  r.aggregate();
  r.runtime_ms_per_sample = 1.25;
  r.total_gflops = 12.0;
  r.score = 0.333;
  const auto text = "# comment-mme 0.3.0 seed=1 config=x\n" + report_csv(r);
  auto back = parse_report_csv(text);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].outcome.tp == 5);
  CHECK(back.rows[0].outcome.f1 == r.rows[0].outcome.f1);
  CHECK(back.macro_f1 == r.macro_f1);
  CHECK(back.weighted_f1 == r.weighted_f1);
  CHECK(back.language_macro == r.language_macro);
  CHECK(back.score == 0.333);
  CHECK(report_csv(back) == report_csv(r));
  CHECK_THROWS_AS(parse_report_csv("language,category\njava,summary,1"), DataError);
}
