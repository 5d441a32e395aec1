#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "comment_mme/corpus.hpp"
#include "comment_mme/provider.hpp"
#include "comment_mme/util.hpp"

namespace testing {

// F1 of (p >= t) against labels, straight from the precision/recall definitions.
inline double f1_at(const std::vector<double>& p, const std::vector<unsigned char>& y, double t) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pred = p[i] >= t;
    tp += pred && y[i];
    fp += pred && !y[i];
    fn += !pred && y[i];
  }
  const double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
}

// Grid point k of start + k * step, written as an exact decimal quotient.
inline double grid_point(int start_hundredths, int step_hundredths, int k) {
  return static_cast<double>(start_hundredths + step_hundredths * k) / 100.0;
}

// Exhaustive search over 0.10, 0.12, ..., 0.90: first strict maximiser.
inline std::pair<double, double> best_threshold(const std::vector<double>& p, const std::vector<unsigned char>& y) {
  double best_t = 0, best_f1 = -1;
  for (int k = 0; k <= 40; ++k) {
    const double t = grid_point(10, 2, k);
    const double f1 = f1_at(p, y, t);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return {best_t, best_f1};
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Labels plus M providers whose logits are the signed label plus Gaussian-ish
// noise of the given scale (sum of uniforms).
struct ProviderFixture {
  comment_mme::corpus::LabelMatrix labels;
  std::vector<comment_mme::provider::LogitMatrix> logits;
};

inline ProviderFixture make_provider_fixture(std::uint64_t seed, comment_mme::corpus::Language lang, std::size_t n,
                                             const std::vector<double>& noise, double positive_rate = 0.3) {
  using namespace comment_mme;
  std::mt19937_64 rng(seed);
  const auto cats = corpus::taxonomy(lang).size();
  ProviderFixture f;
  f.labels.language = lang;
  f.labels.values = BinaryMatrix(n, cats, 0);
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%04zu", i);
    f.labels.ids.push_back(id);
    for (std::size_t c = 0; c < cats; ++c) f.labels.values(i, c) = uniform01(rng) < positive_rate;
  }
  for (std::size_t m = 0; m < noise.size(); ++m) {
    provider::LogitMatrix l;
    l.provider = "p" + std::to_string(m);
    l.language = lang;
    l.ids = f.labels.ids;
    l.values = RealMatrix(n, cats);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < cats; ++c) {
        double e = 0;
        for (int k = 0; k < 4; ++k) e += uniform01(rng) - 0.5;
        l.values(i, c) = (f.labels.values(i, c) ? 1.0 : -1.0) + noise[m] * e * 3.0;
      }
    f.logits.push_back(std::move(l));
  }
  return f;
}

}  // namespace testing
