#include <cmath>
#include <random>

#include "comment_mme/focal_loss.hpp"
#include "comment_mme/util.hpp"
#include "doctest.h"

using namespace comment_mme;
using namespace comment_mme::provider;

namespace {

// Closed form, written independently of the library.
double reference_loss(double p, int y, double gamma, double w) {
  p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  const double pt = y == 1 ? p : 1.0 - p;
  const double at = y == 1 ? w : 1.0;
  return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
}

double reference_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(2.0) == doctest::Approx(0.8807970779778823).epsilon(1e-15));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
  for (double z = -30; z <= 30; z += 0.37) CHECK(std::abs(sigmoid(z) - reference_sigmoid(z)) < 1e-15);
}

TEST_CASE("focal loss at p = 0.5") {
  CHECK(focal_loss(0.5, 1, 2.0, 1.0) == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-12));
  CHECK(focal_loss(0.5, 1, 2.0, 1.0) == doctest::Approx(0.173287).epsilon(1e-6));
}

TEST_CASE("confident correct predictions cost nothing") {
  CHECK(focal_loss(1.0 - 1e-12, 1, 2.0, 1.0) < 1e-20);
  CHECK(focal_loss(0.0, 0, 2.0, 1.0) < 1e-20);
  CHECK(std::isfinite(focal_loss(0.0, 1, 2.0, 5.0)));
}

TEST_CASE("gamma 0 is weighted cross-entropy") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double p = 1e-6 + (1 - 2e-6) * uniform01(rng);
    const int y = static_cast<int>(uniform_index(rng, 2));
    const double bce = y == 1 ? -std::log(p) : -std::log(1.0 - p);
    CHECK(std::abs(focal_loss(p, y, 0.0, 1.0) - bce) < 1e-9);
  }
}

TEST_CASE("focal loss matches the reference form") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double p = uniform01(rng);
    const int y = static_cast<int>(uniform_index(rng, 2));
    const double g = 5.0 * uniform01(rng);
    const double w = 1.0 + 9.0 * uniform01(rng);
    CHECK(focal_loss(p, y, g, w) == doctest::Approx(reference_loss(p, y, g, w)).epsilon(1e-12));
    CHECK(focal_loss(p, y, g, w) >= 0.0);
  }
}

TEST_CASE("logit gradient matches central differences") {
  std::mt19937_64 rng(3);
  const double h = 1e-5;
  for (int i = 0; i < 1000; ++i) {
    const double z = (uniform01(rng) - 0.5) * 12.0;
    const int y = static_cast<int>(uniform_index(rng, 2));
    const double g = 4.0 * uniform01(rng);
    const double w = 1.0 + 9.0 * uniform01(rng);
    const double fd = (reference_loss(reference_sigmoid(z + h), y, g, w) - reference_loss(reference_sigmoid(z - h), y, g, w)) /
                      (2 * h);
    const double an = focal_loss_grad_logit(z, y, g, w);
    CHECK(std::abs(an - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3));
  }
}

TEST_CASE("probability gradient matches central differences") {
  std::mt19937_64 rng(4);
  const double h = 1e-7;
  for (int i = 0; i < 500; ++i) {
    const double p = 0.01 + 0.98 * uniform01(rng);
    const int y = static_cast<int>(uniform_index(rng, 2));
    const double g = 4.0 * uniform01(rng);
    const double fd = (reference_loss(p + h, y, g, 2.0) - reference_loss(p - h, y, g, 2.0)) / (2 * h);
    CHECK(focal_loss_grad_prob(p, y, g, 2.0) == doctest::Approx(fd).epsilon(1e-5));
  }
}
