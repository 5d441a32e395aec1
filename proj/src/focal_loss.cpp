#include "comment_mme/focal_loss.hpp"

#include <algorithm>
#include <cmath>

namespace comment_mme::provider {

namespace {

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double focal_loss(double p, int y, double gamma, double pos_weight) {
  p = clamp_probability(p);
  const double pt = y == 1 ? p : 1.0 - p;
  const double alpha = y == 1 ? pos_weight : 1.0;
  return -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
}

double focal_loss_grad_prob(double p, int y, double gamma, double pos_weight) {
  p = clamp_probability(p);
  const double pt = y == 1 ? p : 1.0 - p;
  const double alpha = y == 1 ? pos_weight : 1.0;
  const double sign = y == 1 ? 1.0 : -1.0;
  // dL/dpt = alpha * (gamma (1-pt)^(gamma-1) log pt - (1-pt)^gamma / pt)
  double d = -std::pow(1.0 - pt, gamma) / pt;
  if (gamma != 0.0) d += gamma * std::pow(1.0 - pt, gamma - 1.0) * std::log(pt);
  return sign * alpha * d;
}

double focal_loss_grad_logit(double z, int y, double gamma, double pos_weight) {
  const double p = clamp_probability(sigmoid(z));
  const double pt = y == 1 ? p : 1.0 - p;
  const double alpha = y == 1 ? pos_weight : 1.0;
  const double sign = y == 1 ? 1.0 : -1.0;
  // Chain rule through dp/dz = p(1-p), folded to avoid (1-pt)^(gamma-1).
  return sign * alpha * std::pow(1.0 - pt, gamma) * (gamma * pt * std::log(pt) - (1.0 - pt));
}

}  // namespace comment_mme::provider
