#pragma once

namespace comment_mme::provider {

inline constexpr double kProbabilityClamp = 1e-7;

double sigmoid(double z);

// -alpha_t * (1 - p_t)^gamma * log(p_t), with p_t = p for y = 1 and 1 - p for
// y = 0, alpha_t = pos_weight for y = 1 and 1 otherwise. p is clamped to
// [1e-7, 1 - 1e-7].
double focal_loss(double p, int y, double gamma, double pos_weight);

// d focal_loss(sigmoid(z)) / dz.
double focal_loss_grad_logit(double z, int y, double gamma, double pos_weight);

// d focal_loss(p) / dp, for callers that mix probabilities themselves.
double focal_loss_grad_prob(double p, int y, double gamma, double pos_weight);

}  // namespace comment_mme::provider
