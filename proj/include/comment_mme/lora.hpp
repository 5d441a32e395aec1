#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "comment_mme/error.hpp"
#include "comment_mme/matrix.hpp"

namespace comment_mme::provider {

// Low-rank adapter around a frozen dense layer:
//   y = (W + (alpha / r) * B * A) x
// W is d_out x d_in (frozen), A is r x d_in and B is d_out x r (trainable).
struct LoraAdapter {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::size_t rank = 16;
  double alpha = 32.0;
  double dropout = 0.1;
  RealMatrix frozen;  // W
  RealMatrix down;    // A
  RealMatrix up;      // B

  // A ~ U(-1/sqrt(d_in), 1/sqrt(d_in)), B = 0.
  static LoraAdapter init(RealMatrix frozen, std::size_t rank, double alpha, double dropout, std::uint64_t seed);

  double scale() const { return alpha / static_cast<double>(rank); }
  std::size_t trainable_count() const { return rank * (d_in + d_out); }
  std::size_t frozen_count() const { return d_in * d_out; }

  // W + scale * B * A.
  RealMatrix effective_weight() const;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(Stage::config, what) {}
};

double lora_scale(double alpha, std::size_t rank);

// Evaluation-mode forward pass. With `dropout_rng` set, an inverted dropout
// mask is applied to the adapter input only; the frozen path never sees it.
std::vector<double> lora_forward(const LoraAdapter& adapter, std::span<const double> x,
                                 std::mt19937_64* dropout_rng = nullptr);

// Gradients of the scalar sum(upstream .* y) with respect to the trainable
// factors. W is frozen and has no gradient.
struct LoraGradients {
  RealMatrix down;  // dL/dA
  RealMatrix up;    // dL/dB
};

LoraGradients lora_backward(const LoraAdapter& adapter, std::span<const double> x, std::span<const double> upstream);

struct LoraParamStats {
  std::size_t trainable = 0;
  std::size_t frozen = 0;
  double fraction = 0.0;  // trainable / (trainable + frozen)
};

// dims: (d_in, d_out) of every adapted matrix.
LoraParamStats lora_param_stats(std::span<const std::pair<std::size_t, std::size_t>> dims, std::size_t rank);

}  // namespace comment_mme::provider
