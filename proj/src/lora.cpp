#include "comment_mme/lora.hpp"

#include <cmath>
#include <string>

#include "comment_mme/util.hpp"

namespace comment_mme::provider {

double lora_scale(double alpha, std::size_t rank) {
  if (rank == 0) throw ConfigError("LoRA rank must be >= 1");
  return alpha / static_cast<double>(rank);
}

LoraAdapter LoraAdapter::init(RealMatrix frozen, std::size_t rank, double alpha, double dropout, std::uint64_t seed) {
  if (rank == 0) throw ConfigError("LoRA rank must be >= 1");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("LoRA dropout must lie in [0, 1)");
  LoraAdapter a;
  a.d_out = frozen.rows();
  a.d_in = frozen.cols();
  a.rank = rank;
  a.alpha = alpha;
  a.dropout = dropout;
  a.frozen = std::move(frozen);
  a.down = RealMatrix(rank, a.d_in);
  a.up = RealMatrix(a.d_out, rank, 0.0);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, a.d_in)));
  for (auto& v : a.down.data()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return a;
}

RealMatrix LoraAdapter::effective_weight() const {
  RealMatrix w = frozen;
  const double s = scale();
  for (std::size_t o = 0; o < d_out; ++o)
    for (std::size_t i = 0; i < d_in; ++i) {
      double acc = 0;
      for (std::size_t k = 0; k < rank; ++k) acc += up(o, k) * down(k, i);
      w(o, i) += s * acc;
    }
  return w;
}

std::vector<double> lora_forward(const LoraAdapter& adapter, std::span<const double> x, std::mt19937_64* dropout_rng) {
  if (x.size() != adapter.d_in)
    throw DimensionMismatch("LoRA input has " + std::to_string(x.size()) + " entries, expected " +
                            std::to_string(adapter.d_in));

  std::vector<double> y(adapter.d_out, 0.0);
  for (std::size_t o = 0; o < adapter.d_out; ++o) {
    double acc = 0;
    for (std::size_t i = 0; i < adapter.d_in; ++i) acc += adapter.frozen(o, i) * x[i];
    y[o] = acc;
  }

  std::vector<double> xa(x.begin(), x.end());
  if (dropout_rng && adapter.dropout > 0) {
    const double keep = 1.0 - adapter.dropout;
    for (auto& v : xa) v = uniform01(*dropout_rng) < keep ? v / keep : 0.0;
  }

  std::vector<double> h(adapter.rank, 0.0);
  for (std::size_t k = 0; k < adapter.rank; ++k)
    for (std::size_t i = 0; i < adapter.d_in; ++i) h[k] += adapter.down(k, i) * xa[i];

  const double s = adapter.scale();
  for (std::size_t o = 0; o < adapter.d_out; ++o) {
    double acc = 0;
    for (std::size_t k = 0; k < adapter.rank; ++k) acc += adapter.up(o, k) * h[k];
    y[o] += s * acc;
  }
  return y;
}

LoraGradients lora_backward(const LoraAdapter& adapter, std::span<const double> x, std::span<const double> upstream) {
  if (x.size() != adapter.d_in || upstream.size() != adapter.d_out)
    throw DimensionMismatch("LoRA backward: input or upstream gradient has the wrong length");
  const double s = adapter.scale();

  std::vector<double> h(adapter.rank, 0.0);  // A x
  for (std::size_t k = 0; k < adapter.rank; ++k)
    for (std::size_t i = 0; i < adapter.d_in; ++i) h[k] += adapter.down(k, i) * x[i];

  std::vector<double> gh(adapter.rank, 0.0);  // s * B^T g
  for (std::size_t k = 0; k < adapter.rank; ++k)
    for (std::size_t o = 0; o < adapter.d_out; ++o) gh[k] += s * adapter.up(o, k) * upstream[o];

  LoraGradients g{RealMatrix(adapter.rank, adapter.d_in), RealMatrix(adapter.d_out, adapter.rank)};
  for (std::size_t k = 0; k < adapter.rank; ++k)
    for (std::size_t i = 0; i < adapter.d_in; ++i) g.down(k, i) = gh[k] * x[i];
  for (std::size_t o = 0; o < adapter.d_out; ++o)
    for (std::size_t k = 0; k < adapter.rank; ++k) g.up(o, k) = s * upstream[o] * h[k];
  return g;
}

LoraParamStats lora_param_stats(std::span<const std::pair<std::size_t, std::size_t>> dims, std::size_t rank) {
  if (rank == 0) throw ConfigError("LoRA rank must be >= 1");
  if (dims.empty()) throw ConfigError("lora_param_stats needs at least one target matrix");
  LoraParamStats s;
  for (const auto& [d_in, d_out] : dims) {
    if (d_in == 0 || d_out == 0) throw ConfigError("target matrix dimensions must be positive");
    s.trainable += rank * (d_in + d_out);
    s.frozen += d_in * d_out;
  }
  s.fraction = static_cast<double>(s.trainable) / static_cast<double>(s.trainable + s.frozen);
  return s;
}

}  // namespace comment_mme::provider
