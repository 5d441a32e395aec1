#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comment_mme/corpus.hpp"
#include "comment_mme/error.hpp"
#include "comment_mme/matrix.hpp"
#include "comment_mme/provider.hpp"

namespace comment_mme::ensemble {

using corpus::Language;

// Per-(language, category) mixing weights over an ordered provider list.
struct EnsembleWeights {
  std::vector<std::string> providers;
  std::map<Language, RealMatrix> table;  // [categories x providers]

  std::span<const double> weights(Language language, std::size_t category) const;

  // Nonnegative, sums to 1 within 1e-9, one row per taxonomy category.
  void validate() const;

  // Adds the languages of `other`; provider lists must match.
  void merge(const EnsembleWeights& other);

  // Mean weight per provider across every category row.
  std::vector<double> contribution() const;
};

struct ProbabilityMatrix {
  Language language = Language::java;
  std::vector<std::string> ids;
  RealMatrix values;  // P(c|x) in [0, 1]
};

class Misaligned : public FitError {
 public:
  using FitError::FitError;
};

// P(c|x) = sum_m w_{m,c} * sigmoid(z_{m,c}).
ProbabilityMatrix combine(std::span<const provider::LogitMatrix> logits, const EnsembleWeights& weights);

enum class FitMethod { simplex_grid, gradient };

std::string_view to_string(FitMethod method);
FitMethod parse_fit_method(std::string_view name);

struct FitOptions {
  FitMethod method = FitMethod::simplex_grid;
  std::uint64_t seed = 0;
  double resolution = 0.05;   // simplex_grid
  double gamma = 2.0;         // gradient: focal exponent
  int steps = 500;            // gradient
  double learning_rate = 0.05;  // gradient
};

struct FitResult {
  EnsembleWeights weights;
  std::vector<double> objective;      // per category: validation F1 at 0.5 (grid) or final loss (gradient)
  std::vector<std::string> warnings;  // e.g. categories without positives
};

// Fits one weight vector per category of the labels' language from aligned
// validation logits (one matrix per provider, in provider order).
FitResult fit_weights(std::span<const provider::LogitMatrix> valid_logits, const corpus::LabelMatrix& valid_labels,
                      const FitOptions& options = {});

// Every point of the M-simplex with the given resolution, in descending
// lexicographic order (the first provider's weight varies slowest, largest first).
std::vector<std::vector<double>> simplex_grid(std::size_t providers, double resolution);

// -sum w log w.
double weight_entropy(std::span<const double> w);

// {"<lang>/<category>": {"<provider>": w, ...}, ...}
std::string weights_json(const EnsembleWeights& weights);
EnsembleWeights parse_weights_json(std::string_view text);

// One JSON object per line: {"id": ..., "probs": {"<lang>/<category>": p, ...}}.
// Lines of several languages may be mixed; rows come back sorted by id.
std::string probabilities_jsonl(const ProbabilityMatrix& probs);
std::map<Language, ProbabilityMatrix> parse_probabilities_jsonl(std::string_view text);

}  // namespace comment_mme::ensemble
