#pragma once

#include <string>

#include "comment_mme/ensemble.hpp"
#include "comment_mme/util.hpp"

namespace comment_mme::report {

// Weight heatmap: rows are categories in taxonomy order, columns providers,
// cell fill gray 255 * (1 - w), two-decimal label per cell.
std::string heatmap_svg(const ensemble::EnsembleWeights& weights, const ArtifactHeader& header);
std::string heatmap_csv(const ensemble::EnsembleWeights& weights, const ArtifactHeader& header);

// Mean weight of each provider across all categories.
std::string contribution_csv(const ensemble::EnsembleWeights& weights, const ArtifactHeader& header);

// Gray level (0 = black) used for a weight cell.
int gray_level(double weight);

}  // namespace comment_mme::report
