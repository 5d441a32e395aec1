#include "comment_mme/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace comment_mme::report {

namespace {

constexpr int kLabelWidth = 240;
constexpr int kCellWidth = 110;
constexpr int kCellHeight = 28;
constexpr int kTitleHeight = 36;
constexpr int kHeaderHeight = 28;

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string display_language(corpus::Language lang) {
  std::string s(corpus::to_string(lang));
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

void require_weights(const ensemble::EnsembleWeights& weights) {
  if (weights.providers.empty() || weights.table.empty()) throw FitError("empty ensemble weight table");
}

}  // namespace

int gray_level(double weight) {
  return static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(weight, 0.0, 1.0))));
}

std::string heatmap_svg(const ensemble::EnsembleWeights& weights, const ArtifactHeader& header) {
  require_weights(weights);
  std::size_t rows = 0;
  for (const auto& [lang, m] : weights.table) rows += m.rows();
  const std::size_t cols = weights.providers.size();
  const int width = kLabelWidth + static_cast<int>(cols) * kCellWidth + 10;
  const int height = kTitleHeight + kHeaderHeight + static_cast<int>(rows) * kCellHeight + 10;

  std::ostringstream out;
  out << header.render("<!--");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<text x=\"10\" y=\"22\" font-size=\"15\" font-weight=\"bold\">Learned ensemble weights per category</text>\n";
  for (std::size_t p = 0; p < cols; ++p) {
    const int x = kLabelWidth + static_cast<int>(p) * kCellWidth + kCellWidth / 2;
    out << "<text x=\"" << x << "\" y=\"" << kTitleHeight + 18 << "\" text-anchor=\"middle\">"
        << xml_escape(weights.providers[p]) << "</text>\n";
  }
  int row = 0;
  for (auto lang : corpus::kLanguages) {
    auto it = weights.table.find(lang);
    if (it == weights.table.end()) continue;
    const auto tax = corpus::taxonomy(lang);
    for (std::size_t c = 0; c < tax.size(); ++c, ++row) {
      const int y = kTitleHeight + kHeaderHeight + row * kCellHeight;
      out << "<text x=\"10\" y=\"" << y + 18 << "\">" << display_language(lang) << " / "
          << xml_escape(corpus::display_name(tax[c])) << "</text>\n";
      for (std::size_t p = 0; p < cols; ++p) {
        const double w = it->second(c, p);
        const int g = gray_level(w);
        const int x = kLabelWidth + static_cast<int>(p) * kCellWidth;
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCellWidth << "\" height=\"" << kCellHeight
            << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\" stroke=\"#999999\"/>\n";
        out << "<text x=\"" << x + kCellWidth / 2 << "\" y=\"" << y + 18 << "\" text-anchor=\"middle\" fill=\""
            << (g < 128 ? "white" : "black") << "\">" << format_fixed(w, 2) << "</text>\n";
      }
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string heatmap_csv(const ensemble::EnsembleWeights& weights, const ArtifactHeader& header) {
  require_weights(weights);
  std::ostringstream out;
  out << header.render("#");
  out << "language,category";
  for (const auto& p : weights.providers) out << ',' << p;
  out << '\n';
  for (auto lang : corpus::kLanguages) {
    auto it = weights.table.find(lang);
    if (it == weights.table.end()) continue;
    const auto tax = corpus::taxonomy(lang);
    for (std::size_t c = 0; c < tax.size(); ++c) {
      out << corpus::to_string(lang) << ',' << tax[c];
      for (std::size_t p = 0; p < weights.providers.size(); ++p) out << ',' << format_real(it->second(c, p));
      out << '\n';
    }
  }
  return out.str();
}

std::string contribution_csv(const ensemble::EnsembleWeights& weights, const ArtifactHeader& header) {
  require_weights(weights);
  const auto mean = weights.contribution();
  std::ostringstream out;
  out << header.render("#");
  out << "provider,mean_weight\n";
  for (std::size_t p = 0; p < mean.size(); ++p) out << weights.providers[p] << ',' << format_real(mean[p]) << '\n';
  return out.str();
}

}  // namespace comment_mme::report
