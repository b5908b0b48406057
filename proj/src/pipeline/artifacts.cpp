#include "pkd/pipeline/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace pkd {
namespace {

std::string fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

std::string xml_escape(const std::string& s) {
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

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_correlation_svg(std::ostream& out, const std::vector<CorrelationRecord>& records) {
  constexpr double kLabelWidth = 160.0;
  constexpr double kPlotWidth = 480.0;
  constexpr double kBarHeight = 18.0;
  constexpr double kGap = 6.0;
  constexpr double kTop = 40.0;
  const double plot_height = static_cast<double>(records.size()) * (kBarHeight + kGap);
  const double width = kLabelWidth + kPlotWidth + 80.0;
  const double height = kTop + plot_height + 50.0;

  double extent = 0.0;
  for (const auto& r : records) extent = std::max(extent, std::abs(r.r));
  extent = extent > 0.0 ? std::min(1.0, std::ceil(extent * 10.0) / 10.0) : 1.0;
  const double zero_x = kLabelWidth + kPlotWidth / 2.0;
  const double scale = kPlotWidth / 2.0 / extent;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<text x=\"" << fixed(width / 2.0, 1) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << "Feature correlation with label</text>\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double y = kTop + static_cast<double>(i) * (kBarHeight + kGap);
    const double len = std::abs(records[i].r) * scale;
    const double x = records[i].r >= 0.0 ? zero_x : zero_x - len;
    out << "<text x=\"" << fixed(kLabelWidth - 8.0, 1) << "\" y=\"" << fixed(y + kBarHeight * 0.75, 1)
        << "\" text-anchor=\"end\">" << xml_escape(records[i].feature_name) << "</text>\n";
    out << "<rect x=\"" << fixed(x, 2) << "\" y=\"" << fixed(y, 1) << "\" width=\"" << fixed(len, 2)
        << "\" height=\"" << fixed(kBarHeight, 1) << "\" fill=\"" << (records[i].r >= 0.0 ? "#3b6ea8" : "#b5523b")
        << "\"/>\n";
    out << "<text x=\"" << fixed(kLabelWidth + kPlotWidth + 6.0, 1) << "\" y=\"" << fixed(y + kBarHeight * 0.75, 1)
        << "\">" << fixed(records[i].r, 4) << "</text>\n";
  }
  const double axis_y = kTop + plot_height;
  out << "<line x1=\"" << fixed(kLabelWidth, 1) << "\" y1=\"" << fixed(axis_y, 1) << "\" x2=\""
      << fixed(kLabelWidth + kPlotWidth, 1) << "\" y2=\"" << fixed(axis_y, 1) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fixed(zero_x, 1) << "\" y1=\"" << fixed(kTop - 4.0, 1) << "\" x2=\"" << fixed(zero_x, 1)
      << "\" y2=\"" << fixed(axis_y, 1) << "\" stroke=\"gray\"/>\n";
  for (double tick : {-extent, 0.0, extent}) {
    out << "<text x=\"" << fixed(zero_x + tick * scale, 1) << "\" y=\"" << fixed(axis_y + 16.0, 1)
        << "\" text-anchor=\"middle\">" << fixed(tick, 1) << "</text>\n";
  }
  out << "<text x=\"" << fixed(zero_x, 1) << "\" y=\"" << fixed(axis_y + 36.0, 1)
      << "\" text-anchor=\"middle\">Pearson r (point-biserial)</text>\n";
  out << "</svg>\n";
}

void emit_correlation_chart(const std::vector<CorrelationRecord>& records, int top,
                            const std::filesystem::path& csv_path,
                            const std::optional<std::filesystem::path>& svg_path) {
  if (top < 1) throw Error(Errc::InvalidHyperparameter, "top must be at least 1");
  const std::vector<CorrelationRecord> shown(records.begin(),
                                             records.begin() + std::min<std::ptrdiff_t>(top, static_cast<std::ptrdiff_t>(records.size())));
  auto csv = open_for_write(csv_path);
  csv << "feature,r\n" << std::setprecision(17);
  for (const auto& r : shown) csv << r.feature_name << ',' << r.r << '\n';
  if (!csv) throw Error(Errc::IoError, "write failed for " + csv_path.string());
  if (svg_path) {
    auto svg = open_for_write(*svg_path);
    write_correlation_svg(svg, shown);
    if (!svg) throw Error(Errc::IoError, "write failed for " + svg_path->string());
  }
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                           const Vector& probabilities, double threshold) {
  auto out = open_for_write(path);
  out << "id,probability,label\n" << std::setprecision(17);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double p = probabilities[static_cast<Index>(i)];
    out << ids[i] << ',' << p << ',' << (p >= threshold ? 1 : 0) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

void write_cluster_assignments(const std::filesystem::path& path, const std::vector<ClusterPoint>& points,
                               const KMeansResult& result) {
  auto out = open_for_write(path);
  out << "id,expression,probability,cluster\n" << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << points[i].id << ',' << points[i].expression << ',' << points[i].probability << ','
        << result.assignments[i] << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

nlohmann::json cluster_summary_json(const KMeansResult& result, const TopCluster& top) {
  nlohmann::json centroids = nlohmann::json::array();
  for (Index j = 0; j < result.centroids.rows(); ++j) {
    centroids.push_back({{"expression", result.centroids(j, 0)}, {"probability", result.centroids(j, 1)}});
  }
  return {{"k", result.centroids.rows()},
          {"centroids", centroids},
          {"objective", result.objective},
          {"iterations", result.iterations},
          {"seed", result.seed},
          {"top_cluster", top.cluster},
          {"top_cluster_ids", top.member_ids}};
}

}  // namespace pkd
