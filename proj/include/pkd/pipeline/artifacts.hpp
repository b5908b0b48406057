#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "json.hpp"
#include "pkd/analysis/correlation.hpp"
#include "pkd/cluster.hpp"

namespace pkd {

// Writes the first min(top, records.size()) records as CSV (feature, r) and,
// when svg_path is set, a horizontal bar chart of the same rows. Output bytes
// depend only on the input.
void emit_correlation_chart(const std::vector<CorrelationRecord>& records, int top,
                            const std::filesystem::path& csv_path,
                            const std::optional<std::filesystem::path>& svg_path = std::nullopt);

void write_correlation_svg(std::ostream& out, const std::vector<CorrelationRecord>& records);

// id, probability, label
void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                           const Vector& probabilities, double threshold = 0.5);

// id, expression, probability, cluster
void write_cluster_assignments(const std::filesystem::path& path, const std::vector<ClusterPoint>& points,
                               const KMeansResult& result);

nlohmann::json cluster_summary_json(const KMeansResult& result, const TopCluster& top);

}  // namespace pkd
