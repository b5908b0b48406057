#include "pkd/analysis/correlation.hpp"

#include <algorithm>
#include <cmath>

namespace pkd {

std::vector<CorrelationRecord> feature_label_correlation(const Dataset& data) {
  const Index positives = data.count_label(1);
  if (positives == 0 || positives == data.n()) {
    throw Error(Errc::DegenerateClass, "correlation with the label needs both classes");
  }
  const Vector label = data.y.cast<double>();
  std::vector<CorrelationRecord> records;
  records.reserve(static_cast<std::size_t>(data.d()));
  for (Index j = 0; j < data.d(); ++j) {
    const auto column = data.x.col(j);
    const double spread = column.maxCoeff() - column.minCoeff();
    records.push_back({data.feature_names[static_cast<std::size_t>(j)], spread > 0.0 ? pearson(column, label) : 0.0});
  }
  std::sort(records.begin(), records.end(), [](const CorrelationRecord& a, const CorrelationRecord& b) {
    const double ra = std::abs(a.r);
    const double rb = std::abs(b.r);
    if (ra != rb) return ra > rb;
    return a.feature_name < b.feature_name;
  });
  return records;
}

}  // namespace pkd
