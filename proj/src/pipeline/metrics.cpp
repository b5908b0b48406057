#include "pkd/pipeline/metrics.hpp"

#include "pkd/error.hpp"

namespace pkd {

Metrics evaluate(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(predicted.size()) + " predictions for " +
                                          std::to_string(truth.size()) + " labels");
  }
  if (truth.size() == 0) throw Error(Errc::Empty, "nothing to evaluate");
  Metrics m;
  m.n = truth.size();
  for (Index i = 0; i < m.n; ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) throw Error(Errc::ParseError, "labels must be 0 or 1");
    if (p == 1 && t == 1) ++m.tp;
    else if (p == 1) ++m.fp;
    else if (t == 1) ++m.fn;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tn + m.tp) / static_cast<double>(m.n);
  m.precision_undefined = m.tp + m.fp == 0;
  m.recall_undefined = m.tp + m.fn == 0;
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = m.recall_undefined ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  return {
      {"n", m.n},
      {"accuracy", m.accuracy},
      {"confusion", {{"tn", m.tn}, {"fp", m.fp}, {"fn", m.fn}, {"tp", m.tp}}},
      {"precision", m.precision},
      {"recall", m.recall},
      {"precision_undefined", m.precision_undefined},
      {"recall_undefined", m.recall_undefined},
  };
}

}  // namespace pkd
