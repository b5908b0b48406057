#pragma once

#include "json.hpp"
#include "pkd/types.hpp"

namespace pkd {

struct Metrics {
  Index n = 0;
  Index tn = 0;
  Index fp = 0;
  Index fn = 0;
  Index tp = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // Set when the denominator was zero and the value was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

Metrics evaluate(const Labels& predicted, const Labels& truth);

nlohmann::json to_json(const Metrics& metrics);

}  // namespace pkd
