#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pkd/dataset.hpp"
#include "pkd/ensemble/stack.hpp"
#include "pkd/mlp.hpp"

namespace pkd {

inline constexpr int kModelFormatVersion = 1;

using AnyModel = std::variant<MlpModel, StackEnsembleModel>;

// A trained classifier together with the preprocessing it expects.
struct ModelBundle {
  AnyModel model;
  std::optional<ScalerParams> scaler;
  std::vector<std::string> feature_names;
};

std::string model_kind(const AnyModel& model);

// Positive-class probabilities for already-standardized rows.
Vector predict_proba(const AnyModel& model, const Matrix& x);

// Applies the bundle's scaler (if any) first.
Vector predict_proba(const ModelBundle& bundle, const Matrix& raw_x);

nlohmann::json to_json(const ModelBundle& bundle);
ModelBundle model_from_json(const nlohmann::json& doc);

// Versioned JSON document; doubles are written in shortest round-trip form, so
// a loaded model predicts bit-identically to the saved one.
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

// JSON helpers shared with the manifest writer.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace pkd
