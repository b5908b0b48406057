#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pkd/analysis/enrichment.hpp"
#include "pkd/dataset.hpp"
#include "pkd/ensemble/stack.hpp"
#include "pkd/mlp.hpp"
#include "pkd/synthgen.hpp"

namespace pkd {

enum class ModelChoice { Mlp, Stack };

struct MlpSettings {
  std::vector<Index> hidden{100};
  TrainConfig train;  // train.seed is replaced by a seed derived from the run seed
};

struct RunConfig {
  // Exactly one of csv / synth.
  std::optional<std::filesystem::path> csv;
  CsvSchema schema;
  std::optional<SynthConfig> synth;  // seed derived from the run seed unless synth_seed is set
  std::optional<std::uint64_t> synth_seed;

  ModelChoice model = ModelChoice::Stack;
  MlpSettings mlp;
  StackConfig stack;

  std::optional<std::uint64_t> seed;  // required before running
  double test_fraction = 0.2;
  bool scale_before_split = false;  // reproduces the fit-on-everything ordering

  int k = 3;
  int restarts = 10;
  std::string expression_column = "auto";  // "auto": fold_change column if present, else "mean"

  // Enrichment runs when annotations is set.
  std::optional<std::filesystem::path> annotations;
  std::optional<GoNamespace> name_space;

  int correlation_top = 20;
  bool correlation_svg = true;

  std::filesystem::path out_dir = "out";

  void validate() const;
};

// Reads the JSON run configuration. Missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);

struct RunSeeds {
  std::uint64_t synth;
  std::uint64_t split;
  std::uint64_t model;
  std::uint64_t cluster;
};

RunSeeds derive_run_seeds(const RunConfig& config);

// FNV-1a 64 over ids, feature names, cell bit patterns and labels.
std::string dataset_fingerprint(const Dataset& data);

// Resolves "auto" against the dataset's feature names.
std::string resolve_expression_column(const std::string& requested, const std::vector<std::string>& feature_names);

// Runs load/generate, split, scaling, training, evaluation, clustering,
// optional enrichment and correlation ranking, writing every artifact and
// manifest.json into config.out_dir. Failures are rethrown as
// "<stage>: <Kind>: detail".
nlohmann::json run_pipeline(const RunConfig& config);

}  // namespace pkd
