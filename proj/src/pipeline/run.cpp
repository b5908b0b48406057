#include "pkd/pipeline/run.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "pkd/analysis/correlation.hpp"
#include "pkd/cluster.hpp"
#include "pkd/pipeline/artifacts.hpp"
#include "pkd/pipeline/metrics.hpp"
#include "pkd/pipeline/model_io.hpp"
#include "pkd/random.hpp"

namespace pkd {
namespace {

using nlohmann::json;

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void text(const std::string& s) {
    const std::uint64_t size = s.size();
    bytes(&size, sizeof size);
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Runs one pipeline stage, tagging failures with the stage name and recording wall time.
template <typename F>
auto stage(const char* name, json& timings, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  const auto record = [&] {
    timings[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      record();
    } else {
      auto result = body();
      record();
      return result;
    }
  } catch (const Error& e) {
    throw Error(name, e);
  } catch (const std::bad_alloc&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(name, Error(Errc::IoError, e.what()));
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!seed) throw Error(Errc::UsageError, "a seed is required (--seed or \"seed\" in the config)");
  if (csv.has_value() == synth.has_value()) {
    throw Error(Errc::ConfigError, "exactly one data source (csv or synth) is required");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(Errc::InvalidFraction, "test_fraction must lie in (0, 1)");
  if (k < 1) throw Error(Errc::InvalidK, "k must be at least 1");
  if (restarts < 1) throw Error(Errc::ConfigError, "restarts must be at least 1");
  if (correlation_top < 1) throw Error(Errc::ConfigError, "correlation top must be at least 1");
  if (synth) synth->validate();
  if (model == ModelChoice::Mlp) {
    for (Index h : mlp.hidden) {
      if (h < 1) throw Error(Errc::InvalidArchitecture, "hidden layer sizes must be positive");
    }
    mlp.train.validate();
  }
}

RunConfig run_config_from_json(const json& doc) {
  try {
    RunConfig c;
    if (doc.contains("seed") && !doc.at("seed").is_null()) c.seed = doc.at("seed").get<std::uint64_t>();

    const json data = value_or(doc, "data", json::object());
    if (data.contains("csv")) c.csv = data.at("csv").get<std::string>();
    c.schema.label_column = value_or<std::string>(data, "label_col", c.schema.label_column);
    if (data.contains("id_col") && !data.at("id_col").is_null()) c.schema.id_column = data.at("id_col").get<std::string>();
    c.schema.missing_tokens = value_or(data, "missing_tokens", c.schema.missing_tokens);
    if (data.contains("synth")) {
      const json& s = data.at("synth");
      SynthConfig synth;
      synth.n_samples = value_or(s, "n_samples", synth.n_samples);
      synth.n_features = value_or(s, "n_features", synth.n_features);
      synth.n_informative = value_or(s, "n_informative", synth.n_informative);
      synth.positive_fraction = value_or(s, "positive_fraction", synth.positive_fraction);
      synth.class_separation = value_or(s, "class_separation", synth.class_separation);
      if (s.contains("seed")) c.synth_seed = s.at("seed").get<std::uint64_t>();
      c.synth = synth;
    }

    const json model = value_or(doc, "model", json::object());
    const std::string kind = value_or<std::string>(model, "kind", "stack");
    if (kind == "mlp") c.model = ModelChoice::Mlp;
    else if (kind == "stack") c.model = ModelChoice::Stack;
    else throw Error(Errc::ConfigError, "model kind must be 'mlp' or 'stack'");
    const json mlp = value_or(model, "mlp", json::object());
    c.mlp.hidden = value_or(mlp, "hidden", c.mlp.hidden);
    c.mlp.train.epochs = value_or(mlp, "epochs", c.mlp.train.epochs);
    c.mlp.train.batch_size = value_or(mlp, "batch_size", c.mlp.train.batch_size);
    c.mlp.train.learning_rate = value_or(mlp, "learning_rate", c.mlp.train.learning_rate);
    c.mlp.train.l2 = value_or(mlp, "l2", c.mlp.train.l2);
    const json stack = value_or(model, "stack", json::object());
    c.stack.n_folds = value_or(stack, "n_folds", c.stack.n_folds);
    const json svm = value_or(stack, "svm", json::object());
    c.stack.svm.lambda = value_or(svm, "lambda", c.stack.svm.lambda);
    c.stack.svm.epochs = value_or(svm, "epochs", c.stack.svm.epochs);
    const json forest = value_or(stack, "forest", json::object());
    c.stack.forest.n_trees = value_or(forest, "n_trees", c.stack.forest.n_trees);
    c.stack.forest.max_depth = value_or(forest, "max_depth", c.stack.forest.max_depth);
    c.stack.forest.features_per_split = value_or(forest, "features_per_split", c.stack.forest.features_per_split);
    const json gbm = value_or(stack, "gbm", json::object());
    c.stack.gbm.n_rounds = value_or(gbm, "n_rounds", c.stack.gbm.n_rounds);
    c.stack.gbm.max_depth = value_or(gbm, "max_depth", c.stack.gbm.max_depth);
    c.stack.gbm.learning_rate = value_or(gbm, "learning_rate", c.stack.gbm.learning_rate);
    const json meta = value_or(stack, "meta", json::object());
    c.stack.meta.l2 = value_or(meta, "l2", c.stack.meta.l2);
    c.stack.meta.iters = value_or(meta, "iters", c.stack.meta.iters);

    const json split = value_or(doc, "split", json::object());
    c.test_fraction = value_or(split, "test_fraction", c.test_fraction);
    c.scale_before_split = value_or(split, "scale_before_split", c.scale_before_split);

    const json cluster = value_or(doc, "cluster", json::object());
    c.k = value_or(cluster, "k", c.k);
    c.restarts = value_or(cluster, "restarts", c.restarts);
    c.expression_column = value_or(cluster, "expression_column", c.expression_column);

    if (doc.contains("enrich") && !doc.at("enrich").is_null()) {
      const json& enrich = doc.at("enrich");
      c.annotations = enrich.at("annotations").get<std::string>();
      const std::string ns = value_or<std::string>(enrich, "namespace", "all");
      if (ns != "all") c.name_space = parse_go_namespace(ns);
    }

    const json corr = value_or(doc, "correlation", json::object());
    c.correlation_top = value_or(corr, "top", c.correlation_top);
    c.correlation_svg = value_or(corr, "svg", c.correlation_svg);

    c.out_dir = value_or<std::string>(doc, "out_dir", c.out_dir.string());
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ParseError) throw Error(Errc::ConfigError, e.detail());
    throw;
  }
}

json to_json(const RunConfig& c) {
  json data = json::object();
  if (c.csv) data["csv"] = c.csv->string();
  data["label_col"] = c.schema.label_column;
  data["id_col"] = c.schema.id_column ? json(*c.schema.id_column) : json(nullptr);
  data["missing_tokens"] = c.schema.missing_tokens;
  if (c.synth) {
    data["synth"] = {{"n_samples", c.synth->n_samples},
                     {"n_features", c.synth->n_features},
                     {"n_informative", c.synth->n_informative},
                     {"positive_fraction", c.synth->positive_fraction},
                     {"class_separation", c.synth->class_separation}};
    if (c.synth_seed) data["synth"]["seed"] = *c.synth_seed;
  }
  json doc;
  doc["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  doc["data"] = data;
  doc["model"] = {
      {"kind", c.model == ModelChoice::Mlp ? "mlp" : "stack"},
      {"mlp",
       {{"hidden", c.mlp.hidden},
        {"epochs", c.mlp.train.epochs},
        {"batch_size", c.mlp.train.batch_size},
        {"learning_rate", c.mlp.train.learning_rate},
        {"l2", c.mlp.train.l2}}},
      {"stack",
       {{"n_folds", c.stack.n_folds},
        {"svm", {{"lambda", c.stack.svm.lambda}, {"epochs", c.stack.svm.epochs}}},
        {"forest",
         {{"n_trees", c.stack.forest.n_trees},
          {"max_depth", c.stack.forest.max_depth},
          {"features_per_split", c.stack.forest.features_per_split}}},
        {"gbm",
         {{"n_rounds", c.stack.gbm.n_rounds},
          {"max_depth", c.stack.gbm.max_depth},
          {"learning_rate", c.stack.gbm.learning_rate}}},
        {"meta", {{"l2", c.stack.meta.l2}, {"iters", c.stack.meta.iters}}}}},
  };
  doc["split"] = {{"test_fraction", c.test_fraction}, {"scale_before_split", c.scale_before_split}};
  doc["cluster"] = {{"k", c.k}, {"restarts", c.restarts}, {"expression_column", c.expression_column}};
  doc["enrich"] = c.annotations ? json{{"annotations", c.annotations->string()},
                                       {"namespace", c.name_space ? to_string(*c.name_space) : "all"}}
                                : json(nullptr);
  doc["correlation"] = {{"top", c.correlation_top}, {"svg", c.correlation_svg}};
  doc["out_dir"] = c.out_dir.string();
  return doc;
}

RunSeeds derive_run_seeds(const RunConfig& config) {
  const std::uint64_t seed = config.seed.value_or(0);
  return {config.synth_seed.value_or(derive_seed(seed, 100)), derive_seed(seed, 101), derive_seed(seed, 102),
          derive_seed(seed, 103)};
}

std::string dataset_fingerprint(const Dataset& data) {
  Fnv1a h;
  const std::uint64_t shape[2] = {static_cast<std::uint64_t>(data.n()), static_cast<std::uint64_t>(data.d())};
  h.bytes(shape, sizeof shape);
  for (const auto& id : data.ids) h.text(id);
  for (const auto& name : data.feature_names) h.text(name);
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.d(); ++j) {
      const double v = data.x(i, j);
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      h.bytes(&bits, sizeof bits);
    }
    const std::int32_t label = data.y[i];
    h.bytes(&label, sizeof label);
  }
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h.value();
  return out.str();
}

std::string resolve_expression_column(const std::string& requested, const std::vector<std::string>& feature_names) {
  if (requested != "auto") return requested;
  for (const auto& name : feature_names) {
    std::string lowered = name;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "fold_change") return name;
  }
  return "mean";
}

json run_pipeline(const RunConfig& config) {
  json timings = json::object();
  stage("config", timings, [&] { config.validate(); });
  const RunSeeds seeds = derive_run_seeds(config);
  const auto& out_dir = config.out_dir;
  std::vector<std::string> artifacts;

  stage("output", timings, [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  });

  std::size_t dropped = 0;
  Dataset data = stage("load", timings, [&] {
    if (config.csv) {
      LoadedDataset loaded = load_csv(*config.csv, config.schema);
      dropped = loaded.dropped_rows;
      return std::move(loaded.data);
    }
    SynthConfig synth = *config.synth;
    synth.seed = seeds.synth;
    return generate(synth).data;
  });

  // Scaling happens either before the split (on every row) or after it (train rows only).
  std::optional<ScalerParams> early_scaler;
  if (config.scale_before_split) {
    early_scaler = stage("scale", timings, [&] { return fit_scaler(data.x); });
  }
  const Dataset scaled_all = [&] {
    if (!early_scaler) return data;
    Dataset scaled = data;
    scaled.x = apply_scaler(*early_scaler, data.x);
    return scaled;
  }();

  SplitResult parts = stage("split", timings, [&] { return split(scaled_all, config.test_fraction, seeds.split); });
  const ScalerParams scaler =
      early_scaler ? *early_scaler : stage("scale", timings, [&] { return fit_scaler(parts.train.x); });
  if (!early_scaler) {
    parts.train.x = apply_scaler(scaler, parts.train.x);
    parts.test.x = apply_scaler(scaler, parts.test.x);
  }

  ModelBundle bundle = stage("train", timings, [&] {
    ModelBundle b;
    b.feature_names = data.feature_names;
    b.scaler = scaler;
    if (config.model == ModelChoice::Mlp) {
      std::vector<Index> layers{parts.train.d()};
      layers.insert(layers.end(), config.mlp.hidden.begin(), config.mlp.hidden.end());
      layers.push_back(2);
      TrainConfig train_config = config.mlp.train;
      train_config.seed = derive_seed(seeds.model, 1);
      b.model = train(init_mlp(layers, derive_seed(seeds.model, 0)), parts.train, train_config).first;
    } else {
      b.model = train_stack(parts.train, config.stack, seeds.model);
    }
    return b;
  });
  stage("save-model", timings, [&] {
    save_model(bundle, out_dir / "model.json");
    artifacts.push_back("model.json");
  });

  const Metrics test_metrics = stage("evaluate", timings, [&] {
    const Vector p = predict_proba(bundle.model, parts.test.x);
    const Metrics m = evaluate((p.array() >= 0.5).cast<int>(), parts.test.y);
    write_json(to_json(m), out_dir / "metrics.json");
    artifacts.push_back("metrics.json");
    return m;
  });

  Dataset standardized = data;
  standardized.x = apply_scaler(scaler, data.x);
  const Vector probabilities = stage("predict", timings, [&] {
    Vector p = predict_proba(bundle.model, standardized.x);
    write_predictions_csv(out_dir / "predictions.csv", standardized.ids, p);
    artifacts.push_back("predictions.csv");
    return p;
  });

  const std::string expression_column = resolve_expression_column(config.expression_column, data.feature_names);
  const auto [cluster_result, top] = stage("cluster", timings, [&] {
    const auto points = build_cluster_space(standardized, probabilities, expression_column);
    KMeansResult result = kmeans(points, config.k, seeds.cluster, config.restarts);
    TopCluster t = top_cluster(result, points);
    write_cluster_assignments(out_dir / "clusters.csv", points, result);
    write_json(cluster_summary_json(result, t), out_dir / "clusters.json");
    artifacts.push_back("clusters.csv");
    artifacts.push_back("clusters.json");
    return std::make_pair(std::move(result), std::move(t));
  });

  json enrichment_summary = nullptr;
  if (config.annotations) {
    stage("enrich", timings, [&] {
      const auto annotations = load_annotations(*config.annotations);
      const std::set<std::string> target(top.member_ids.begin(), top.member_ids.end());
      const std::set<std::string> background(data.ids.begin(), data.ids.end());
      const auto records = enrich(target, background, annotations, config.name_space);
      std::ofstream out(out_dir / "enrichment.csv");
      if (!out) throw Error(Errc::IoError, "cannot write enrichment.csv");
      write_enrichment_csv(out, records);
      artifacts.push_back("enrichment.csv");
      enrichment_summary = {{"terms_tested", records.size()},
                            {"top_term", records.empty() ? json(nullptr) : json(records.front().term_id)}};
    });
  }

  stage("correlation", timings, [&] {
    const auto records = feature_label_correlation(data);
    std::optional<std::filesystem::path> svg;
    if (config.correlation_svg) svg = out_dir / "correlations.svg";
    emit_correlation_chart(records, config.correlation_top, out_dir / "correlations.csv", svg);
    artifacts.push_back("correlations.csv");
    if (svg) artifacts.push_back("correlations.svg");
  });

  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = to_json(config);
  manifest["seeds"] = {{"run", *config.seed},
                       {"synth", config.synth ? json(seeds.synth) : json(nullptr)},
                       {"split", seeds.split},
                       {"model", seeds.model},
                       {"cluster", seeds.cluster}};
  manifest["dataset"] = {{"rows", data.n()},
                         {"columns", data.d()},
                         {"dropped_rows", dropped},
                         {"positives", data.count_label(1)},
                         {"fingerprint", dataset_fingerprint(data)}};
  manifest["split"] = {{"train_rows", parts.train.n()}, {"test_rows", parts.test.n()}};
  manifest["metrics"] = to_json(test_metrics);
  manifest["cluster"] = {{"k", config.k},
                         {"expression_column", expression_column},
                         {"objective", cluster_result.objective},
                         {"top_cluster", top.cluster},
                         {"top_cluster_size", top.member_ids.size()}};
  manifest["enrichment"] = enrichment_summary;
  manifest["artifacts"] = artifacts;
  manifest["timings_ms"] = timings;
  manifest["created_at"] = utc_timestamp();
  stage("manifest", timings, [&] { write_json(manifest, out_dir / "manifest.json"); });
  return manifest;
}

}  // namespace pkd
