#include "pkd/pipeline/model_io.hpp"

#include <fstream>
#include <sstream>

namespace pkd {
namespace {

using nlohmann::json;

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

json tree_json(const DecisionTree& tree, int at = 0) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(at)];
  if (node.is_leaf()) return {{"value", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", tree_json(tree, node.left)},
          {"right", tree_json(tree, node.right)}};
}

int tree_from(const json& j, DecisionTree& tree, Index n_features) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("value")) {
    tree.nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
    return id;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || feature >= n_features) throw Error(Errc::MalformedModel, "tree feature index out of range");
  const double threshold = j.at("threshold").get<double>();
  const int left = tree_from(j.at("left"), tree, n_features);
  const int right = tree_from(j.at("right"), tree, n_features);
  tree.nodes[static_cast<std::size_t>(id)] = {feature, threshold, left, right, 0.0};
  return id;
}

json trees_json(const std::vector<DecisionTree>& trees) {
  json out = json::array();
  for (const auto& tree : trees) out.push_back(tree_json(tree));
  return out;
}

std::vector<DecisionTree> trees_from(const json& j, Index n_features) {
  std::vector<DecisionTree> trees;
  for (const auto& node : j) {
    DecisionTree tree;
    tree_from(node, tree, n_features);
    trees.push_back(std::move(tree));
  }
  return trees;
}

json mlp_json(const MlpModel& m) {
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < m.n_transforms(); ++l) {
    json rows = json::array();
    for (Index r = 0; r < m.weights[l].rows(); ++r) {
      const Vector row = m.weights[l].row(r).transpose();
      rows.push_back(vector_json(row));
    }
    weights.push_back(std::move(rows));
    biases.push_back(vector_json(m.biases[l]));
  }
  return {{"layer_sizes", m.layer_sizes}, {"activation", "relu"}, {"weights", weights}, {"biases", biases}};
}

MlpModel mlp_from(const json& j) {
  MlpModel m;
  m.layer_sizes = j.at("layer_sizes").get<std::vector<Index>>();
  if (j.at("activation").get<std::string>() != "relu") throw Error(Errc::MalformedModel, "unknown activation");
  for (const auto& layer : j.at("weights")) {
    const auto rows = layer.get<std::vector<std::vector<double>>>();
    const auto cols = rows.empty() ? 0 : rows.front().size();
    MlpModel::MatrixType w(static_cast<Index>(rows.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) throw Error(Errc::MalformedModel, "ragged weight matrix");
      for (std::size_t c = 0; c < cols; ++c) w(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    m.weights.push_back(std::move(w));
  }
  for (const auto& bias : j.at("biases")) m.biases.push_back(vector_from(bias));
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(Errc::MalformedModel, e.what());
  }
  return m;
}

json stack_json(const StackEnsembleModel& m) {
  return {
      {"n_folds", m.n_folds},
      {"svm", {{"w", vector_json(m.svm.w)}, {"b", m.svm.b}, {"platt_a", m.svm.platt_a}, {"platt_b", m.svm.platt_b}}},
      {"forest",
       {{"features_per_split", m.forest.features_per_split},
        {"seed", m.forest.seed},
        {"trees", trees_json(m.forest.trees)}}},
      {"gbm",
       {{"initial_score", m.gbm.initial_score},
        {"learning_rate", m.gbm.learning_rate},
        {"trees", trees_json(m.gbm.trees)}}},
      {"meta", {{"coefficients", vector_json(m.meta.coefficients)}, {"intercept", m.meta.intercept}}},
  };
}

StackEnsembleModel stack_from(const json& j) {
  StackEnsembleModel m;
  m.n_folds = j.at("n_folds").get<int>();
  const json& svm = j.at("svm");
  m.svm.w = vector_from(svm.at("w"));
  m.svm.b = svm.at("b").get<double>();
  m.svm.platt_a = svm.at("platt_a").get<double>();
  m.svm.platt_b = svm.at("platt_b").get<double>();
  const Index d = m.svm.w.size();
  const json& forest = j.at("forest");
  m.forest.features_per_split = forest.at("features_per_split").get<Index>();
  m.forest.seed = forest.at("seed").get<std::uint64_t>();
  m.forest.trees = trees_from(forest.at("trees"), d);
  if (m.forest.trees.empty()) throw Error(Errc::MalformedModel, "forest has no trees");
  const json& gbm = j.at("gbm");
  m.gbm.initial_score = gbm.at("initial_score").get<double>();
  m.gbm.learning_rate = gbm.at("learning_rate").get<double>();
  m.gbm.trees = trees_from(gbm.at("trees"), d);
  m.meta.coefficients = vector_from(j.at("meta").at("coefficients"));
  m.meta.intercept = j.at("meta").at("intercept").get<double>();
  if (m.meta.coefficients.size() != 3) throw Error(Errc::MalformedModel, "meta-classifier needs 3 coefficients");
  return m;
}

Index model_input_size(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, MlpModel>) return m.input_size();
        else return m.svm.w.size();
      },
      model);
}

}  // namespace

std::string model_kind(const AnyModel& model) { return std::holds_alternative<MlpModel>(model) ? "mlp" : "stack"; }

Vector predict_proba(const AnyModel& model, const Matrix& x) {
  if (const auto* mlp = std::get_if<MlpModel>(&model)) return predict_proba<double, Matrix>(*mlp, x);
  return predict_stack(std::get<StackEnsembleModel>(model), x).probability;
}

Vector predict_proba(const ModelBundle& bundle, const Matrix& raw_x) {
  if (bundle.scaler) return predict_proba(bundle.model, apply_scaler(*bundle.scaler, raw_x));
  return predict_proba(bundle.model, raw_x);
}

nlohmann::json to_json(const ModelBundle& bundle) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["model_kind"] = model_kind(bundle.model);
  doc["feature_names"] = bundle.feature_names;
  doc["scaler"] = bundle.scaler ? json{{"means", vector_json(bundle.scaler->means)},
                                        {"stds", vector_json(bundle.scaler->stds)}}
                                 : json(nullptr);
  doc["params"] = std::holds_alternative<MlpModel>(bundle.model) ? mlp_json(std::get<MlpModel>(bundle.model))
                                                                 : stack_json(std::get<StackEnsembleModel>(bundle.model));
  return doc;
}

ModelBundle model_from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(Errc::UnsupportedVersion, "model format_version " + std::to_string(version) + " (supported: " +
                                                std::to_string(kModelFormatVersion) + ")");
    }
    const std::string kind = doc.at("model_kind").get<std::string>();
    ModelBundle bundle;
    if (kind == "mlp") bundle.model = mlp_from(doc.at("params"));
    else if (kind == "stack") bundle.model = stack_from(doc.at("params"));
    else throw Error(Errc::MalformedModel, "unknown model_kind '" + kind + "'");
    bundle.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    if (!doc.at("scaler").is_null()) {
      bundle.scaler = ScalerParams{vector_from(doc["scaler"].at("means")), vector_from(doc["scaler"].at("stds"))};
    }
    const Index d = model_input_size(bundle.model);
    if (static_cast<Index>(bundle.feature_names.size()) != d ||
        (bundle.scaler && (bundle.scaler->means.size() != d || bundle.scaler->stds.size() != d))) {
      throw Error(Errc::MalformedModel, "feature names or scaler do not match the model input width");
    }
    return bundle;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedModel, e.what());
  }
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) { write_json(to_json(bundle), path); }

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open model " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedModel, path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace pkd
