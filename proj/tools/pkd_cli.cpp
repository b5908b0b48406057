// pkd: command-line front end for the expression-table classification pipeline.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pkd/analysis/correlation.hpp"
#include "pkd/analysis/enrichment.hpp"
#include "pkd/cluster.hpp"
#include "pkd/pipeline/artifacts.hpp"
#include "pkd/pipeline/metrics.hpp"
#include "pkd/pipeline/model_io.hpp"
#include "pkd/pipeline/run.hpp"
#include "pkd/synthgen.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config;
  std::string data;
  std::string label_col;
  std::string id_col;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON run configuration");
  cmd->add_option("--data", args.data, "input CSV (header row, one label column)");
  cmd->add_option("--label-col", args.label_col, "label column name (default: label)");
  cmd->add_option("--id-col", args.id_col, "row identifier column");
  cmd->add_option("--seed", args.seed, "PRNG seed");
  cmd->add_option("--out-dir", args.out_dir, "output directory");
}

pkd::RunConfig base_config(const CommonArgs& args) {
  pkd::RunConfig config;
  if (!args.config.empty()) {
    std::ifstream in(args.config);
    if (!in) throw pkd::Error(pkd::Errc::IoError, "cannot open config " + args.config);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw pkd::Error(pkd::Errc::ConfigError, args.config + ": " + e.what());
    }
    config = pkd::run_config_from_json(doc);
  }
  if (!args.data.empty()) {
    config.csv = args.data;
    config.synth.reset();
  }
  if (!args.label_col.empty()) config.schema.label_column = args.label_col;
  if (!args.id_col.empty()) config.schema.id_column = args.id_col;
  if (args.seed) config.seed = args.seed;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  return config;
}

std::uint64_t require_seed(const pkd::RunConfig& config) {
  if (!config.seed) throw pkd::Error(pkd::Errc::UsageError, "this command needs --seed (or \"seed\" in --config)");
  return *config.seed;
}

pkd::Dataset load_data(const pkd::RunConfig& config, bool require_label = true) {
  if (!config.csv) throw pkd::Error(pkd::Errc::UsageError, "--data is required");
  pkd::CsvSchema schema = config.schema;
  schema.require_label = require_label;
  auto loaded = pkd::load_csv(*config.csv, schema);
  if (loaded.dropped_rows > 0) {
    std::cerr << "dropped " << loaded.dropped_rows << " of " << loaded.raw_rows << " rows with missing values\n";
  }
  return std::move(loaded.data);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw pkd::Error(pkd::Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expression-table disease classifier: synthesis, training, clustering, enrichment"};
  app.require_subcommand(1);

  // synth
  CommonArgs synth_args;
  pkd::SynthConfig synth_config;
  std::string synth_name = "synthetic";
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic expression table");
  add_common(synth, synth_args);
  synth->add_option("--n-samples", synth_config.n_samples, "rows")->capture_default_str();
  synth->add_option("--n-features", synth_config.n_features, "columns")->capture_default_str();
  synth->add_option("--n-informative", synth_config.n_informative, "informative columns")->capture_default_str();
  synth->add_option("--positive-fraction", synth_config.positive_fraction, "share of label-1 rows")->capture_default_str();
  synth->add_option("--class-separation", synth_config.class_separation, "centroid offset per informative axis")
      ->capture_default_str();
  synth->add_option("--name", synth_name, "output file stem")->capture_default_str();

  // train
  CommonArgs train_args;
  std::string model_kind;
  std::optional<double> test_fraction;
  std::vector<pkd::Index> hidden;
  std::optional<int> epochs, batch_size, folds, n_trees, max_depth, gbm_rounds;
  std::optional<double> learning_rate, l2, svm_lambda;
  bool scale_before_split = false;
  auto* train = app.add_subcommand("train", "split, standardize, fit a classifier and report held-out metrics");
  add_common(train, train_args);
  train->add_option("--model", model_kind, "mlp or stack")->check(CLI::IsMember({"mlp", "stack"}));
  train->add_option("--test-fraction", test_fraction, "held-out share (default 0.2)");
  train->add_option("--hidden", hidden, "MLP hidden layer sizes");
  train->add_option("--epochs", epochs, "MLP epochs");
  train->add_option("--batch-size", batch_size, "MLP mini-batch size");
  train->add_option("--learning-rate", learning_rate, "MLP SGD step size");
  train->add_option("--l2", l2, "MLP weight decay");
  train->add_option("--folds", folds, "stacking folds");
  train->add_option("--n-trees", n_trees, "random forest trees");
  train->add_option("--max-depth", max_depth, "random forest depth");
  train->add_option("--gbm-rounds", gbm_rounds, "boosting rounds");
  train->add_option("--svm-lambda", svm_lambda, "linear SVM regularization");
  train->add_flag("--scale-before-split", scale_before_split, "fit the scaler on every row before splitting");

  // eval
  CommonArgs eval_args;
  std::string eval_model;
  auto* eval = app.add_subcommand("eval", "score a saved model against a labeled table");
  add_common(eval, eval_args);
  eval->add_option("--model", eval_model, "model.json")->required();

  // predict
  CommonArgs predict_args;
  std::string predict_model;
  double threshold = 0.5;
  auto* predict = app.add_subcommand("predict", "write positive-class probabilities for every row");
  add_common(predict, predict_args);
  predict->add_option("--model", predict_model, "model.json")->required();
  predict->add_option("--threshold", threshold, "label threshold (ties positive)")->capture_default_str();

  // cluster
  CommonArgs cluster_args;
  std::string cluster_model;
  std::optional<int> k, restarts;
  std::string expression_col;
  auto* cluster = app.add_subcommand("cluster", "k-means on (expression, predicted probability)");
  add_common(cluster, cluster_args);
  cluster->add_option("--model", cluster_model, "model.json supplying probabilities and the scaler")->required();
  cluster->add_option("--k", k, "clusters (default 3)");
  cluster->add_option("--restarts", restarts, "k-means++ restarts (default 10)");
  cluster->add_option("--expression-col", expression_col, "column name, 'mean' or 'auto'");

  // rank-features
  CommonArgs rank_args;
  int top = 20;
  bool no_svg = false;
  auto* rank = app.add_subcommand("rank-features", "rank features by correlation with the label");
  add_common(rank, rank_args);
  rank->add_option("--top", top, "rows to keep")->capture_default_str();
  rank->add_flag("--no-svg", no_svg, "skip the bar chart");

  // enrich
  CommonArgs enrich_args;
  std::string target_path, background_path, annotations_path, name_space = "all";
  auto* enrich = app.add_subcommand("enrich", "hypergeometric GO enrichment of a gene list");
  add_common(enrich, enrich_args);
  enrich->add_option("--target", target_path, "target gene ids, one per line")->required();
  enrich->add_option("--background", background_path, "background gene ids, one per line")->required();
  enrich->add_option("--annotations", annotations_path, "annotation TSV")->required();
  enrich->add_option("--namespace", name_space, "process, function or all")
      ->check(CLI::IsMember({"process", "function", "all"}))
      ->capture_default_str();

  // pipeline
  CommonArgs pipeline_args;
  std::string pipeline_model;
  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write a manifest");
  add_common(pipeline, pipeline_args);
  pipeline->add_option("--model", pipeline_model, "mlp or stack")->check(CLI::IsMember({"mlp", "stack"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      const pkd::RunConfig config = base_config(synth_args);
      pkd::SynthConfig c = synth_config;
      c.seed = require_seed(config);
      const fs::path dir = synth_args.out_dir.empty() ? fs::path(".") : fs::path(synth_args.out_dir);
      ensure_dir(dir);
      const pkd::SynthDataset generated = pkd::generate(c);
      pkd::save_csv(dir / (synth_name + ".csv"), generated.data);
      pkd::write_json({{"n_samples", c.n_samples},
                       {"n_features", c.n_features},
                       {"n_informative", c.n_informative},
                       {"positive_fraction", c.positive_fraction},
                       {"class_separation", c.class_separation},
                       {"seed", c.seed},
                       {"informative_features", generated.informative_features}},
                      dir / (synth_name + ".json"));
      std::cout << "wrote " << (dir / (synth_name + ".csv")).string() << " (" << generated.data.n() << " x "
                << generated.data.d() << ", " << generated.data.count_label(1) << " positive)\n";
    } else if (train->parsed()) {
      pkd::RunConfig config = base_config(train_args);
      const std::uint64_t seed = require_seed(config);
      if (!model_kind.empty()) config.model = model_kind == "mlp" ? pkd::ModelChoice::Mlp : pkd::ModelChoice::Stack;
      if (test_fraction) config.test_fraction = *test_fraction;
      if (!hidden.empty()) config.mlp.hidden = hidden;
      if (epochs) config.mlp.train.epochs = *epochs;
      if (batch_size) config.mlp.train.batch_size = *batch_size;
      if (learning_rate) config.mlp.train.learning_rate = *learning_rate;
      if (l2) config.mlp.train.l2 = *l2;
      if (folds) config.stack.n_folds = *folds;
      if (n_trees) config.stack.forest.n_trees = *n_trees;
      if (max_depth) config.stack.forest.max_depth = *max_depth;
      if (gbm_rounds) config.stack.gbm.n_rounds = *gbm_rounds;
      if (svm_lambda) config.stack.svm.lambda = *svm_lambda;
      if (scale_before_split) config.scale_before_split = true;
      if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
        throw pkd::Error(pkd::Errc::InvalidFraction, "--test-fraction must lie in (0, 1)");
      }

      const pkd::Dataset data = load_data(config);
      const pkd::RunSeeds seeds = pkd::derive_run_seeds(config);
      pkd::Dataset all = data;
      std::optional<pkd::ScalerParams> scaler;
      if (config.scale_before_split) {
        scaler = pkd::fit_scaler(all.x);
        all.x = pkd::apply_scaler(*scaler, all.x);
      }
      pkd::SplitResult parts = pkd::split(all, config.test_fraction, seeds.split);
      if (!scaler) {
        scaler = pkd::fit_scaler(parts.train.x);
        parts.train.x = pkd::apply_scaler(*scaler, parts.train.x);
        parts.test.x = pkd::apply_scaler(*scaler, parts.test.x);
      }
      pkd::ModelBundle bundle{{}, scaler, data.feature_names};
      if (config.model == pkd::ModelChoice::Mlp) {
        std::vector<pkd::Index> layers{parts.train.d()};
        layers.insert(layers.end(), config.mlp.hidden.begin(), config.mlp.hidden.end());
        layers.push_back(2);
        pkd::TrainConfig tc = config.mlp.train;
        tc.seed = pkd::derive_seed(seeds.model, 1);
        auto [model, history] = pkd::train(pkd::init_mlp(layers, pkd::derive_seed(seeds.model, 0)), parts.train, tc);
        std::cerr << "final epoch loss " << history.loss.back() << ", training accuracy " << history.accuracy.back()
                  << '\n';
        bundle.model = std::move(model);
      } else {
        bundle.model = pkd::train_stack(parts.train, config.stack, seeds.model);
      }
      ensure_dir(config.out_dir);
      pkd::save_model(bundle, config.out_dir / "model.json");
      const pkd::Vector p = pkd::predict_proba(bundle.model, parts.test.x);
      const json metrics = pkd::to_json(pkd::evaluate((p.array() >= 0.5).cast<int>(), parts.test.y));
      pkd::write_json(metrics, config.out_dir / "metrics.json");
      std::cout << metrics.dump(2) << '\n';
    } else if (eval->parsed()) {
      const pkd::RunConfig config = base_config(eval_args);
      const pkd::ModelBundle bundle = pkd::load_model(eval_model);
      const pkd::Dataset data = load_data(config);
      const pkd::Vector p = pkd::predict_proba(bundle, data.x);
      const json metrics = pkd::to_json(pkd::evaluate((p.array() >= 0.5).cast<int>(), data.y));
      if (!eval_args.out_dir.empty()) {
        ensure_dir(config.out_dir);
        pkd::write_json(metrics, config.out_dir / "metrics.json");
      }
      std::cout << metrics.dump(2) << '\n';
    } else if (predict->parsed()) {
      const pkd::RunConfig config = base_config(predict_args);
      const pkd::ModelBundle bundle = pkd::load_model(predict_model);
      const pkd::Dataset data = load_data(config, false);
      const pkd::Vector p = pkd::predict_proba(bundle, data.x);
      ensure_dir(config.out_dir);
      pkd::write_predictions_csv(config.out_dir / "predictions.csv", data.ids, p, threshold);
      std::cout << "wrote " << (config.out_dir / "predictions.csv").string() << '\n';
    } else if (cluster->parsed()) {
      pkd::RunConfig config = base_config(cluster_args);
      const std::uint64_t seed = require_seed(config);
      if (k) config.k = *k;
      if (restarts) config.restarts = *restarts;
      if (!expression_col.empty()) config.expression_column = expression_col;
      const pkd::ModelBundle bundle = pkd::load_model(cluster_model);
      pkd::Dataset data = load_data(config, false);
      const pkd::Vector p = pkd::predict_proba(bundle, data.x);
      if (bundle.scaler) data.x = pkd::apply_scaler(*bundle.scaler, data.x);
      const std::string column = pkd::resolve_expression_column(config.expression_column, data.feature_names);
      const auto points = pkd::build_cluster_space(data, p, column);
      const auto result = pkd::kmeans(points, config.k, pkd::derive_run_seeds(config).cluster, config.restarts);
      const auto best = pkd::top_cluster(result, points);
      ensure_dir(config.out_dir);
      pkd::write_cluster_assignments(config.out_dir / "clusters.csv", points, result);
      json summary = pkd::cluster_summary_json(result, best);
      summary["run_seed"] = seed;
      summary["expression_column"] = column;
      pkd::write_json(summary, config.out_dir / "clusters.json");
      std::cout << "top cluster " << best.cluster << " with " << best.member_ids.size() << " rows\n";
    } else if (rank->parsed()) {
      const pkd::RunConfig config = base_config(rank_args);
      const pkd::Dataset data = load_data(config);
      ensure_dir(config.out_dir);
      std::optional<fs::path> svg;
      if (!no_svg) svg = config.out_dir / "correlations.svg";
      const auto records = pkd::feature_label_correlation(data);
      pkd::emit_correlation_chart(records, top, config.out_dir / "correlations.csv", svg);
      for (std::size_t i = 0; i < std::min<std::size_t>(records.size(), static_cast<std::size_t>(std::max(top, 0))); ++i) {
        std::cout << records[i].feature_name << '\t' << records[i].r << '\n';
      }
    } else if (enrich->parsed()) {
      const pkd::RunConfig config = base_config(enrich_args);
      std::optional<pkd::GoNamespace> ns;
      if (name_space != "all") ns = pkd::parse_go_namespace(name_space);
      const auto records = pkd::enrich(pkd::load_gene_set(target_path), pkd::load_gene_set(background_path),
                                       pkd::load_annotations(annotations_path), ns);
      ensure_dir(config.out_dir);
      std::ofstream out(config.out_dir / "enrichment.csv");
      if (!out) throw pkd::Error(pkd::Errc::IoError, "cannot write enrichment.csv");
      pkd::write_enrichment_csv(out, records);
      pkd::write_enrichment_csv(std::cout, records);
    } else if (pipeline->parsed()) {
      pkd::RunConfig config = base_config(pipeline_args);
      if (!pipeline_model.empty()) {
        config.model = pipeline_model == "mlp" ? pkd::ModelChoice::Mlp : pkd::ModelChoice::Stack;
      }
      const json manifest = pkd::run_pipeline(config);
      std::cout << "test accuracy " << manifest["metrics"]["accuracy"].get<double>() << "; artifacts in "
                << config.out_dir.string() << '\n';
    }
  } catch (const pkd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pkd::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
