#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "helpers.hpp"
#include "json.hpp"
#include "pkd/analysis/correlation.hpp"
#include "pkd/ensemble/stack.hpp"
#include "pkd/pipeline/artifacts.hpp"
#include "pkd/pipeline/metrics.hpp"
#include "pkd/pipeline/model_io.hpp"
#include "pkd/pipeline/run.hpp"
#include "pkd/synthgen.hpp"

using namespace pkd;
using nlohmann::json;
using pkd::test::code_of;
namespace fs = std::filesystem;

namespace {

RunConfig small_mlp_run(const fs::path& out_dir, std::uint64_t seed = 5) {
  RunConfig c;
  c.synth = SynthConfig{200, 30, 5, 0.2, 1.5, 0};
  c.model = ModelChoice::Mlp;
  c.mlp.hidden = {8};
  c.mlp.train.epochs = 15;
  c.seed = seed;
  c.out_dir = out_dir;
  return c;
}

RunConfig small_stack_run(const fs::path& out_dir) {
  RunConfig c = small_mlp_run(out_dir);
  c.model = ModelChoice::Stack;
  c.stack.n_folds = 3;
  c.stack.forest.n_trees = 10;
  c.stack.gbm.n_rounds = 10;
  return c;
}

json without_volatile(json manifest) {
  manifest.erase("timings_ms");
  manifest.erase("created_at");
  manifest["config"].erase("out_dir");
  return manifest;
}

std::vector<CorrelationRecord> ranked_records(int n) {
  std::vector<CorrelationRecord> out;
  for (int i = 0; i < n; ++i) out.push_back({"gene" + std::to_string(i), (i % 2 ? -1.0 : 1.0) * (1.0 - 0.03 * i)});
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string command = std::string(PKD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("evaluate examples") {
    const Labels ten = test::labels({1, 0, 1, 1, 0, 0, 1, 0, 1, 0});
    CHECK(evaluate(ten, ten).accuracy == 1.0);

    const Metrics m = evaluate(test::labels({1, 1, 0, 0}), test::labels({1, 0, 1, 0}));
    CHECK(m.accuracy == 0.5);
    CHECK(m.tn == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.tp == 1);
    CHECK(m.tn + m.fp + m.fn + m.tp == m.n);

    const Metrics none = evaluate(test::labels({0, 0, 0}), test::labels({0, 0, 0}));
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.precision_undefined);
    CHECK(none.recall_undefined);

    CHECK(code_of([] { evaluate(test::labels({0, 1}), test::labels({0})); }) == Errc::LengthMismatch);
    CHECK(code_of([] { evaluate(Labels(0), Labels(0)); }) == Errc::Empty);
  }

  TEST_CASE("mlp model round-trips exactly") {
    const fs::path dir = test::scratch_dir("mlp_io");
    Rng rng(3);
    MlpModel m = init_mlp({6, 5, 4, 2}, 9);
    for (auto& b : m.biases) b.setRandom();
    const Matrix x = test::random_matrix(25, 6, rng);
    ScalerParams scaler = fit_scaler(x);
    ModelBundle bundle{m, scaler, {"a", "b", "c", "d", "e", "f"}};
    save_model(bundle, dir / "model.json");
    const ModelBundle back = load_model(dir / "model.json");
    CHECK(back.feature_names == bundle.feature_names);
    CHECK(predict_proba(back, x) == predict_proba(bundle, x));
    CHECK(back.scaler->means == scaler.means);
    const MlpModel& loaded = std::get<MlpModel>(back.model);
    for (std::size_t l = 0; l < m.n_transforms(); ++l) CHECK(loaded.weights[l] == m.weights[l]);
  }

  TEST_CASE("stack model round-trips exactly") {
    const fs::path dir = test::scratch_dir("stack_io");
    const Dataset d = generate({120, 10, 3, 0.3, 1.0, 2}).data;
    StackConfig config;
    config.n_folds = 3;
    config.forest.n_trees = 5;
    config.gbm.n_rounds = 5;
    const ModelBundle bundle{train_stack(d, config, 1), std::nullopt, d.feature_names};
    save_model(bundle, dir / "model.json");
    const ModelBundle back = load_model(dir / "model.json");
    CHECK(model_kind(back.model) == "stack");
    CHECK_FALSE(back.scaler.has_value());
    CHECK(predict_proba(back, d.x) == predict_proba(bundle, d.x));
    save_model(back, dir / "again.json");
    CHECK(test::slurp(dir / "model.json") == test::slurp(dir / "again.json"));
  }

  TEST_CASE("model loading failures") {
    const fs::path dir = test::scratch_dir("bad_models");
    const ModelBundle bundle{init_mlp({3, 4, 2}, 1), std::nullopt, {"a", "b", "c"}};
    save_model(bundle, dir / "model.json");
    const std::string text = test::slurp(dir / "model.json");
    write_text(dir / "truncated.json", text.substr(0, text.size() / 2));
    CHECK(code_of([&] { load_model(dir / "truncated.json"); }) == Errc::MalformedModel);

    json doc = json::parse(text);
    doc["format_version"] = 999;
    write_text(dir / "future.json", doc.dump());
    CHECK(code_of([&] { load_model(dir / "future.json"); }) == Errc::UnsupportedVersion);

    doc["format_version"] = 1;
    doc["model_kind"] = "svm";
    write_text(dir / "kind.json", doc.dump());
    CHECK(code_of([&] { load_model(dir / "kind.json"); }) == Errc::MalformedModel);

    CHECK(code_of([&] { load_model(dir / "absent.json"); }) == Errc::IoError);
  }

  TEST_CASE("correlation chart truncates, clamps and renders deterministically") {
    const fs::path dir = test::scratch_dir("chart");
    const auto records = ranked_records(30);
    emit_correlation_chart(records, 20, dir / "top20.csv", dir / "a.svg");
    const auto top20 = lines(test::slurp(dir / "top20.csv"));
    REQUIRE(top20.size() == 21);
    CHECK(top20[0] == "feature,r");
    CHECK(top20[1].rfind("gene0,", 0) == 0);
    CHECK(top20[20].rfind("gene19,", 0) == 0);

    emit_correlation_chart(records, 100, dir / "all.csv");
    CHECK(lines(test::slurp(dir / "all.csv")).size() == 31);
    CHECK_FALSE(fs::exists(dir / "b.svg"));

    emit_correlation_chart(records, 20, dir / "again.csv", dir / "b.svg");
    CHECK(test::slurp(dir / "a.svg") == test::slurp(dir / "b.svg"));
    const std::string svg = test::slurp(dir / "a.svg");
    CHECK(svg.find("<svg") == 0);
    std::size_t bars = 0;
    for (std::size_t at = svg.find("<rect"); at != std::string::npos; at = svg.find("<rect", at + 1)) ++bars;
    CHECK(bars >= 20);

    CHECK(code_of([&] { emit_correlation_chart(records, 0, dir / "x.csv"); }) == Errc::InvalidHyperparameter);
  }

  TEST_CASE("run config json round-trips") {
    RunConfig c = small_stack_run("somewhere");
    c.annotations = "terms.tsv";
    c.name_space = GoNamespace::Function;
    const RunConfig back = run_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(code_of([] { run_config_from_json(json{{"model", {{"kind", "tree"}}}}); }) == Errc::ConfigError);
    RunConfig unseeded = c;
    unseeded.seed.reset();
    CHECK(code_of([&] { unseeded.validate(); }) == Errc::UsageError);
    RunConfig two_sources = c;
    two_sources.csv = "x.csv";
    CHECK(code_of([&] { two_sources.validate(); }) == Errc::ConfigError);
  }

  TEST_CASE("expression column resolution") {
    CHECK(resolve_expression_column("auto", {"a", "Fold_Change"}) == "Fold_Change");
    CHECK(resolve_expression_column("auto", {"a", "b"}) == "mean");
    CHECK(resolve_expression_column("b", {"a", "b"}) == "b");
  }

  TEST_CASE("fingerprint tracks every cell, label and id") {
    const Dataset d = generate({20, 6, 2, 0.3, 1.0, 4}).data;
    const std::string base = dataset_fingerprint(d);
    CHECK(base.rfind("fnv1a64:", 0) == 0);
    CHECK(dataset_fingerprint(Dataset(d)) == base);
    Rng rng(2);
    std::uniform_int_distribution<Index> row(0, d.n() - 1), col(0, d.d() - 1);
    for (int trial = 0; trial < 20; ++trial) {
      Dataset cell = d;
      cell.x(row(rng), col(rng)) += 1e-9;
      CHECK(dataset_fingerprint(cell) != base);
      Dataset label = d;
      const Index r = row(rng);
      label.y[r] = 1 - label.y[r];
      CHECK(dataset_fingerprint(label) != base);
      Dataset id = d;
      id.ids[static_cast<std::size_t>(row(rng))] += "x";
      CHECK(dataset_fingerprint(id) != base);
    }
  }

  TEST_CASE("pipeline writes every listed artifact") {
    const fs::path dir = test::scratch_dir("pipeline_small");
    std::ofstream(dir / "terms.tsv") << "term_id\tterm_name\tnamespace\tgene_id\n"
                                        "GO:1\tfirst\tprocess\ts0001\n"
                                        "GO:1\tfirst\tprocess\ts0002\n"
                                        "GO:2\tsecond\tfunction\ts0003\n";
    RunConfig c = small_stack_run(dir / "out");
    c.annotations = dir / "terms.tsv";
    const json manifest = run_pipeline(c);
    const auto artifacts = manifest.at("artifacts").get<std::vector<std::string>>();
    for (const char* name : {"model.json", "metrics.json", "predictions.csv", "clusters.csv", "clusters.json",
                             "enrichment.csv", "correlations.csv", "correlations.svg"}) {
      CHECK(std::find(artifacts.begin(), artifacts.end(), name) != artifacts.end());
    }
    for (const auto& name : artifacts) {
      CHECK(fs::exists(c.out_dir / name));
      CHECK(fs::file_size(c.out_dir / name) > 0);
    }
    CHECK(fs::file_size(c.out_dir / "manifest.json") > 0);
    CHECK(manifest["metrics"]["n"] == 40);
    CHECK(manifest["split"]["train_rows"] == 160);
    CHECK(manifest["cluster"]["k"] == 3);
    CHECK(manifest["dataset"]["fingerprint"].get<std::string>().rfind("fnv1a64:", 0) == 0);
    CHECK(json::parse(test::slurp(c.out_dir / "manifest.json")) == manifest);
  }

  TEST_CASE("missing annotations fail in the enrich stage") {
    const fs::path dir = test::scratch_dir("pipeline_enrich");
    RunConfig c = small_mlp_run(dir);
    c.annotations = dir / "does_not_exist.tsv";
    try {
      run_pipeline(c);
      FAIL("expected an enrich failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::IoError);
      CHECK(std::string(e.what()).rfind("enrich: IoError", 0) == 0);
    }
  }

  TEST_CASE("stage errors name the stage") {
    const fs::path dir = test::scratch_dir("pipeline_csv");
    write_text(dir / "bad.csv", "id,f1,label\na,1,0\nb,x,1\n");
    RunConfig c;
    c.csv = dir / "bad.csv";
    c.schema.id_column = "id";
    c.seed = 1;
    c.out_dir = dir / "out";
    try {
      run_pipeline(c);
      FAIL("expected a load failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ParseError);
      CHECK(std::string(e.what()).rfind("load: ParseError", 0) == 0);
    }
  }

  TEST_CASE("identical runs give identical manifests and model bytes") {
    const fs::path dir = test::scratch_dir("pipeline_repeat");
    const json a = run_pipeline(small_stack_run(dir / "a"));
    const json b = run_pipeline(small_stack_run(dir / "b"));
    CHECK(without_volatile(a) == without_volatile(b));
    CHECK(test::slurp(dir / "a" / "model.json") == test::slurp(dir / "b" / "model.json"));
    CHECK(test::slurp(dir / "a" / "clusters.csv") == test::slurp(dir / "b" / "clusters.csv"));

    RunConfig other = small_stack_run(dir / "c");
    other.seed = 6;
    CHECK(without_volatile(run_pipeline(other))["seeds"] != without_volatile(a)["seeds"]);
  }

  TEST_CASE("test rows never influence the scaler or the model") {
    const fs::path dir = test::scratch_dir("pipeline_leak");
    const Dataset d = generate({150, 12, 4, 0.3, 1.0, 3}).data;
    save_csv(dir / "data.csv", d);

    RunConfig c;
    c.csv = dir / "data.csv";
    c.schema.id_column = "id";
    c.model = ModelChoice::Mlp;
    c.mlp.hidden = {6};
    c.mlp.train.epochs = 10;
    c.seed = 11;
    c.out_dir = dir / "original";
    const json original = run_pipeline(c);

    // Shuffle test rows among same-label test positions and distort their values.
    const SplitResult parts = split(d, c.test_fraction, derive_run_seeds(c).split);
    Dataset tampered = d;
    Rng rng(1);
    for (int label : {0, 1}) {
      std::vector<Index> rows;
      for (Index r : parts.test_rows) {
        if (d.y[r] == label) rows.push_back(r);
      }
      std::vector<Index> shuffled = rows;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        tampered.x.row(rows[i]) = d.x.row(shuffled[i]) * 50.0;
        tampered.ids[static_cast<std::size_t>(rows[i])] = d.ids[static_cast<std::size_t>(shuffled[i])];
      }
    }
    save_csv(dir / "tampered.csv", tampered);
    c.csv = dir / "tampered.csv";
    c.out_dir = dir / "tampered";
    const json after = run_pipeline(c);
    CHECK(test::slurp(dir / "original" / "model.json") == test::slurp(dir / "tampered" / "model.json"));
    CHECK(original["split"] == after["split"]);
    CHECK(original["dataset"]["fingerprint"] != after["dataset"]["fingerprint"]);

    // Fitting on every row is the leaky ordering and does see the change.
    c.scale_before_split = true;
    c.out_dir = dir / "leaky";
    run_pipeline(c);
    CHECK(test::slurp(dir / "original" / "model.json") != test::slurp(dir / "leaky" / "model.json"));
  }

  TEST_CASE("scaled synthetic stack run") {
    const fs::path dir = test::scratch_dir("pipeline_scaled");
    RunConfig c;
    c.synth = SynthConfig{1000, 500, 50, 0.2, 1.0, 0};
    c.model = ModelChoice::Stack;
    c.seed = 2024;
    c.out_dir = dir;
    const json manifest = run_pipeline(c);
    CHECK(manifest["metrics"]["n"] == 200);
    CHECK(manifest["metrics"]["accuracy"].get<double>() >= 0.5);
    const auto summary = json::parse(test::slurp(dir / "clusters.json"));
    CHECK(summary["centroids"].size() == 3);
    const auto cluster_lines = lines(test::slurp(dir / "clusters.csv"));
    CHECK(cluster_lines.size() == 1001);
    const auto corr = lines(test::slurp(dir / "correlations.csv"));
    CHECK(corr.size() == 21);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("subcommands run end to end") {
    const fs::path dir = test::scratch_dir("cli");
    const fs::path log = dir / "log.txt";
    const std::string d = dir.string();

    CHECK(run_cli("synth --n-samples 120 --n-features 15 --n-informative 4 --class-separation 1.5 --seed 3 --out-dir " + d, log) == 0);
    REQUIRE(fs::exists(dir / "synthetic.csv"));
    CHECK(fs::exists(dir / "synthetic.json"));
    const std::string data = " --data " + (dir / "synthetic.csv").string() + " --id-col id";

    CHECK(run_cli("train" + data + " --model mlp --hidden 6 --epochs 10 --seed 4 --out-dir " + d + "/train", log) == 0);
    CHECK(fs::exists(dir / "train" / "model.json"));
    CHECK(fs::exists(dir / "train" / "metrics.json"));
    CHECK(run_cli("train" + data + " --model stack --folds 3 --n-trees 5 --gbm-rounds 5 --seed 4 --out-dir " + d + "/stack", log) == 0);

    const std::string model = " --model " + (dir / "train" / "model.json").string();
    CHECK(run_cli("eval" + data + model + " --out-dir " + d + "/eval", log) == 0);
    CHECK(json::parse(test::slurp(dir / "eval" / "metrics.json"))["n"] == 120);
    CHECK(run_cli("predict" + data + model + " --out-dir " + d + "/predict", log) == 0);
    CHECK(lines(test::slurp(dir / "predict" / "predictions.csv")).size() == 121);
    CHECK(run_cli("cluster" + data + model + " --k 2 --seed 1 --out-dir " + d + "/cluster", log) == 0);
    CHECK(fs::file_size(dir / "cluster" / "clusters.csv") > 0);
    CHECK(run_cli("rank-features" + data + " --top 5 --out-dir " + d + "/rank", log) == 0);
    CHECK(lines(test::slurp(dir / "rank" / "correlations.csv")).size() == 6);
    CHECK(fs::exists(dir / "rank" / "correlations.svg"));

    write_text(dir / "target.txt", "s0001\ns0002\n");
    write_text(dir / "background.txt", "s0001\ns0002\ns0003\ns0004\n");
    write_text(dir / "terms.tsv", "term_id\tterm_name\tnamespace\tgene_id\nGO:1\tt\tprocess\ts0001\nGO:1\tt\tprocess\ts0002\n");
    CHECK(run_cli("enrich --target " + d + "/target.txt --background " + d + "/background.txt --annotations " + d +
                      "/terms.tsv --out-dir " + d + "/enrich",
                  log) == 0);
    CHECK(lines(test::slurp(dir / "enrich" / "enrichment.csv")).size() == 2);

    write_text(dir / "run.json", R"({"seed": 8, "data": {"synth": {"n_samples": 100, "n_features": 12, "n_informative": 3}},
      "model": {"kind": "mlp", "mlp": {"hidden": [4], "epochs": 5}}})");
    CHECK(run_cli("pipeline --config " + d + "/run.json --out-dir " + d + "/pipeline", log) == 0);
    CHECK(fs::exists(dir / "pipeline" / "manifest.json"));
  }

  TEST_CASE("exit codes") {
    const fs::path dir = test::scratch_dir("cli_codes");
    const fs::path log = dir / "log.txt";
    const std::string d = dir.string();
    CHECK(run_cli("", log) == 2);
    CHECK(run_cli("synth --bogus", log) == 2);
    CHECK(run_cli("synth --n-samples 10 --out-dir " + d, log) == 2);
    CHECK(run_cli("synth --n-informative 99 --n-features 5 --seed 1 --out-dir " + d, log) == 2);

    write_text(dir / "bad.csv", "id,f1,label\na,1,0\nb,abc,1\n");
    CHECK(run_cli("rank-features --data " + d + "/bad.csv --id-col id --out-dir " + d, log) == 3);
    CHECK(test::slurp(log).find("ParseError") != std::string::npos);
    CHECK(run_cli("rank-features --data " + d + "/missing.csv --out-dir " + d, log) == 3);

    CHECK(run_cli("synth --n-samples 40 --n-features 3 --n-informative 1 --seed 2 --out-dir " + d, log) == 0);
    CHECK(run_cli("train --data " + d + "/synthetic.csv --id-col id --model mlp --hidden 3 --epochs 30 --learning-rate 1e250 "
                      "--seed 1 --out-dir " + d + "/diverge",
                  log) == 4);
    CHECK(run_cli("train --data " + d + "/synthetic.csv --id-col id --test-fraction 1.5 --seed 1", log) == 2);
  }
}
