#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sys/wait.h>

#include "aol/config.hpp"
#include "aol/experiment.hpp"
#include "aol/metrics.hpp"
#include "aol/results.hpp"

using namespace aol;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "dataset": {"synthetic": {"n_classes": 4, "dim": 6, "samples_per_class": 40}},
  "annotators": [{"kind": "HS", "noise_level": 0.3}, {"kind": "AD"}],
  "seeds": [1]
})";

const char* kReordered = R"({
  "seeds": [1],
  "annotators": [{"noise_level": 0.3, "kind": "HS"}, {"kind": "AD"}],
  "dataset": {"synthetic": {"samples_per_class": 40, "dim": 6, "n_classes": 4}}
})";

std::string tiny_config(const std::string& annotators, const std::string& methods, int epochs = 3,
                        double scale = 3.0, double std = 1.0) {
  return R"({"dataset": {"synthetic": {"n_classes": 4, "dim": 6, "samples_per_class": 40,
             "center_scale": )" +
         std::to_string(scale) + R"(, "cluster_std": )" + std::to_string(std) +
         R"(, "test_samples_per_class": 50}},
    "annotators": )" +
         annotators + R"(, "model": {"layers": [16, 8]},
    "meta": {"beta": 0.01, "attn_lr": 0.5, "epochs": )" +
         std::to_string(epochs) + R"(},
    "methods": )" + methods +
         R"(, "seeds": [3, 4], "sweep": {"levels": [0.1, 0.4], "level": 0.3}})";
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("aol_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AOL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ResultRecord sample_record() {
  ResultRecord r;
  r.config_hash = "0123456789abcdef";
  r.seed = 7;
  r.method = "baseline:2";
  r.sweep_kind = "noise";
  r.sweep_value = 0.30000000000000004;
  r.n_sets = 4;
  r.epochs = {{0, 0.6931471805599453, 0.25, 0.7, {0.3, 0.7}}, {1, 0.5, 1.0 / 3.0, 0.6, {0.1, 0.9}}};
  r.selected_epoch = 1;
  r.test_accuracy = 0.91;
  r.final_test_accuracy = 0.9;
  r.per_class_auc = {0.5, std::nullopt, 0.123456789012345678};
  r.mean_auc = 0.3117283945061728;
  r.wall_seconds = 1.25;
  return r;
}

}  // namespace

TEST(Config, DefaultsFilledAndHashStableUnderReordering) {
  const auto a = parse_config(kMinimal);
  const auto b = parse_config(kReordered);
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(a.hash.size(), 16u);
  EXPECT_DOUBLE_EQ(a.meta.alpha, 0.2);
  EXPECT_DOUBLE_EQ(a.meta.beta, 1e-4);
  EXPECT_DOUBLE_EQ(a.meta.k, 50.0);
  EXPECT_DOUBLE_EQ(a.meta.t_threshold, 0.5);
  EXPECT_EQ(a.meta.batch_size, 32u);
  EXPECT_DOUBLE_EQ(a.val_fraction, 0.2);
  ASSERT_EQ(a.methods.size(), 1u);
  EXPECT_EQ(a.methods[0].tag(), "ours");
  EXPECT_EQ(a.layers, (std::vector<std::size_t>{128, 64}));
}

TEST(Config, ThresholdOutOfRangeNamesKey) {
  const std::string text = R"({"dataset": {"synthetic": {}}, "annotators": [{"kind": "AD"}], "seeds": [0],
                               "meta": {"t_threshold": 1.5}})";
  EXPECT_NE(config_error(text).find("t_threshold"), std::string::npos);
}

TEST(Config, UnknownAndMissingKeys) {
  EXPECT_NE(config_error(R"({"dataset": {"synthetic": {}}, "annotators": [{"kind": "AD"}], "seeds": [0],
                             "meta": {"gamma": 1}})")
                .find("meta.gamma"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"dataset": {"synthetic": {}}, "annotators": [{"kind": "AD"}]})").find("seeds"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"dataset": {"synthetic": {}}, "annotators": [{"kind": "HS"}], "seeds": [0]})")
                .find("noise_level"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"dataset": {"synthetic": {}}, "annotators": [{"kind": "AD"}], "seeds": [0],
                             "method": "baseline:3"})")
                .find("does not exist"),
            std::string::npos);
  EXPECT_NE(config_error("{not json").find("not valid JSON"), std::string::npos);
}

TEST(Config, EveryFieldChangeMovesTheHash) {
  const auto base = parse_config(kMinimal).hash;
  const std::vector<std::pair<std::string, std::string>> edits = {
      {"\"seeds\": [1]", "\"seeds\": [2]"},
      {"\"dim\": 6", "\"dim\": 7"},
      {"\"noise_level\": 0.3", "\"noise_level\": 0.31"},
      {"\"seeds\": [1]", "\"seeds\": [1], \"meta\": {\"alpha\": 0.3}"},
      {"\"seeds\": [1]", "\"seeds\": [1], \"meta\": {\"k\": 40}"},
      {"\"seeds\": [1]", "\"seeds\": [1], \"method\": \"baseline:0\""},
      {"\"seeds\": [1]", "\"seeds\": [1], \"model\": {\"layers\": [32]}"},
      {"\"seeds\": [1]", "\"seeds\": [1], \"val_fraction\": 0.25"},
  };
  std::set<std::string> hashes{base};
  for (const auto& [from, to] : edits) {
    std::string text = kMinimal;
    text.replace(text.find(from), from.size(), to);
    EXPECT_TRUE(hashes.insert(parse_config(text).hash).second) << to;
  }
  // The output directory does not change what is computed.
  std::string moved = kMinimal;
  moved.replace(moved.find("\"seeds\""), 7, "\"output\": \"elsewhere\", \"seeds\"");
  EXPECT_EQ(parse_config(moved).hash, base);
}

TEST(Config, LoadReportsMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Metrics, AccuracyCases) {
  const std::vector<std::size_t> a{1, 2, 3, 4}, b{1, 2, 3, 4}, c{0, 0, 0, 0};
  EXPECT_EQ(accuracy(a, b), 1.0);
  EXPECT_EQ(accuracy(a, c), 0.0);
  EXPECT_THROW(accuracy(a, std::vector<std::size_t>{1}), std::invalid_argument);

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, 9);
  std::vector<std::size_t> truth(10000), guess(10000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = i % 10;
    guess[i] = pick(rng);
  }
  EXPECT_NEAR(accuracy(guess, truth), 0.10, 0.01);
}

TEST(Metrics, AucEndpointsAndErrors) {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  EXPECT_EQ(auc_roc(s, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(auc_roc(s, std::vector<int>{1, 1, 0, 0}), 0.0);
  EXPECT_EQ(auc_roc(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
  try {
    auc_roc(s, std::vector<int>{1, 1, 1, 1});
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("undefined AUC"), std::string::npos);
  }
}

TEST(Metrics, AucMatchesPairCountingOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 5 + t % 60;
    std::uniform_int_distribution<int> coarse(0, 6);  // frequent ties
    std::bernoulli_distribution coin(0.4);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = coarse(rng) / 6.0;
      labels[i] = coin(rng);
    }
    labels[0] = 1;
    labels[1] = 0;
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (labels[i] == 1 && labels[j] == 0) {
          pairs += 1;
          wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
        }
    EXPECT_NEAR(auc_roc(scores, labels), wins / pairs, 1e-12);
  }
}

TEST(Metrics, OneVsRestSkipsDegenerateClasses) {
  // Three classes, class 2 never appears in the truth.
  const std::vector<double> scores{0.9, 0.1, 0.0, 0.2, 0.8, 0.0, 0.7, 0.3, 0.0, 0.4, 0.6, 0.0};
  const std::vector<std::size_t> truth{0, 1, 0, 1};
  const auto s = one_vs_rest_auc(scores, truth, 3);
  ASSERT_EQ(s.per_class.size(), 3u);
  EXPECT_EQ(s.per_class[0].value(), 1.0);
  EXPECT_EQ(s.per_class[1].value(), 1.0);
  EXPECT_FALSE(s.per_class[2].has_value());
  EXPECT_EQ(s.mean, 1.0);
}

TEST(Results, CsvAndJsonlRoundTrip) {
  const auto dir = temp_dir("results");
  auto other = sample_record();
  other.method = "ours";
  other.sweep_kind = "";
  other.sweep_value.reset();
  other.per_class_auc = {};
  const std::vector<ResultRecord> records{sample_record(), other};
  write_csv(records, (dir / "r.csv").string());
  write_jsonl(records, (dir / "r.jsonl").string());
  EXPECT_EQ(read_csv((dir / "r.csv").string()), records);
  EXPECT_EQ(read_jsonl((dir / "r.jsonl").string()), records);
  EXPECT_EQ(from_csv_row(to_csv_row(records[0])), records[0]);
  EXPECT_EQ(from_json_line(to_json_line(records[1])), records[1]);
  fs::remove_all(dir);
}

TEST(Results, CsvHeaderMatchesDocumentedColumns) {
  const std::vector<std::string> documented{
      "config_hash",        "seed",           "method",           "sweep_kind",         "sweep_value",
      "n_sets",             "selected_epoch", "test_accuracy",    "final_test_accuracy", "mean_auc",
      "per_class_auc",      "epoch_train_loss", "epoch_val_accuracy", "epoch_val_loss",
      "epoch_attention_mean", "wall_seconds"};
  EXPECT_EQ(csv_columns(), documented);
  const auto dir = temp_dir("header");
  write_csv({sample_record()}, (dir / "r.csv").string());
  std::ifstream in(dir / "r.csv");
  std::string header;
  std::getline(in, header);
  std::string want;
  for (std::size_t i = 0; i < documented.size(); ++i) want += (i ? "," : "") + documented[i];
  EXPECT_EQ(header, want);
  fs::remove_all(dir);
}

TEST(Results, AggregateMeanAndSampleStddev) {
  std::vector<ResultRecord> records;
  for (double acc : {0.5, 0.7, 0.9}) {
    auto r = sample_record();
    r.method = "ours";
    r.sweep_value = 0.2;
    r.test_accuracy = acc;
    records.push_back(r);
  }
  auto b = sample_record();
  b.method = "baseline:0";
  b.sweep_value = 0.1;
  b.test_accuracy = 0.4;
  records.push_back(b);
  const auto points = aggregate(records);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_EQ(points[0].x, 0.1);
  EXPECT_EQ(points[0].stddev, 0.0);
  EXPECT_EQ(points[1].method, "ours");
  EXPECT_NEAR(points[1].mean, 0.7, 1e-15);
  EXPECT_NEAR(points[1].stddev, 0.2, 1e-15);
  EXPECT_EQ(points[1].n, 3u);
}

TEST(Experiment, DeterministicRecords) {
  const auto config = parse_config(tiny_config(R"([{"kind": "HS", "noise_level": 0.3}, {"kind": "AD"}])",
                                               R"(["ours", "baseline:0", "baseline_avg"])"));
  const auto a = run_experiment(config, {});
  const auto b = run_experiment(config, {2, ""});
  ASSERT_TRUE(a.ok());
  ASSERT_EQ(a.records.size(), 6u);
  ASSERT_EQ(b.records.size(), 6u);
  std::set<std::pair<std::uint64_t, std::string>> keys;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_TRUE(a.records[i].same_metrics(b.records[i])) << a.records[i].tag();
    EXPECT_EQ(a.records[i].config_hash, config.hash);
    EXPECT_EQ(a.records[i].epochs.size(), 3u);
    EXPECT_TRUE(keys.insert({a.records[i].seed, a.records[i].tag()}).second);
  }
}

TEST(Experiment, CleanBaselineOnSeparableData) {
  // Default widths; an 8-unit ReLU feature layer can leave a whole cluster dead.
  auto text = tiny_config(R"([{"kind": "HS", "noise_level": 0.0}])", R"(["baseline:0"])", 30, 6.0, 0.5);
  text.replace(text.find("[16, 8]"), 7, "[128, 64]");
  const auto config = parse_config(text);
  const auto report = run_experiment(config, {});
  ASSERT_TRUE(report.ok());
  for (const auto& r : report.records) EXPECT_GE(r.test_accuracy, 0.95) << "seed " << r.seed;
}

TEST(Experiment, WritesOutputs) {
  auto config = parse_config(tiny_config(R"([{"kind": "HS", "noise_level": 0.3}, {"kind": "AD"}])", R"(["ours"])", 1));
  config.trace = true;
  const auto dir = temp_dir("outputs");
  const auto report = run_experiment(config, {1, dir.string()});
  ASSERT_TRUE(report.ok());
  EXPECT_EQ(read_csv((dir / "results.csv").string()).size(), 2u);
  EXPECT_EQ(read_jsonl((dir / "results.jsonl").string()).size(), 2u);
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(dir / "traces")) traces += e.path().extension() == ".jsonl";
  EXPECT_EQ(traces, 2u);
  fs::remove_all(dir);
}

TEST(Sweeps, NoiseSweepBookkeeping) {
  const auto config = parse_config(tiny_config(R"([{"kind": "AD"}])", R"(["ours"])", 1));
  const auto report = sweep_noise(config, {0.1, 0.4}, {});
  ASSERT_TRUE(report.ok());
  // 2 levels x (ours + 4 per-set baselines) x 2 seeds.
  EXPECT_EQ(report.records.size(), 2u * 5u * 2u);
  std::set<std::tuple<std::string, std::uint64_t, std::string>> keys;
  for (const auto& r : report.records) {
    EXPECT_EQ(r.sweep_kind, "noise");
    EXPECT_EQ(r.n_sets, 4u);
    EXPECT_TRUE(keys.insert({r.config_hash, r.seed, r.tag()}).second);
  }
  EXPECT_THROW(sweep_noise(config, {1.0}, {}), std::invalid_argument);
}

TEST(Sweeps, AnnotatorSweepEnumeratesM) {
  const auto config = parse_config(tiny_config(R"([{"kind": "AD"}])", R"(["ours"])", 1));
  const auto report = sweep_annotators(config, {});
  ASSERT_TRUE(report.ok());
  ASSERT_EQ(report.records.size(), 4u * 2u);
  std::set<double> ms;
  for (const auto& r : report.records) {
    EXPECT_EQ(r.sweep_kind, "annotators");
    EXPECT_EQ(static_cast<double>(r.n_sets), r.sweep_value.value());
    ms.insert(*r.sweep_value);
  }
  EXPECT_EQ(ms, (std::set<double>{2, 3, 4, 5}));
}

TEST(Sweeps, RostersFollowTheDocumentedOrder) {
  const auto noise = noise_roster(0.3);
  ASSERT_EQ(noise.size(), 4u);
  EXPECT_EQ(noise[0].label(), "HS(0.3)");
  EXPECT_EQ(noise[3].kind, AnnotatorKind::Average);
  const auto five = annotator_roster(0.3, 5);
  ASSERT_EQ(five.size(), 5u);
  EXPECT_EQ(five[0].kind, AnnotatorKind::HammerSpammer);
  EXPECT_EQ(five[1].kind, AnnotatorKind::Adversarial);
  EXPECT_EQ(five[2].kind, AnnotatorKind::OrderedConfusion);
  EXPECT_EQ(five[3].kind, AnnotatorKind::StructuredFlips);
  EXPECT_EQ(five[4].kind, AnnotatorKind::Average);
}

TEST(Cli, ExitCodes) {
  const auto dir = temp_dir("cli");
  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"dataset": {"synthetic": {}}, "annotators": [{"kind": "AD"}], "seeds": [0], "meta": {"t_threshold": 1.5}})";
    std::ofstream good(dir / "good.json");
    good << tiny_config(R"([{"kind": "HS", "noise_level": 0.2}])", R"(["baseline:0"])", 1);
  }
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("run"), 2);
  EXPECT_EQ(run_cli("sweep-noise --config " + (dir / "good.json").string() + " --levels 0.1,x"), 2);
  EXPECT_EQ(run_cli("verify --trials 2"), 0);
  EXPECT_EQ(run_cli("run --config " + (dir / "good.json").string() + " --jobs 2 --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "results.csv"));
  fs::remove_all(dir);
}
