#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aol/experiment.hpp"
#include "aol/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw aol::ConfigError("--levels: '" + item + "' is not a number");
    if (!(v >= 0.0 && v < 1.0)) throw aol::ConfigError("--levels: " + item + " is outside [0, 1)");
    levels.push_back(v);
  }
  if (levels.empty()) throw aol::ConfigError("--levels: no levels given");
  return levels;
}

void print_summary(const aol::RunReport& report) {
  for (const auto& r : report.records) {
    std::printf("%-28s seed %-4llu test_acc %.4f final_acc %.4f mean_auc %.4f  (%.1fs)\n", r.tag().c_str(),
                static_cast<unsigned long long>(r.seed), r.test_accuracy, r.final_test_accuracy, r.mean_auc,
                r.wall_seconds);
  }
  for (const auto& f : report.failures) std::fprintf(stderr, "run failed: %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-on-label meta-training experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t jobs = 1;
  std::string out_dir;
  std::string levels_text;
  std::size_t trials = 20;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory (default: config 'output')");
  };
  auto* run = app.add_subcommand("run", "Run every seed and method of a config");
  add_common(run);
  auto* noise = app.add_subcommand("sweep-noise", "Sweep HS/SF/OC/AVG over noise levels");
  add_common(noise);
  noise->add_option("--levels", levels_text, "Comma-separated levels in [0, 1) (default: config sweep.levels)");
  auto* count = app.add_subcommand("sweep-annotators", "Grow the roster HS, AD, OC, SF, AVG from M=2 to 5");
  add_common(count);
  auto* verify = app.add_subcommand("verify", "Mixed-label loss identity and gradient checks");
  verify->add_option("--trials", trials, "Randomized trials per check")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  if (*verify) {
    bool ok = true;
    for (const auto& r : aol::run_verification(trials)) {
      std::printf("%s %-24s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
      ok = ok && r.passed;
    }
    return ok ? kOk : kRunFailure;
  }

  aol::ExperimentConfig config;
  std::vector<double> levels;
  try {
    config = aol::load_config(config_path);
    if (*noise) levels = levels_text.empty() ? config.sweep_levels : parse_levels(levels_text);
  } catch (const aol::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  }

  aol::RunOptions options{jobs, out_dir.empty() ? config.output : out_dir};
  try {
    aol::RunReport report;
    if (*run) report = aol::run_experiment(config, options);
    if (*noise) report = aol::sweep_noise(config, levels, options);
    if (*count) report = aol::sweep_annotators(config, options);
    print_summary(report);
    std::printf("config %s: %zu records written to %s\n", config.hash.c_str(), report.records.size(),
                options.out_dir.c_str());
    return report.ok() ? kOk : kRunFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return kRunFailure;
  }
}
