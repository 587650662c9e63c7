#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aol/config.hpp"
#include "aol/results.hpp"

namespace aol {

struct RunOptions {
  std::size_t jobs = 1;
  std::string out_dir;  // empty: nothing is written
};

/// Records of every run that completed, in job order, plus one message per
/// failed run. Failed runs never discard the completed ones.
struct RunReport {
  std::vector<ResultRecord> records;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// Training, validation and test data of one seed.
struct SeedData {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;  // clean labels only
};

// Builds the dataset for one seed, attaches the roster and splits off the
// validation part.
SeedData build_seed_data(const ExperimentConfig& config, std::uint64_t seed);

// Fresh classifier for the seed: He-initialised MLP of widths
// {input, config.layers...}.
Classifier initial_model(const ExperimentConfig& config, const LabeledDataset& train, std::uint64_t seed);

/// One (config, seed, method) run on prepared data. Iteration traces are
/// appended to *trace when given (ours only).
ResultRecord run_single(const ExperimentConfig& config, const SeedData& data, std::uint64_t seed,
                        const Method& method, std::vector<IterationTrace>* trace = nullptr);

// Every seed x method of the config.
RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options);

// HS/SF/OC at each level plus their AVG; ours and the four per-set
// baselines. Records carry sweep_kind "noise" and the level.
RunReport sweep_noise(const ExperimentConfig& config, const std::vector<double>& levels,
                      const RunOptions& options);

// Ours on the growing roster HS, AD, OC, SF, AVG (M = 2..5) at
// config.sweep_level. Records carry sweep_kind "annotators" and M.
RunReport sweep_annotators(const ExperimentConfig& config, const RunOptions& options);

std::vector<AnnotatorSpec> noise_roster(double level);
std::vector<AnnotatorSpec> annotator_roster(double level, std::size_t m);

}  // namespace aol
