#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aol {

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // agreement with the noisy validation labels
  double val_loss = 0.0;
  std::vector<double> attention_mean;  // ours only

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

/// Outcome of one (config, seed, method[, sweep point]) run.
struct ResultRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string method;
  std::string sweep_kind;               // "", "noise" or "annotators"
  std::optional<double> sweep_value;    // noise level or label-set count
  std::size_t n_sets = 0;
  std::vector<EpochMetrics> epochs;
  std::size_t selected_epoch = 0;       // best noisy-validation accuracy
  double test_accuracy = 0.0;           // model from selected_epoch, clean test labels
  double final_test_accuracy = 0.0;     // model after the last epoch
  std::vector<std::optional<double>> per_class_auc;
  double mean_auc = 0.0;
  double wall_seconds = 0.0;

  std::string tag() const;  // method plus sweep point; unique per (config_hash, seed)

  // Field-by-field equality ignoring wall_seconds.
  bool same_metrics(const ResultRecord& other) const;
  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

// Fixed CSV column order.
const std::vector<std::string>& csv_columns();

void write_csv(const std::vector<ResultRecord>& records, const std::string& path);
std::vector<ResultRecord> read_csv(const std::string& path);
void write_jsonl(const std::vector<ResultRecord>& records, const std::string& path);
std::vector<ResultRecord> read_jsonl(const std::string& path);

std::string to_csv_row(const ResultRecord& record);
ResultRecord from_csv_row(const std::string& line);
std::string to_json_line(const ResultRecord& record);
ResultRecord from_json_line(const std::string& line);

struct PlotPoint {
  double x = 0.0;
  std::string method;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single seed
  std::size_t n = 0;
};

// Test accuracy grouped by (sweep_value, method), ordered by x then method.
std::vector<PlotPoint> aggregate(const std::vector<ResultRecord>& records);
void write_plot_csv(const std::vector<PlotPoint>& points, const std::string& path);

}  // namespace aol
