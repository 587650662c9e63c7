#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace aol {

// Fraction of exact matches.
double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> truth);

/// Rank-based ROC AUC (Mann-Whitney U / (n_pos * n_neg)). Tied scores share
/// their average rank, so a tie between a positive and a negative counts 1/2.
/// Throws std::invalid_argument when only one class is present.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct AucSummary {
  std::vector<std::optional<double>> per_class;  // empty when a class lacks positives or negatives
  double mean = 0.0;                              // over defined classes only
};

// scores: [S, N] row-major probabilities; truth: class index per sample.
AucSummary one_vs_rest_auc(std::span<const double> scores, std::span<const std::size_t> truth,
                           std::size_t n_classes);

}  // namespace aol
