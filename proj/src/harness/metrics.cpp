#include "aol/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace aol {

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> truth) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc_roc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("undefined AUC: only one class present");
  const double np = static_cast<double>(n_pos);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

AucSummary one_vs_rest_auc(std::span<const double> scores, std::span<const std::size_t> truth,
                           std::size_t n_classes) {
  const std::size_t s = truth.size();
  if (scores.size() != s * n_classes) throw std::invalid_argument("one_vs_rest_auc: score matrix shape mismatch");
  AucSummary out;
  out.per_class.resize(n_classes);
  std::vector<double> column(s);
  std::vector<int> labels(s);
  double total = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < s; ++i) {
      column[i] = scores[i * n_classes + c];
      labels[i] = truth[i] == c;
      positives += static_cast<std::size_t>(labels[i]);
    }
    if (positives == 0 || positives == s) continue;
    out.per_class[c] = auc_roc(column, labels);
    total += *out.per_class[c];
    ++defined;
  }
  out.mean = defined ? total / static_cast<double>(defined) : 0.0;
  return out;
}

}  // namespace aol
