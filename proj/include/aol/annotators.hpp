#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aol {

using ClassIndex = std::uint8_t;
using FlipPair = std::pair<std::size_t, std::size_t>;

/// Row-stochastic label-corruption law: entry (i, j) is the probability that
/// a sample of true class i is labeled j.
class ConfusionMatrix {
 public:
  // Validates entries in [0,1], rows summing to 1 within 1e-12, n >= 2.
  static ConfusionMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static ConfusionMatrix identity(std::size_t n);

  std::size_t n_classes() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  std::vector<double> row(std::size_t i) const;
  const std::vector<double>& entries() const { return entries_; }

  // One row per line, space-separated, 17 significant digits.
  std::string to_text() const;
  static ConfusionMatrix from_text(const std::string& text);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  ConfusionMatrix(std::size_t n, std::vector<double> entries);
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

enum class AnnotatorKind { HammerSpammer, StructuredFlips, OrderedConfusion, Adversarial, Average };

std::string to_string(AnnotatorKind kind);
AnnotatorKind annotator_kind_from_string(const std::string& name);

struct AnnotatorSpec {
  AnnotatorKind kind = AnnotatorKind::HammerSpammer;
  double noise_level = 0.0;            // ignored by Adversarial and Average
  std::vector<FlipPair> flip_pairs;    // StructuredFlips only; empty means the CIFAR-10 defaults
  std::vector<AnnotatorSpec> components;  // Average only

  std::string label() const;  // e.g. "HS(0.3)", "AD", "AVG"
};

// airplane->bird, cat->dog, deer->cat, horse->deer, ship->airplane, truck->automobile
std::vector<FlipPair> default_cifar10_flip_pairs();

ConfusionMatrix cm_hammer_spammer(std::size_t n, double noise_level);
ConfusionMatrix cm_structured_flips(std::size_t n, double noise_level,
                                    const std::vector<FlipPair>& pairs);
ConfusionMatrix cm_ordered_confusion(std::size_t n, double noise_level);
ConfusionMatrix cm_adversarial(std::size_t n);
ConfusionMatrix cm_average(const std::vector<ConfusionMatrix>& parts);

ConfusionMatrix build_confusion_matrix(const AnnotatorSpec& spec, std::size_t n);

// 1 - mean diagonal, i.e. expected error under a uniform class prior.
double noise_level_of(const ConfusionMatrix& cm);

struct NoisyLabelSet {
  std::vector<ClassIndex> labels;
  std::optional<AnnotatorSpec> annotator;
  std::uint64_t seed = 0;
};

// Samples each label independently from the row of its true class.
NoisyLabelSet corrupt(const std::vector<ClassIndex>& clean, const ConfusionMatrix& cm,
                      std::uint64_t seed);

// Row-normalized co-occurrence counts of (clean, noisy).
ConfusionMatrix empirical_cm(const std::vector<ClassIndex>& clean,
                             const std::vector<ClassIndex>& noisy, std::size_t n_classes);

}  // namespace aol
