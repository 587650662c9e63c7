#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <algorithm>
#include <numeric>

#include "aol/annotators.hpp"

using namespace aol;

namespace {

std::vector<ClassIndex> balanced(std::size_t n, std::size_t per_class) {
  std::vector<ClassIndex> out;
  for (std::size_t c = 0; c < n; ++c) out.insert(out.end(), per_class, static_cast<ClassIndex>(c));
  return out;
}

void expect_row_stochastic(const ConfusionMatrix& cm) {
  for (std::size_t i = 0; i < cm.n_classes(); ++i) {
    double total = 0;
    for (std::size_t j = 0; j < cm.n_classes(); ++j) {
      EXPECT_GE(cm(i, j), 0.0);
      EXPECT_LE(cm(i, j), 1.0);
      total += cm(i, j);
    }
    EXPECT_NEAR(total, 1.0, 1e-12) << "row " << i;
  }
}

double max_entry_error(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  double worst = 0;
  for (std::size_t k = 0; k < a.entries().size(); ++k) worst = std::max(worst, std::abs(a.entries()[k] - b.entries()[k]));
  return worst;
}

}  // namespace

TEST(ConfusionMatrix, ValidatesRows) {
  EXPECT_THROW(ConfusionMatrix::from_rows({{1.0}}), std::invalid_argument);
  EXPECT_THROW(ConfusionMatrix::from_rows({{0.5, 0.4}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(ConfusionMatrix::from_rows({{1.5, -0.5}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(ConfusionMatrix::from_rows({{1, 0}, {0, 1, 0}}), std::invalid_argument);
  EXPECT_NO_THROW(ConfusionMatrix::from_rows({{0.25, 0.75}, {1, 0}}));
}

TEST(ConfusionMatrix, TextRoundTrip) {
  const auto cm = cm_ordered_confusion(5, 0.37);
  const auto text = cm.to_text();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(ConfusionMatrix::from_text(text), cm);
}

TEST(HammerSpammer, ThirtyPercentLevel) {
  const auto cm = cm_hammer_spammer(10, 0.3);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(cm(i, j), i == j ? 0.7 : 0.3 / 9, 1e-15);
  }
  EXPECT_NEAR(cm(0, 1), 0.033333, 1e-6);
  EXPECT_EQ(noise_level_of(cm), 0.3);
  EXPECT_EQ(cm_hammer_spammer(6, 0.0), ConfusionMatrix::identity(6));
  EXPECT_THROW(cm_hammer_spammer(1, 0.1), std::invalid_argument);
  EXPECT_THROW(cm_hammer_spammer(4, 1.2), std::invalid_argument);
}

TEST(HammerSpammer, NoiseLevelIsExactAcrossLevels) {
  for (int step = 0; step <= 20; ++step) {
    const double level = step / 20.0;
    EXPECT_EQ(noise_level_of(cm_hammer_spammer(10, level)), level) << level;
    EXPECT_EQ(noise_level_of(cm_ordered_confusion(10, level)), level) << level;
  }
}

TEST(StructuredFlips, PairedAndUnpairedRows) {
  const auto cm = cm_structured_flips(10, 0.4, default_cifar10_flip_pairs());
  // cat (3) -> dog (5)
  EXPECT_DOUBLE_EQ(cm(3, 3), 0.6);
  EXPECT_DOUBLE_EQ(cm(3, 5), 0.4);
  for (std::size_t j = 0; j < 10; ++j) {
    if (j != 3 && j != 5) {
      EXPECT_EQ(cm(3, j), 0.0);
    }
  }
  // automobile (1) is unpaired: uniform corruption at the same level.
  for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(cm(1, j), j == 1 ? 0.6 : 0.4 / 9, 1e-15);
  EXPECT_EQ(noise_level_of(cm), 0.4);
  EXPECT_EQ(cm_structured_flips(10, 0.0, default_cifar10_flip_pairs()), ConfusionMatrix::identity(10));
}

TEST(StructuredFlips, DefaultPairs) {
  const std::vector<FlipPair> want{{0, 2}, {3, 5}, {4, 3}, {7, 4}, {8, 0}, {9, 1}};
  EXPECT_EQ(default_cifar10_flip_pairs(), want);
}

TEST(StructuredFlips, Errors) {
  EXPECT_THROW(cm_structured_flips(10, 0.4, {{2, 2}}), std::invalid_argument);
  EXPECT_THROW(cm_structured_flips(10, 0.4, {{2, 3}, {2, 4}}), std::invalid_argument);
  EXPECT_THROW(cm_structured_flips(4, 0.4, {{2, 7}}), std::invalid_argument);
}

TEST(StructuredFlips, RandomPairListsStayStochastic) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
    std::vector<std::size_t> sources(n);
    std::iota(sources.begin(), sources.end(), 0);
    std::shuffle(sources.begin(), sources.end(), rng);
    sources.resize(std::uniform_int_distribution<std::size_t>(0, n)(rng));
    std::vector<FlipPair> pairs;
    for (auto s : sources) {
      std::size_t d = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
      if (d >= s) ++d;
      pairs.emplace_back(s, d);
    }
    const double level = std::uniform_real_distribution<double>(0, 1)(rng);
    expect_row_stochastic(cm_structured_flips(n, level, pairs));
  }
}

TEST(OrderedConfusion, CyclicNeighbours) {
  const auto cm = cm_ordered_confusion(10, 0.5);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      const bool neighbour = j == (i + 1) % 10 || j == (i + 9) % 10;
      EXPECT_DOUBLE_EQ(cm(i, j), i == j ? 0.5 : neighbour ? 0.25 : 0.0);
    }
  }
  EXPECT_EQ(noise_level_of(cm), 0.5);
  EXPECT_EQ(cm_ordered_confusion(5, 0.0), ConfusionMatrix::identity(5));
  EXPECT_THROW(cm_ordered_confusion(2, 0.5), std::invalid_argument);
}

TEST(Adversarial, CyclicShift) {
  const auto cm = cm_adversarial(10);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(cm(i, i), 0.0);
    EXPECT_EQ(cm(i, (i + 1) % 10), 1.0);
  }
  EXPECT_EQ(noise_level_of(cm), 1.0);
  // Ten applications of the permutation return every label.
  auto labels = balanced(10, 3);
  auto shifted = labels;
  for (int k = 0; k < 10; ++k) shifted = corrupt(shifted, cm, 5).labels;
  EXPECT_EQ(shifted, labels);
}

TEST(Adversarial, NeverAgreesWithClean) {
  const auto clean = balanced(10, 50);
  const auto noisy = corrupt(clean, cm_adversarial(10), 9).labels;
  for (std::size_t i = 0; i < clean.size(); ++i) EXPECT_NE(clean[i], noisy[i]);
}

TEST(Average, IdentityDimensionsAndFiveAnnotatorRoster) {
  const auto hs = cm_hammer_spammer(10, 0.3);
  EXPECT_LE(max_entry_error(cm_average({hs, hs, hs}), hs), 1e-15);
  EXPECT_THROW(cm_average({}), std::invalid_argument);
  EXPECT_THROW(cm_average({hs, cm_hammer_spammer(5, 0.3)}), std::invalid_argument);
  const auto avg = cm_average({hs, cm_structured_flips(10, 0.4, default_cifar10_flip_pairs()),
                               cm_ordered_confusion(10, 0.5), cm_adversarial(10)});
  // Arithmetic mean of the four levels.
  EXPECT_NEAR(noise_level_of(avg), 0.55, 1e-15);
  expect_row_stochastic(avg);
}

TEST(Average, RandomStochasticMatricesStayStochastic) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ConfusionMatrix> parts;
    for (int p = 0; p < 4; ++p) {
      std::vector<std::vector<double>> rows(6, std::vector<double>(6));
      for (auto& r : rows) {
        double total = 0;
        for (auto& x : r) total += (x = u(rng));
        for (auto& x : r) x /= total;
        double fix = 1.0;
        for (std::size_t j = 1; j < r.size(); ++j) fix -= r[j];
        r[0] = fix;
      }
      parts.push_back(ConfusionMatrix::from_rows(rows));
    }
    expect_row_stochastic(cm_average(parts));
  }
}

TEST(NoiseLevel, IdentityIsZero) { EXPECT_EQ(noise_level_of(ConfusionMatrix::identity(7)), 0.0); }

TEST(BuildSpec, ResolvesKinds) {
  AnnotatorSpec sf{AnnotatorKind::StructuredFlips, 0.4, {}, {}};
  EXPECT_EQ(build_confusion_matrix(sf, 10), cm_structured_flips(10, 0.4, default_cifar10_flip_pairs()));
  // Default pairs out of range for small n are dropped.
  EXPECT_NO_THROW(build_confusion_matrix(sf, 4));
  AnnotatorSpec avg{AnnotatorKind::Average, 0.0, {}, {}};
  EXPECT_THROW(build_confusion_matrix(avg, 10), std::invalid_argument);
  avg.components = {AnnotatorSpec{AnnotatorKind::HammerSpammer, 0.2, {}, {}},
                    AnnotatorSpec{AnnotatorKind::Adversarial, 1.0, {}, {}}};
  EXPECT_EQ(build_confusion_matrix(avg, 10), cm_average({cm_hammer_spammer(10, 0.2), cm_adversarial(10)}));
  EXPECT_EQ(annotator_kind_from_string("oc"), AnnotatorKind::OrderedConfusion);
  EXPECT_THROW(annotator_kind_from_string("XX"), std::invalid_argument);
  EXPECT_EQ(to_string(AnnotatorKind::Average), "AVG");
}

TEST(Corrupt, IdentityDeterminismAndRange) {
  const auto clean = balanced(10, 100);
  EXPECT_EQ(corrupt(clean, ConfusionMatrix::identity(10), 1).labels, clean);
  const auto cm = cm_hammer_spammer(10, 0.4);
  EXPECT_EQ(corrupt(clean, cm, 77).labels, corrupt(clean, cm, 77).labels);
  EXPECT_NE(corrupt(clean, cm, 77).labels, corrupt(clean, cm, 78).labels);
  EXPECT_EQ(corrupt(clean, cm, 77).seed, 77u);
  EXPECT_THROW(corrupt({0, 1, 12}, cm, 1), std::out_of_range);
}

TEST(EmpiricalCm, IdentityShiftAndMissingClass) {
  const auto clean = balanced(4, 5);
  EXPECT_EQ(empirical_cm(clean, clean, 4), ConfusionMatrix::identity(4));
  std::vector<ClassIndex> shifted;
  for (auto c : clean) shifted.push_back(static_cast<ClassIndex>((c + 1) % 4));
  EXPECT_EQ(empirical_cm(clean, shifted, 4), cm_adversarial(4));
  try {
    empirical_cm({0, 0, 1}, {0, 1, 1}, 3);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
  EXPECT_THROW(empirical_cm({0, 1}, {0}, 2), std::invalid_argument);
}

// Monte-Carlo oracle: 100k samples per class reproduce every generator within
// 0.01 per entry (about six standard errors at p = 0.5).
TEST(Corrupt, MonteCarloMatchesGenerators) {
  const auto clean = balanced(10, 100000);
  const auto hs = cm_hammer_spammer(10, 0.3);
  const auto sf = cm_structured_flips(10, 0.4, default_cifar10_flip_pairs());
  const auto oc = cm_ordered_confusion(10, 0.5);
  const auto ad = cm_adversarial(10);
  const auto avg = cm_average({hs, sf, oc, ad});
  std::uint64_t seed = 1000;
  for (const auto* cm : {&hs, &sf, &oc, &ad, &avg}) {
    const auto emp = empirical_cm(clean, corrupt(clean, *cm, seed++).labels, 10);
    EXPECT_LE(max_entry_error(emp, *cm), 0.01);
  }
}

TEST(Corrupt, EmpiricalErrorShrinksWithSamples) {
  const auto oc = cm_ordered_confusion(10, 0.5);
  double small = 0, large = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto c1 = balanced(10, 1000), c2 = balanced(10, 10000);
    small += max_entry_error(empirical_cm(c1, corrupt(c1, oc, s).labels, 10), oc);
    large += max_entry_error(empirical_cm(c2, corrupt(c2, oc, s + 100).labels, 10), oc);
  }
  EXPECT_LT(large, small);
}
