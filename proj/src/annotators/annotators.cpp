#include "aol/annotators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "aol/rng.hpp"

namespace aol {

namespace {

constexpr double kRowTolerance = 1e-12;

void require_noise_level(double noise_level) {
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) {
    throw std::invalid_argument("noise level must lie in [0, 1], got " + std::to_string(noise_level));
  }
}

void require_classes(std::size_t n, std::size_t minimum, const char* who) {
  if (n < minimum) {
    throw std::invalid_argument(std::string(who) + " needs at least " + std::to_string(minimum) +
                                " classes, got " + std::to_string(n));
  }
}

// Fills row i with 1 - noise on the diagonal and noise spread evenly over
// the other n - 1 classes.
void uniform_row(std::vector<std::vector<double>>& rows, std::size_t i, double noise) {
  const std::size_t n = rows.size();
  const double off = noise / static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) rows[i][j] = j == i ? 1.0 - noise : off;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), entries_(std::move(entries)) {}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  require_classes(n, 2, "confusion matrix");
  std::vector<double> entries;
  entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw std::invalid_argument("confusion matrix row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " entries, expected " +
                                  std::to_string(n));
    }
    double total = 0.0;
    for (double v : rows[i]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("confusion matrix entry outside [0,1] in row " + std::to_string(i));
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kRowTolerance) {
      throw std::invalid_argument("confusion matrix row " + std::to_string(i) + " sums to " +
                                  std::to_string(total));
    }
    entries.insert(entries.end(), rows[i].begin(), rows[i].end());
  }
  return ConfusionMatrix(n, std::move(entries));
}

ConfusionMatrix ConfusionMatrix::identity(std::size_t n) { return cm_hammer_spammer(n, 0.0); }

std::vector<double> ConfusionMatrix::row(std::size_t i) const {
  return {entries_.begin() + static_cast<std::ptrdiff_t>(i * n_),
          entries_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_)};
}

std::string ConfusionMatrix::to_text() const {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", (*this)(i, j));
      if (j) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

ConfusionMatrix ConfusionMatrix::from_text(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::vector<double> row;
    double v;
    while (fields >> v) row.push_back(v);
    if (!fields.eof()) {
      throw std::invalid_argument("confusion matrix text: unparsable entry on line " +
                                  std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  return from_rows(rows);
}

std::string to_string(AnnotatorKind kind) {
  switch (kind) {
    case AnnotatorKind::HammerSpammer: return "HS";
    case AnnotatorKind::StructuredFlips: return "SF";
    case AnnotatorKind::OrderedConfusion: return "OC";
    case AnnotatorKind::Adversarial: return "AD";
    case AnnotatorKind::Average: return "AVG";
  }
  return "?";
}

AnnotatorKind annotator_kind_from_string(const std::string& name) {
  std::string upper;
  for (char c : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "HS" || upper == "HAMMER_SPAMMER") return AnnotatorKind::HammerSpammer;
  if (upper == "SF" || upper == "STRUCTURED_FLIPS") return AnnotatorKind::StructuredFlips;
  if (upper == "OC" || upper == "ORDERED_CONFUSION") return AnnotatorKind::OrderedConfusion;
  if (upper == "AD" || upper == "ADVERSARIAL") return AnnotatorKind::Adversarial;
  if (upper == "AVG" || upper == "AVERAGE") return AnnotatorKind::Average;
  throw std::invalid_argument("unknown annotator kind '" + name + "'");
}

std::string AnnotatorSpec::label() const {
  switch (kind) {
    case AnnotatorKind::Adversarial:
    case AnnotatorKind::Average:
      return to_string(kind);
    default: {
      std::ostringstream os;
      os << to_string(kind) << '(' << noise_level << ')';
      return os.str();
    }
  }
}

std::vector<FlipPair> default_cifar10_flip_pairs() {
  return {{0, 2}, {3, 5}, {4, 3}, {7, 4}, {8, 0}, {9, 1}};
}

ConfusionMatrix cm_hammer_spammer(std::size_t n, double noise_level) {
  require_classes(n, 2, "hammer-spammer");
  require_noise_level(noise_level);
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) uniform_row(rows, i, noise_level);
  return ConfusionMatrix::from_rows(rows);
}

ConfusionMatrix cm_structured_flips(std::size_t n, double noise_level,
                                    const std::vector<FlipPair>& pairs) {
  require_classes(n, 2, "structured-flips");
  require_noise_level(noise_level);
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  std::vector<bool> paired(n, false);
  for (const auto& [src, dst] : pairs) {
    if (src >= n || dst >= n) {
      throw std::invalid_argument("flip pair (" + std::to_string(src) + ", " + std::to_string(dst) +
                                  ") references a class outside [0, " + std::to_string(n) + ")");
    }
    if (src == dst) throw std::invalid_argument("flip pair maps class " + std::to_string(src) + " to itself");
    if (paired[src]) throw std::invalid_argument("class " + std::to_string(src) + " is flipped twice");
    paired[src] = true;
    rows[src][src] = 1.0 - noise_level;
    rows[src][dst] = noise_level;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!paired[i]) uniform_row(rows, i, noise_level);
  }
  return ConfusionMatrix::from_rows(rows);
}

ConfusionMatrix cm_ordered_confusion(std::size_t n, double noise_level) {
  require_classes(n, 3, "ordered-confusion");
  require_noise_level(noise_level);
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    rows[i][i] = 1.0 - noise_level;
    rows[i][(i + n - 1) % n] += noise_level / 2.0;
    rows[i][(i + 1) % n] += noise_level / 2.0;
  }
  return ConfusionMatrix::from_rows(rows);
}

ConfusionMatrix cm_adversarial(std::size_t n) {
  require_classes(n, 2, "adversarial");
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) rows[i][(i + 1) % n] = 1.0;
  return ConfusionMatrix::from_rows(rows);
}

ConfusionMatrix cm_average(const std::vector<ConfusionMatrix>& parts) {
  if (parts.empty()) throw std::invalid_argument("average of zero confusion matrices");
  const std::size_t n = parts.front().n_classes();
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (const auto& cm : parts) {
    if (cm.n_classes() != n) {
      throw std::invalid_argument("cannot average confusion matrices of size " + std::to_string(n) +
                                  " and " + std::to_string(cm.n_classes()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) rows[i][j] += cm(i, j);
    }
  }
  const double scale = 1.0 / static_cast<double>(parts.size());
  for (auto& row : rows) {
    for (auto& v : row) v *= scale;
  }
  return ConfusionMatrix::from_rows(rows);
}

ConfusionMatrix build_confusion_matrix(const AnnotatorSpec& spec, std::size_t n) {
  switch (spec.kind) {
    case AnnotatorKind::HammerSpammer:
      return cm_hammer_spammer(n, spec.noise_level);
    case AnnotatorKind::StructuredFlips: {
      auto pairs = spec.flip_pairs;
      if (pairs.empty()) {
        for (const auto& p : default_cifar10_flip_pairs()) {
          if (p.first < n && p.second < n) pairs.push_back(p);
        }
      }
      return cm_structured_flips(n, spec.noise_level, pairs);
    }
    case AnnotatorKind::OrderedConfusion:
      return cm_ordered_confusion(n, spec.noise_level);
    case AnnotatorKind::Adversarial:
      return cm_adversarial(n);
    case AnnotatorKind::Average: {
      if (spec.components.empty()) {
        throw std::invalid_argument("AVG annotator has no component annotators");
      }
      std::vector<ConfusionMatrix> parts;
      for (const auto& c : spec.components) parts.push_back(build_confusion_matrix(c, n));
      return cm_average(parts);
    }
  }
  throw std::logic_error("unknown annotator kind");
}

namespace {

// Shewchuk-style exact accumulation; the result is the rounded exact sum.
class ExactSum {
 public:
  void add(double x) {
    std::size_t used = 0;
    for (double p : partials_) {
      if (std::abs(x) < std::abs(p)) std::swap(x, p);
      const double hi = x + p;
      const double lo = p - (hi - x);
      if (lo != 0.0) partials_[used++] = lo;
      x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
  }
  double value() const {
    double total = 0.0;
    for (auto it = partials_.rbegin(); it != partials_.rend(); ++it) total += *it;
    return total;
  }

 private:
  std::vector<double> partials_;
};

}  // namespace

// Row i contributes its off-diagonal mass, which equals 1 - C(i, i) for a
// row-stochastic matrix but is not subject to the cancellation in 1 - C(i, i).
double noise_level_of(const ConfusionMatrix& cm) {
  const std::size_t n = cm.n_classes();
  ExactSum total;
  for (std::size_t i = 0; i < n; ++i) {
    ExactSum row;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.add(cm(i, j));
    }
    total.add(row.value());
  }
  // One refinement step on the rounded mean using the exact residual, so the
  // mean of equal row levels is that level.
  const double mean = total.value() / static_cast<double>(n);
  ExactSum residual = total;
  for (std::size_t i = 0; i < n; ++i) residual.add(-mean);
  return mean + residual.value() / static_cast<double>(n);
}

NoisyLabelSet corrupt(const std::vector<ClassIndex>& clean, const ConfusionMatrix& cm,
                      std::uint64_t seed) {
  const std::size_t n = cm.n_classes();
  // Cumulative rows; the last bucket absorbs rounding so every draw lands.
  std::vector<double> cumulative(cm.entries());
  for (std::size_t i = 0; i < n; ++i) {
    double run = 0.0;
    for (std::size_t j = 0; j < n; ++j) cumulative[i * n + j] = (run += cm(i, j));
    cumulative[i * n + n - 1] = 1.0;
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NoisyLabelSet out;
  out.seed = seed;
  out.labels.reserve(clean.size());
  for (std::size_t s = 0; s < clean.size(); ++s) {
    const std::size_t c = clean[s];
    if (c >= n) {
      throw std::out_of_range("label " + std::to_string(c) + " at index " + std::to_string(s) +
                              " is outside [0, " + std::to_string(n) + ")");
    }
    const double u = unit(rng);
    const double* row = cumulative.data() + c * n;
    std::size_t j = 0;
    while (j + 1 < n && (u >= row[j] || cm(c, j) == 0.0)) ++j;
    out.labels.push_back(static_cast<ClassIndex>(j));
  }
  return out;
}

ConfusionMatrix empirical_cm(const std::vector<ClassIndex>& clean,
                             const std::vector<ClassIndex>& noisy, std::size_t n_classes) {
  if (clean.size() != noisy.size()) {
    throw std::invalid_argument("empirical_cm: " + std::to_string(clean.size()) + " clean labels but " +
                                std::to_string(noisy.size()) + " noisy labels");
  }
  std::vector<std::vector<double>> counts(n_classes, std::vector<double>(n_classes, 0.0));
  for (std::size_t s = 0; s < clean.size(); ++s) {
    if (clean[s] >= n_classes || noisy[s] >= n_classes) {
      throw std::out_of_range("empirical_cm: label out of range at index " + std::to_string(s));
    }
    counts[clean[s]][noisy[s]] += 1.0;
  }
  for (std::size_t i = 0; i < n_classes; ++i) {
    double total = 0.0;
    for (double v : counts[i]) total += v;
    if (total == 0.0) {
      throw std::invalid_argument("empirical_cm: class " + std::to_string(i) + " never occurs in the clean labels");
    }
    for (auto& v : counts[i]) v /= total;
  }
  return ConfusionMatrix::from_rows(counts);
}

}  // namespace aol
