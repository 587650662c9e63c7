#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "aol/datasets.hpp"
#include "aol/rng.hpp"

namespace aol {

namespace {

constexpr std::uint64_t kCenterStream = 0xC3;
constexpr std::uint64_t kAuxCenterStream = 0xA7;
constexpr std::uint64_t kSampleStream = 0x5A;
constexpr std::uint64_t kHeldoutStream = 0x7E;
constexpr std::uint64_t kSplitStream = 0x59;
constexpr std::uint64_t kShuffleStream = 0xB4;

std::vector<double> blob_centers(const SyntheticSpec& spec, std::size_t dim, std::uint64_t stream) {
  Rng rng(derive_seed(spec.seed, stream));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> centers(spec.n_classes * dim);
  for (auto& c : centers) c = spec.center_scale * normal(rng);
  return centers;
}

LabeledDataset sample_blobs(const SyntheticSpec& spec, std::size_t per_class, std::uint64_t stream) {
  if (spec.n_classes < 2 || spec.n_classes > 256 || spec.dim == 0 || per_class == 0 ||
      !(spec.cluster_std > 0.0) || !(spec.center_scale > 0.0)) {
    throw std::invalid_argument("invalid synthetic dataset spec");
  }
  const auto centers = blob_centers(spec, spec.dim, kCenterStream);
  const auto aux_centers = blob_centers(spec, spec.aux_dim, kAuxCenterStream);
  Rng rng(derive_seed(spec.seed, stream));
  std::normal_distribution<double> normal(0.0, spec.cluster_std);
  LabeledDataset ds;
  ds.n_classes = spec.n_classes;
  ds.dim = spec.dim;
  ds.aux_dim = spec.aux_dim;
  ds.features.reserve(spec.n_classes * per_class * spec.dim);
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      for (std::size_t d = 0; d < spec.dim; ++d) ds.features.push_back(centers[c * spec.dim + d] + normal(rng));
      for (std::size_t d = 0; d < spec.aux_dim; ++d) ds.aux.push_back(aux_centers[c * spec.aux_dim + d] + normal(rng));
      ds.clean_labels.push_back(static_cast<ClassIndex>(c));
    }
  }
  return ds;
}

}  // namespace

void LabeledDataset::validate() const {
  const std::size_t s = size();
  if (n_classes < 2) throw std::invalid_argument("dataset needs at least two classes");
  if (features.size() != s * dim) throw std::invalid_argument("feature matrix does not match sample count");
  if (aux.size() != s * aux_dim) throw std::invalid_argument("aux matrix does not match sample count");
  for (std::size_t i = 0; i < s; ++i) {
    if (clean_labels[i] >= n_classes) {
      throw std::invalid_argument("clean label out of range at sample " + std::to_string(i));
    }
  }
  for (std::size_t m = 0; m < label_sets.size(); ++m) {
    const auto& labels = label_sets[m].labels;
    if (labels.size() != s) {
      throw std::invalid_argument("label set " + std::to_string(m) + " has " + std::to_string(labels.size()) +
                                  " labels for " + std::to_string(s) + " samples");
    }
    for (auto l : labels) {
      if (l >= n_classes) throw std::invalid_argument("label set " + std::to_string(m) + " has an out-of-range label");
    }
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  LabeledDataset out;
  out.n_classes = n_classes;
  out.dim = dim;
  out.aux_dim = aux_dim;
  out.label_sets.resize(label_sets.size());
  for (std::size_t m = 0; m < label_sets.size(); ++m) {
    out.label_sets[m].annotator = label_sets[m].annotator;
    out.label_sets[m].seed = label_sets[m].seed;
  }
  for (auto i : indices) {
    if (i >= size()) throw std::out_of_range("subset index " + std::to_string(i) + " out of range");
    out.features.insert(out.features.end(), features.begin() + static_cast<std::ptrdiff_t>(i * dim),
                        features.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    out.clean_labels.push_back(clean_labels[i]);
    for (std::size_t m = 0; m < label_sets.size(); ++m) out.label_sets[m].labels.push_back(label_sets[m].labels[i]);
    if (aux_dim) {
      out.aux.insert(out.aux.end(), aux.begin() + static_cast<std::ptrdiff_t>(i * aux_dim),
                     aux.begin() + static_cast<std::ptrdiff_t>((i + 1) * aux_dim));
    }
  }
  return out;
}

LabeledDataset synth_blobs(const SyntheticSpec& spec) {
  return sample_blobs(spec, spec.samples_per_class, kSampleStream);
}

LabeledDataset synth_blobs_heldout(const SyntheticSpec& spec, std::size_t samples_per_class) {
  return sample_blobs(spec, samples_per_class, kHeldoutStream);
}

LabeledDataset attach_annotators(const LabeledDataset& ds, const std::vector<AnnotatorSpec>& specs,
                                 std::uint64_t seed) {
  if (specs.empty()) throw std::invalid_argument("attach_annotators: no annotators given");
  LabeledDataset out = ds;
  const std::size_t existing = ds.label_sets.size();
  for (std::size_t m = 0; m < specs.size(); ++m) {
    auto cm = build_confusion_matrix(specs[m], ds.n_classes);
    auto set = corrupt(ds.clean_labels, cm, derive_seed(seed, existing + m));
    set.annotator = specs[m];
    out.label_sets.push_back(std::move(set));
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double val_fraction,
                                                std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1), got " + std::to_string(val_fraction));
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kSplitStream));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(static_cast<double>(ds.size()) * val_fraction);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {ds.subset(train), ds.subset(val)};
}

std::vector<std::size_t> epoch_order(std::size_t n_samples, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(derive_seed(seed, kShuffleStream), epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Tensor one_hot(const std::vector<ClassIndex>& labels, std::size_t n) {
  if (labels.empty()) throw ShapeError("one_hot of an empty label list");
  std::vector<double> out(labels.size() * n, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n) {
      throw std::out_of_range("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                              " is outside [0, " + std::to_string(n) + ")");
    }
    out[i * n + labels[i]] = 1.0;
  }
  return Tensor({labels.size(), n}, std::move(out));
}

Batch make_batch(const LabeledDataset& ds, const std::vector<std::size_t>& indices) {
  Batch batch;
  batch.indices = indices;
  const std::size_t b = indices.size();
  std::vector<double> x;
  x.reserve(b * ds.dim);
  std::vector<double> aux;
  std::vector<std::vector<ClassIndex>> sets(ds.label_sets.size());
  for (auto i : indices) {
    x.insert(x.end(), ds.features.begin() + static_cast<std::ptrdiff_t>(i * ds.dim),
             ds.features.begin() + static_cast<std::ptrdiff_t>((i + 1) * ds.dim));
    if (ds.aux_dim) {
      aux.insert(aux.end(), ds.aux.begin() + static_cast<std::ptrdiff_t>(i * ds.aux_dim),
                 ds.aux.begin() + static_cast<std::ptrdiff_t>((i + 1) * ds.aux_dim));
    }
    batch.clean.push_back(ds.clean_labels[i]);
    for (std::size_t m = 0; m < sets.size(); ++m) sets[m].push_back(ds.label_sets[m].labels[i]);
  }
  batch.x = Tensor({b, ds.dim}, std::move(x));
  if (ds.aux_dim) batch.aux = Tensor({b, ds.aux_dim}, std::move(aux));
  for (const auto& s : sets) batch.label_sets.push_back(one_hot(s, ds.n_classes));
  return batch;
}

std::vector<Batch> minibatches(const LabeledDataset& ds, std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  const auto order = epoch_order(ds.size(), seed, epoch);
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.push_back(make_batch(ds, {order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(end)}));
  }
  return out;
}

}  // namespace aol
