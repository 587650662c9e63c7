#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aol/annotators.hpp"
#include "aol/tensor.hpp"

namespace aol {

/// Features, clean labels, M noisy label sets and optional auxiliary
/// features for S samples. Clean labels are kept for test-time metrics only.
struct LabeledDataset {
  std::size_t n_classes = 0;
  std::size_t dim = 0;
  std::vector<double> features;  // S x dim, row-major
  std::vector<ClassIndex> clean_labels;
  std::vector<NoisyLabelSet> label_sets;
  std::size_t aux_dim = 0;
  std::vector<double> aux;  // S x aux_dim, row-major; empty when aux_dim == 0

  std::size_t size() const { return clean_labels.size(); }
  std::size_t n_label_sets() const { return label_sets.size(); }

  // Throws std::invalid_argument describing the first broken invariant.
  void validate() const;

  LabeledDataset subset(const std::vector<std::size_t>& indices) const;
};

struct SyntheticSpec {
  std::size_t n_classes = 10;
  std::size_t dim = 32;
  std::size_t samples_per_class = 500;
  double cluster_std = 1.0;
  double center_scale = 3.0;
  std::uint64_t seed = 0;
  std::size_t aux_dim = 0;
};

// Gaussian clusters around centers drawn as center_scale * N(0, I), samples
// ordered class by class. With aux_dim > 0 each sample also gets an
// auxiliary vector from a second, independently centered blob view.
LabeledDataset synth_blobs(const SyntheticSpec& spec);

// Fresh samples around the same centers as synth_blobs(spec), from an
// independent stream; used as the clean test set.
LabeledDataset synth_blobs_heldout(const SyntheticSpec& spec, std::size_t samples_per_class);

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarPixels = 3072;

// CIFAR-10 binary batches: 3073-byte records of one label byte followed by
// 3072 channel-major pixel bytes. Pixels are scaled to [0, 1].
LabeledDataset load_cifar10(const std::vector<std::string>& paths);
LabeledDataset parse_cifar10(const std::string& bytes, const std::string& source = "<memory>");

// Appends one noisy label set per spec. Set m is corrupted with the seed
// derive_seed(seed, existing_sets + m), so adding annotators never perturbs
// the ones already present.
LabeledDataset attach_annotators(const LabeledDataset& ds, const std::vector<AnnotatorSpec>& specs,
                                 std::uint64_t seed);

// Uniform random split; the validation part gets floor(S * val_fraction)
// samples and keeps the noisy label sets.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double val_fraction,
                                                std::uint64_t seed);

/// Rows of one minibatch, ready for the model.
struct Batch {
  std::vector<std::size_t> indices;
  Tensor x;                         // [B, dim]
  std::optional<Tensor> aux;        // [B, aux_dim]
  std::vector<Tensor> label_sets;   // M one-hot [B, n_classes]
  std::vector<ClassIndex> clean;

  std::size_t size() const { return indices.size(); }
};

// Sample order for one epoch, shuffled by (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n_samples, std::uint64_t seed, std::uint64_t epoch);

// Consecutive batches over epoch_order(); the last one may be partial.
std::vector<Batch> minibatches(const LabeledDataset& ds, std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch);

Batch make_batch(const LabeledDataset& ds, const std::vector<std::size_t>& indices);

// [S, n] with exactly one 1 per row.
Tensor one_hot(const std::vector<ClassIndex>& labels, std::size_t n);

// Binary container: u64 header S, D, N, M, A; features (f64), clean labels
// (u8), M label sets (u8), aux (f64). Annotator metadata is not stored.
void save_dataset(const LabeledDataset& ds, std::ostream& out);
LabeledDataset load_dataset(std::istream& in);

}  // namespace aol
