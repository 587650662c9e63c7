#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "aol/annotators.hpp"
#include "aol/datasets.hpp"
#include "aol/metatrain.hpp"

namespace aol {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SyntheticSource {
  SyntheticSpec spec;
  std::size_t test_samples_per_class = 100;
};

struct Cifar10Source {
  std::vector<std::string> train_paths;
  std::vector<std::string> test_paths;
  std::size_t subset = 0;       // 0 keeps every training record
  std::size_t test_subset = 0;  // 0 keeps every test record
};

enum class MethodKind { Ours, Baseline, BaselineAvg };

struct Method {
  MethodKind kind = MethodKind::Ours;
  std::size_t set_index = 0;  // Baseline only

  std::string tag() const;  // "ours", "baseline:2", "baseline_avg"
  static Method parse(const std::string& text);
  friend bool operator==(const Method&, const Method&) = default;
};

struct ExperimentConfig {
  std::variant<SyntheticSource, Cifar10Source> dataset;
  std::vector<AnnotatorSpec> annotators;
  std::vector<std::size_t> layers{128, 64};  // hidden..., feature width
  MetaConfig meta;
  std::vector<Method> methods{Method{}};
  std::vector<std::uint64_t> seeds;
  double val_fraction = 0.2;
  std::string output = "results";
  bool trace = false;
  std::vector<double> sweep_levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  double sweep_level = 0.3;

  std::string hash;       // 16 hex digits over the canonical form
  std::string canonical;  // canonical JSON with every default filled in
};

/// Parses a JSON experiment description. Unknown keys, missing required
/// keys and out-of-range values raise ConfigError naming the key path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// FNV-1a 64-bit, hex encoded.
std::string stable_hash(const std::string& text);

}  // namespace aol
