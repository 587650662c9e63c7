#include <fstream>
#include <iterator>

#include "aol/datasets.hpp"

namespace aol {

LabeledDataset parse_cifar10(const std::string& bytes, const std::string& source) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    const std::size_t complete = bytes.size() / kCifarRecordBytes;
    throw FormatError(source + ": truncated record at byte offset " +
                      std::to_string(complete * kCifarRecordBytes) + " (file size " +
                      std::to_string(bytes.size()) + " is not a multiple of 3073)");
  }
  LabeledDataset ds;
  ds.n_classes = 10;
  ds.dim = kCifarPixels;
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  ds.features.reserve(records * kCifarPixels);
  ds.clean_labels.reserve(records);
  for (std::size_t r = 0; r < records; ++r) {
    const std::size_t offset = r * kCifarRecordBytes;
    const auto label = static_cast<unsigned char>(bytes[offset]);
    if (label > 9) {
      throw FormatError(source + ": label byte " + std::to_string(label) + " at byte offset " +
                        std::to_string(offset) + " is outside 0-9");
    }
    ds.clean_labels.push_back(label);
    for (std::size_t p = 0; p < kCifarPixels; ++p) {
      ds.features.push_back(static_cast<unsigned char>(bytes[offset + 1 + p]) / 255.0);
    }
  }
  return ds;
}

LabeledDataset load_cifar10(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::invalid_argument("load_cifar10: no batch files given");
  LabeledDataset all;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open CIFAR-10 batch file " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto part = parse_cifar10(bytes, path);
    if (all.clean_labels.empty()) {
      all = std::move(part);
    } else {
      all.features.insert(all.features.end(), part.features.begin(), part.features.end());
      all.clean_labels.insert(all.clean_labels.end(), part.clean_labels.begin(), part.clean_labels.end());
    }
  }
  return all;
}

}  // namespace aol
