#include <istream>
#include <ostream>

#include "aol/datasets.hpp"
#include "aol/model.hpp"

namespace aol {

void save_dataset(const LabeledDataset& ds, std::ostream& out) {
  ds.validate();
  write_u64(out, ds.size());
  write_u64(out, ds.dim);
  write_u64(out, ds.n_classes);
  write_u64(out, ds.n_label_sets());
  write_u64(out, ds.aux_dim);
  write_f64s(out, ds.features);
  out.write(reinterpret_cast<const char*>(ds.clean_labels.data()),
            static_cast<std::streamsize>(ds.clean_labels.size()));
  for (const auto& set : ds.label_sets) {
    out.write(reinterpret_cast<const char*>(set.labels.data()), static_cast<std::streamsize>(set.labels.size()));
  }
  write_f64s(out, ds.aux);
  if (!out) throw std::runtime_error("failed writing dataset container");
}

LabeledDataset load_dataset(std::istream& in) {
  LabeledDataset ds;
  const auto s = read_u64(in);
  ds.dim = read_u64(in);
  ds.n_classes = read_u64(in);
  const auto m = read_u64(in);
  ds.aux_dim = read_u64(in);
  auto read_bytes = [&in](std::size_t count) {
    std::vector<ClassIndex> bytes(count);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count))) {
      throw FormatError("dataset container: unexpected end of file in label block");
    }
    return bytes;
  };
  ds.features = read_f64s(in, s * ds.dim);
  ds.clean_labels = read_bytes(s);
  ds.label_sets.resize(m);
  for (auto& set : ds.label_sets) set.labels = read_bytes(s);
  ds.aux = read_f64s(in, s * ds.aux_dim);
  ds.validate();
  return ds;
}

}  // namespace aol
