#include <istream>
#include <ostream>

#include "aol/metatrain.hpp"

namespace aol {

void save_checkpoint(std::ostream& out, const Classifier& model, const AttentionParams& attn) {
  model.save(out);
  attn.save(out);
}

std::pair<Classifier, AttentionParams> load_checkpoint(std::istream& in, AttentionArchitecture arch,
                                                       std::size_t n_sets) {
  auto model = Classifier::load(in);
  auto attn = AttentionParams::load(in, arch, n_sets, model.feature_dim());
  return {std::move(model), std::move(attn)};
}

}  // namespace aol
