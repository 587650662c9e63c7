#include "aol/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace aol {

using json = nlohmann::json;

namespace {

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void reject_unknown(const json& obj, const std::string& path, std::set<std::string> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + join_path(path, key) + "'");
  }
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("'" + path + "' must be an object");
  return j;
}

template <typename T>
T read(const json& obj, const std::string& path, const std::string& key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  const auto where = join_path(path, key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("'" + where + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
        throw ConfigError("'" + where + "' must be a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("'" + where + "' must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("'" + where + "' must be a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("'" + where + "': " + e.what());
  }
}

template <typename T>
std::vector<T> read_list(const json& obj, const std::string& path, const std::string& key,
                         std::vector<T> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto where = join_path(path, key);
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError("'" + where + "' must be a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    json wrapper{{"item", v[i]}};
    out.push_back(read<T>(wrapper, where + "[" + std::to_string(i) + "]", "item", T{}));
  }
  return out;
}

void require_range(bool ok, const std::string& where, const std::string& rule) {
  if (!ok) throw ConfigError("'" + where + "' out of range: " + rule);
}

SyntheticSource parse_synthetic(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"n_classes", "dim", "samples_per_class", "cluster_std", "center_scale",
                           "aux_dim", "test_samples_per_class"});
  SyntheticSource src;
  auto& s = src.spec;
  s.n_classes = read<std::size_t>(j, path, "n_classes", s.n_classes);
  s.dim = read<std::size_t>(j, path, "dim", s.dim);
  s.samples_per_class = read<std::size_t>(j, path, "samples_per_class", s.samples_per_class);
  s.cluster_std = read<double>(j, path, "cluster_std", s.cluster_std);
  s.center_scale = read<double>(j, path, "center_scale", s.center_scale);
  s.aux_dim = read<std::size_t>(j, path, "aux_dim", s.aux_dim);
  src.test_samples_per_class = read<std::size_t>(j, path, "test_samples_per_class", src.test_samples_per_class);
  require_range(s.n_classes >= 2 && s.n_classes <= 256, path + ".n_classes", "2..256");
  require_range(s.dim >= 1, path + ".dim", ">= 1");
  require_range(s.samples_per_class >= 1, path + ".samples_per_class", ">= 1");
  require_range(s.cluster_std > 0, path + ".cluster_std", "> 0");
  require_range(s.center_scale > 0, path + ".center_scale", "> 0");
  require_range(src.test_samples_per_class >= 1, path + ".test_samples_per_class", ">= 1");
  return src;
}

Cifar10Source parse_cifar(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"train", "test", "subset", "test_subset"});
  Cifar10Source src;
  src.train_paths = read_list<std::string>(j, path, "train", {});
  src.test_paths = read_list<std::string>(j, path, "test", {});
  src.subset = read<std::size_t>(j, path, "subset", 0);
  src.test_subset = read<std::size_t>(j, path, "test_subset", 0);
  if (src.train_paths.empty()) throw ConfigError("missing required key '" + path + ".train'");
  if (src.test_paths.empty()) throw ConfigError("missing required key '" + path + ".test'");
  return src;
}

AnnotatorSpec parse_annotator(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"kind", "noise_level", "flip_pairs", "of"});
  if (!j.contains("kind")) throw ConfigError("missing required key '" + path + ".kind'");
  AnnotatorSpec spec;
  try {
    spec.kind = annotator_kind_from_string(read<std::string>(j, path, "kind", ""));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + path + ".kind': " + e.what());
  }
  const bool leveled = spec.kind == AnnotatorKind::HammerSpammer ||
                       spec.kind == AnnotatorKind::StructuredFlips ||
                       spec.kind == AnnotatorKind::OrderedConfusion;
  if (leveled) {
    if (!j.contains("noise_level")) throw ConfigError("missing required key '" + path + ".noise_level'");
    spec.noise_level = read<double>(j, path, "noise_level", 0.0);
    require_range(spec.noise_level >= 0.0 && spec.noise_level <= 1.0, path + ".noise_level", "[0, 1]");
  } else if (j.contains("noise_level")) {
    throw ConfigError("'" + path + ".noise_level' is not allowed for " + to_string(spec.kind));
  }
  if (spec.kind == AnnotatorKind::Adversarial) spec.noise_level = 1.0;
  if (j.contains("flip_pairs")) {
    if (spec.kind != AnnotatorKind::StructuredFlips) {
      throw ConfigError("'" + path + ".flip_pairs' is only allowed for SF");
    }
    const auto& pairs = j.at("flip_pairs");
    if (!pairs.is_array()) throw ConfigError("'" + path + ".flip_pairs' must be a list of [src, dst]");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& p = pairs[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned()) {
        throw ConfigError("'" + path + ".flip_pairs[" + std::to_string(i) + "]' must be [src, dst]");
      }
      spec.flip_pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
    }
  }
  if (j.contains("of") && spec.kind != AnnotatorKind::Average) {
    throw ConfigError("'" + path + ".of' is only allowed for AVG");
  }
  return spec;
}

// AVG entries are expanded into their component specs: the listed indices, or
// every non-AVG annotator of the roster.
void resolve_averages(std::vector<AnnotatorSpec>& roster, const json& raw) {
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (roster[i].kind != AnnotatorKind::Average) continue;
    const std::string path = "annotators[" + std::to_string(i) + "]";
    std::vector<std::size_t> of;
    if (raw[i].contains("of")) {
      of = read_list<std::size_t>(raw[i], path, "of", {});
    } else {
      for (std::size_t k = 0; k < roster.size(); ++k) {
        if (roster[k].kind != AnnotatorKind::Average) of.push_back(k);
      }
    }
    if (of.empty()) throw ConfigError("'" + path + "' averages no annotators");
    for (auto k : of) {
      if (k >= roster.size() || roster[k].kind == AnnotatorKind::Average) {
        throw ConfigError("'" + path + ".of' must reference non-AVG annotators, got " + std::to_string(k));
      }
      roster[i].components.push_back(roster[k]);
    }
  }
}

json annotator_json(const AnnotatorSpec& spec) {
  json j{{"kind", to_string(spec.kind)}};
  if (spec.kind == AnnotatorKind::Average) {
    j["of"] = json::array();
    for (const auto& c : spec.components) j["of"].push_back(annotator_json(c));
  } else if (spec.kind != AnnotatorKind::Adversarial) {
    j["noise_level"] = spec.noise_level;
  }
  if (!spec.flip_pairs.empty()) j["flip_pairs"] = spec.flip_pairs;
  return j;
}

json canonical_json(const ExperimentConfig& c) {
  json j;
  if (const auto* syn = std::get_if<SyntheticSource>(&c.dataset)) {
    const auto& s = syn->spec;
    j["dataset"]["synthetic"] = {{"n_classes", s.n_classes},       {"dim", s.dim},
                                 {"samples_per_class", s.samples_per_class},
                                 {"cluster_std", s.cluster_std},   {"center_scale", s.center_scale},
                                 {"aux_dim", s.aux_dim},
                                 {"test_samples_per_class", syn->test_samples_per_class}};
  } else {
    const auto& cf = std::get<Cifar10Source>(c.dataset);
    j["dataset"]["cifar10"] = {{"train", cf.train_paths}, {"test", cf.test_paths},
                               {"subset", cf.subset}, {"test_subset", cf.test_subset}};
  }
  j["annotators"] = json::array();
  for (const auto& a : c.annotators) j["annotators"].push_back(annotator_json(a));
  j["model"]["layers"] = c.layers;
  j["meta"] = {{"alpha", c.meta.alpha},
               {"beta", c.meta.beta},
               {"attn_lr", c.meta.attn_lr ? json(*c.meta.attn_lr) : json(nullptr)},
               {"k", c.meta.k},
               {"t_threshold", c.meta.t_threshold},
               {"batch_size", c.meta.batch_size},
               {"epochs", c.meta.epochs},
               {"attention", c.meta.attention == AttentionArchitecture::Concatenated ? "concatenated" : "shared"}};
  j["methods"] = json::array();
  for (const auto& m : c.methods) j["methods"].push_back(m.tag());
  j["seeds"] = c.seeds;
  j["val_fraction"] = c.val_fraction;
  j["trace"] = c.trace;
  j["sweep"] = {{"levels", c.sweep_levels}, {"level", c.sweep_level}};
  return j;
}

}  // namespace

std::string Method::tag() const {
  switch (kind) {
    case MethodKind::Ours: return "ours";
    case MethodKind::Baseline: return "baseline:" + std::to_string(set_index);
    case MethodKind::BaselineAvg: return "baseline_avg";
  }
  return "?";
}

Method Method::parse(const std::string& text) {
  if (text == "ours") return {MethodKind::Ours, 0};
  if (text == "baseline_avg") return {MethodKind::BaselineAvg, 0};
  const std::string prefix = "baseline:";
  if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) {
    const auto digits = text.substr(prefix.size());
    if (digits.find_first_not_of("0123456789") == std::string::npos) {
      return {MethodKind::Baseline, std::stoul(digits)};
    }
  }
  throw std::invalid_argument("unknown method '" + text + "' (expected ours, baseline:<set>, baseline_avg)");
}

std::string stable_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_object(root, "<root>");
  reject_unknown(root, "", {"dataset", "annotators", "model", "meta", "method", "methods", "seeds",
                            "val_fraction", "output", "trace", "sweep"});
  for (const char* key : {"dataset", "annotators", "seeds"}) {
    if (!root.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
  }

  ExperimentConfig c;

  const auto& ds = require_object(root.at("dataset"), "dataset");
  reject_unknown(ds, "dataset", {"synthetic", "cifar10"});
  if (ds.size() != 1) throw ConfigError("'dataset' must hold exactly one of 'synthetic' or 'cifar10'");
  if (ds.contains("synthetic")) {
    c.dataset = parse_synthetic(ds.at("synthetic"), "dataset.synthetic");
  } else {
    c.dataset = parse_cifar(ds.at("cifar10"), "dataset.cifar10");
  }
  const std::size_t n_classes = std::holds_alternative<SyntheticSource>(c.dataset)
                                    ? std::get<SyntheticSource>(c.dataset).spec.n_classes
                                    : 10;

  const auto& annotators = root.at("annotators");
  if (!annotators.is_array() || annotators.empty()) throw ConfigError("'annotators' must be a nonempty list");
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    c.annotators.push_back(parse_annotator(annotators[i], "annotators[" + std::to_string(i) + "]"));
  }
  resolve_averages(c.annotators, annotators);
  for (std::size_t i = 0; i < c.annotators.size(); ++i) {
    try {
      build_confusion_matrix(c.annotators[i], n_classes);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("'annotators[" + std::to_string(i) + "]': " + e.what());
    }
  }

  if (root.contains("model")) {
    const auto& m = require_object(root.at("model"), "model");
    reject_unknown(m, "model", {"layers"});
    c.layers = read_list<std::size_t>(m, "model", "layers", c.layers);
    if (c.layers.empty()) throw ConfigError("'model.layers' must list at least the feature width");
    for (auto d : c.layers) require_range(d >= 1, "model.layers", "every width >= 1");
  }

  if (root.contains("meta")) {
    const auto& m = require_object(root.at("meta"), "meta");
    reject_unknown(m, "meta", {"alpha", "beta", "attn_lr", "k", "t_threshold", "batch_size", "epochs", "attention"});
    auto& meta = c.meta;
    meta.alpha = read<double>(m, "meta", "alpha", meta.alpha);
    meta.beta = read<double>(m, "meta", "beta", meta.beta);
    if (m.contains("attn_lr") && !m.at("attn_lr").is_null()) meta.attn_lr = read<double>(m, "meta", "attn_lr", 0.0);
    meta.k = read<double>(m, "meta", "k", meta.k);
    meta.t_threshold = read<double>(m, "meta", "t_threshold", meta.t_threshold);
    meta.batch_size = read<std::size_t>(m, "meta", "batch_size", meta.batch_size);
    meta.epochs = read<std::size_t>(m, "meta", "epochs", meta.epochs);
    const auto arch = read<std::string>(m, "meta", "attention", "concatenated");
    if (arch == "concatenated") {
      meta.attention = AttentionArchitecture::Concatenated;
    } else if (arch == "shared") {
      meta.attention = AttentionArchitecture::SharedScorer;
    } else {
      throw ConfigError("'meta.attention' must be 'concatenated' or 'shared'");
    }
    require_range(meta.alpha > 0, "meta.alpha", "> 0");
    require_range(meta.beta > 0, "meta.beta", "> 0");
    require_range(!meta.attn_lr || *meta.attn_lr > 0, "meta.attn_lr", "> 0");
    require_range(meta.k > 0, "meta.k", "> 0");
    require_range(meta.t_threshold > 0 && meta.t_threshold < 1, "meta.t_threshold", "(0, 1)");
    require_range(meta.batch_size >= 1, "meta.batch_size", ">= 1");
  }

  if (root.contains("method") && root.contains("methods")) {
    throw ConfigError("give either 'method' or 'methods', not both");
  }
  std::vector<std::string> method_names;
  if (root.contains("method")) method_names = {read<std::string>(root, "", "method", "ours")};
  if (root.contains("methods")) method_names = read_list<std::string>(root, "", "methods", {});
  if (!method_names.empty()) {
    c.methods.clear();
    for (std::size_t i = 0; i < method_names.size(); ++i) {
      try {
        c.methods.push_back(Method::parse(method_names[i]));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("'methods[" + std::to_string(i) + "]': " + e.what());
      }
      const auto& m = c.methods.back();
      if (m.kind == MethodKind::Baseline && m.set_index >= c.annotators.size()) {
        throw ConfigError("'methods[" + std::to_string(i) + "]': label set " + std::to_string(m.set_index) +
                          " does not exist (" + std::to_string(c.annotators.size()) + " annotators)");
      }
    }
  }

  c.seeds = read_list<std::uint64_t>(root, "", "seeds", {});
  if (c.seeds.empty()) throw ConfigError("'seeds' must list at least one seed");
  c.val_fraction = read<double>(root, "", "val_fraction", c.val_fraction);
  require_range(c.val_fraction > 0 && c.val_fraction < 1, "val_fraction", "(0, 1)");
  c.output = read<std::string>(root, "", "output", c.output);
  c.trace = read<bool>(root, "", "trace", c.trace);

  if (root.contains("sweep")) {
    const auto& s = require_object(root.at("sweep"), "sweep");
    reject_unknown(s, "sweep", {"levels", "level"});
    c.sweep_levels = read_list<double>(s, "sweep", "levels", c.sweep_levels);
    c.sweep_level = read<double>(s, "sweep", "level", c.sweep_level);
    for (double l : c.sweep_levels) require_range(l >= 0 && l < 1, "sweep.levels", "every level in [0, 1)");
    require_range(c.sweep_level >= 0 && c.sweep_level <= 1, "sweep.level", "[0, 1]");
  }

  c.canonical = canonical_json(c).dump();
  c.hash = stable_hash(c.canonical);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace aol
