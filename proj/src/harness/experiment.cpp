#include "aol/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "aol/metrics.hpp"
#include "aol/ops.hpp"
#include "aol/rng.hpp"

namespace aol {

namespace {

constexpr std::uint64_t kAnnotatorStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kSubsetStream = 3;

LabeledDataset random_subset(const LabeledDataset& ds, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n >= ds.size()) return ds;
  auto order = epoch_order(ds.size(), derive_seed(seed, kSubsetStream), 0);
  order.resize(n);
  std::sort(order.begin(), order.end());
  return ds.subset(order);
}

// Fraction of samples whose predicted class equals the label of each set,
// averaged over the sets.
double agreement(const std::vector<std::size_t>& predicted, const LabeledDataset& ds,
                 const std::vector<std::size_t>& sets) {
  double total = 0.0;
  for (auto m : sets) {
    std::vector<std::size_t> labels(ds.label_sets[m].labels.begin(), ds.label_sets[m].labels.end());
    total += accuracy(predicted, labels);
  }
  return total / static_cast<double>(sets.size());
}

double mean_bce(const Tensor& probs, const LabeledDataset& ds, const std::vector<std::size_t>& sets) {
  double total = 0.0;
  for (auto m : sets) total += bce_loss(probs, one_hot(ds.label_sets[m].labels, ds.n_classes)).item();
  return total / static_cast<double>(sets.size());
}

ForwardResult forward_all(const Classifier& model, const LabeledDataset& ds) {
  Tensor x({ds.size(), ds.dim}, ds.features);
  std::optional<Tensor> aux;
  if (ds.aux_dim) aux = Tensor({ds.size(), ds.aux_dim}, ds.aux);
  return model.forward(x, aux);
}

std::vector<std::size_t> reference_sets(const Method& method, std::size_t n_sets) {
  if (method.kind == MethodKind::Baseline) return {method.set_index};
  std::vector<std::size_t> all(n_sets);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

struct Job {
  ExperimentConfig config;
  std::shared_ptr<const SeedData> data;
  std::uint64_t seed = 0;
  Method method;
  std::string sweep_kind;
  std::optional<double> sweep_value;
};

std::string trace_file_name(const ResultRecord& r) {
  std::string tag = r.tag();
  for (auto& c : tag) {
    if (c == ':' || c == '@' || c == '=') c = '_';
  }
  return r.config_hash + "_seed" + std::to_string(r.seed) + "_" + tag + ".jsonl";
}

void write_trace(const std::vector<IterationTrace>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& t : trace) {
    nlohmann::json j{{"iter", t.iter},
                     {"weights_mean", t.weights_mean},
                     {"loss_pre", t.loss_pre},
                     {"model_update_norm", t.model_update_norm},
                     {"attention_update_norm", t.attention_update_norm}};
    j["loss_post"] = t.loss_post ? nlohmann::json(*t.loss_post) : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

RunReport execute(std::vector<Job> jobs, const RunOptions& options, const std::string& plot_name) {
  struct Slot {
    std::optional<ResultRecord> record;
    std::vector<IterationTrace> trace;
    std::string failure;
  };
  std::vector<Slot> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        auto* trace = job.config.trace ? &slots[i].trace : nullptr;
        auto record = run_single(job.config, *job.data, job.seed, job.method, trace);
        record.sweep_kind = job.sweep_kind;
        record.sweep_value = job.sweep_value;
        slots[i].record = std::move(record);
      } catch (const std::exception& e) {
        std::string where = "seed " + std::to_string(job.seed) + ", method " + job.method.tag();
        if (job.sweep_value) where += ", " + job.sweep_kind + " " + std::to_string(*job.sweep_value);
        slots[i].failure = where + ": " + e.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(options.jobs, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunReport report;
  for (auto& slot : slots) {
    if (slot.record) report.records.push_back(*slot.record);
    if (!slot.failure.empty()) report.failures.push_back(slot.failure);
  }

  if (!options.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(options.out_dir);
    write_csv(report.records, (fs::path(options.out_dir) / "results.csv").string());
    write_jsonl(report.records, (fs::path(options.out_dir) / "results.jsonl").string());
    if (!plot_name.empty()) {
      write_plot_csv(aggregate(report.records), (fs::path(options.out_dir) / plot_name).string());
    }
    for (const auto& slot : slots) {
      if (!slot.record || slot.trace.empty()) continue;
      fs::create_directories(fs::path(options.out_dir) / "traces");
      write_trace(slot.trace, (fs::path(options.out_dir) / "traces" / trace_file_name(*slot.record)).string());
    }
  }
  return report;
}

std::vector<Job> jobs_for(const ExperimentConfig& config, const std::vector<Method>& methods,
                          const std::string& sweep_kind, std::optional<double> sweep_value) {
  std::vector<Job> jobs;
  for (auto seed : config.seeds) {
    auto data = std::make_shared<const SeedData>(build_seed_data(config, seed));
    for (const auto& method : methods) jobs.push_back({config, data, seed, method, sweep_kind, sweep_value});
  }
  return jobs;
}

AnnotatorSpec leveled(AnnotatorKind kind, double level) {
  AnnotatorSpec spec;
  spec.kind = kind;
  spec.noise_level = level;
  return spec;
}

AnnotatorSpec average_of(std::vector<AnnotatorSpec> components) {
  AnnotatorSpec spec;
  spec.kind = AnnotatorKind::Average;
  spec.components = std::move(components);
  return spec;
}

}  // namespace

SeedData build_seed_data(const ExperimentConfig& config, std::uint64_t seed) {
  LabeledDataset pool;
  SeedData data;
  if (const auto* synth = std::get_if<SyntheticSource>(&config.dataset)) {
    SyntheticSpec spec = synth->spec;
    spec.seed = seed;
    pool = synth_blobs(spec);
    data.test = synth_blobs_heldout(spec, synth->test_samples_per_class);
  } else {
    const auto& cifar = std::get<Cifar10Source>(config.dataset);
    pool = random_subset(load_cifar10(cifar.train_paths), cifar.subset, seed);
    data.test = random_subset(load_cifar10(cifar.test_paths), cifar.test_subset, seed);
  }
  auto labeled = attach_annotators(pool, config.annotators, derive_seed(seed, kAnnotatorStream));
  labeled.validate();
  std::tie(data.train, data.val) = split(labeled, config.val_fraction, seed);
  return data;
}

Classifier initial_model(const ExperimentConfig& config, const LabeledDataset& train, std::uint64_t seed) {
  std::vector<std::size_t> dims{train.dim};
  dims.insert(dims.end(), config.layers.begin(), config.layers.end());
  Rng rng(derive_seed(seed, kInitStream));
  return Classifier::init(dims, train.n_classes, train.aux_dim, rng);
}

ResultRecord run_single(const ExperimentConfig& config, const SeedData& data, std::uint64_t seed,
                        const Method& method, std::vector<IterationTrace>* trace) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n_sets = data.train.n_label_sets();
  if (method.kind == MethodKind::Baseline && method.set_index >= n_sets) {
    throw std::invalid_argument("baseline label set " + std::to_string(method.set_index) + " does not exist");
  }
  MetaConfig meta = config.meta;
  meta.seed = seed;
  const auto init = initial_model(config, data.train, seed);
  const auto sets = reference_sets(method, n_sets);

  ResultRecord record;
  record.config_hash = config.hash;
  record.seed = seed;
  record.method = method.tag();
  record.n_sets = n_sets;
  std::optional<Classifier> best;
  double best_accuracy = -1.0;

  EpochHook on_epoch = [&](const EpochSummary& summary, const Classifier& model) {
    const auto val = forward_all(model, data.val);
    EpochMetrics m;
    m.epoch = summary.epoch;
    m.train_loss = summary.train_loss;
    m.val_accuracy = agreement(predict_classes(val), data.val, sets);
    m.val_loss = mean_bce(val.probs, data.val, sets);
    m.attention_mean = summary.attention_mean;
    if (m.val_accuracy > best_accuracy) {
      best_accuracy = m.val_accuracy;
      best = model;
      record.selected_epoch = m.epoch;
    }
    record.epochs.push_back(std::move(m));
  };

  Classifier final_model;
  if (method.kind == MethodKind::Ours) {
    TraceSink sink;
    if (trace) sink = [trace](const IterationTrace& t) { trace->push_back(t); };
    final_model = train_meta(init, data.train, meta, on_epoch, sink).model;
  } else {
    LabelChoice choice = method.kind == MethodKind::Baseline ? LabelChoice{method.set_index}
                                                              : LabelChoice{AveragedLabels{}};
    final_model = train_baseline(init, data.train, choice, meta, on_epoch);
  }
  if (!best) best = final_model;

  std::vector<std::size_t> truth(data.test.clean_labels.begin(), data.test.clean_labels.end());
  const auto test = forward_all(*best, data.test);
  record.test_accuracy = accuracy(predict_classes(test), truth);
  record.final_test_accuracy = accuracy(predict_classes(forward_all(final_model, data.test)), truth);
  const auto auc = one_vs_rest_auc(test.probs.data(), truth, data.test.n_classes);
  record.per_class_auc = auc.per_class;
  record.mean_auc = auc.mean;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  return execute(jobs_for(config, config.methods, "", std::nullopt), options, "");
}

std::vector<AnnotatorSpec> noise_roster(double level) {
  std::vector<AnnotatorSpec> roster{leveled(AnnotatorKind::HammerSpammer, level),
                                    leveled(AnnotatorKind::StructuredFlips, level),
                                    leveled(AnnotatorKind::OrderedConfusion, level)};
  roster.push_back(average_of(roster));
  return roster;
}

std::vector<AnnotatorSpec> annotator_roster(double level, std::size_t m) {
  if (m < 2 || m > 5) throw std::invalid_argument("annotator roster size must be in [2, 5]");
  std::vector<AnnotatorSpec> roster{leveled(AnnotatorKind::HammerSpammer, level),
                                    leveled(AnnotatorKind::Adversarial, 1.0),
                                    leveled(AnnotatorKind::OrderedConfusion, level),
                                    leveled(AnnotatorKind::StructuredFlips, level)};
  roster.resize(std::min<std::size_t>(m, 4));
  if (m == 5) roster.push_back(average_of(roster));
  return roster;
}

RunReport sweep_noise(const ExperimentConfig& config, const std::vector<double>& levels,
                      const RunOptions& options) {
  for (double level : levels) {
    if (!(level >= 0.0 && level < 1.0)) throw std::invalid_argument("noise levels must lie in [0, 1)");
  }
  std::vector<Method> methods{Method{}};
  for (std::size_t m = 0; m < 4; ++m) methods.push_back({MethodKind::Baseline, m});
  std::vector<Job> jobs;
  for (double level : levels) {
    ExperimentConfig point = config;
    point.annotators = noise_roster(level);
    auto more = jobs_for(point, methods, "noise", level);
    jobs.insert(jobs.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  return execute(std::move(jobs), options, "plot_noise.csv");
}

RunReport sweep_annotators(const ExperimentConfig& config, const RunOptions& options) {
  std::vector<Job> jobs;
  for (std::size_t m = 2; m <= 5; ++m) {
    ExperimentConfig point = config;
    point.annotators = annotator_roster(config.sweep_level, m);
    auto more = jobs_for(point, {Method{}}, "annotators", static_cast<double>(m));
    jobs.insert(jobs.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  return execute(std::move(jobs), options, "plot_annotators.csv");
}

}  // namespace aol
