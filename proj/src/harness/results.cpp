#include "aol/results.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace aol {

using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (s.back() == sep) out.emplace_back();
  return out;
}

template <typename F>
std::string join(const std::vector<double>& values, char sep, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += f(values[i]);
  }
  return out;
}

std::string join_epochs(const std::vector<EpochMetrics>& epochs, double EpochMetrics::*field) {
  std::string out;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (i) out += ';';
    out += fmt(epochs[i].*field);
  }
  return out;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

}  // namespace

std::string ResultRecord::tag() const {
  std::string t = method;
  if (sweep_value) t += "@" + sweep_kind + "=" + fmt(*sweep_value);
  return t;
}

bool ResultRecord::same_metrics(const ResultRecord& other) const {
  ResultRecord a = *this;
  ResultRecord b = other;
  a.wall_seconds = b.wall_seconds = 0.0;
  return a == b;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns{
      "config_hash",      "seed",           "method",          "sweep_kind",
      "sweep_value",      "n_sets",         "selected_epoch",  "test_accuracy",
      "final_test_accuracy", "mean_auc",    "per_class_auc",   "epoch_train_loss",
      "epoch_val_accuracy", "epoch_val_loss", "epoch_attention_mean", "wall_seconds"};
  return columns;
}

std::string to_csv_row(const ResultRecord& r) {
  std::vector<std::string> f;
  f.push_back(r.config_hash);
  f.push_back(std::to_string(r.seed));
  f.push_back(r.method);
  f.push_back(r.sweep_kind);
  f.push_back(r.sweep_value ? fmt(*r.sweep_value) : "");
  f.push_back(std::to_string(r.n_sets));
  f.push_back(std::to_string(r.selected_epoch));
  f.push_back(fmt(r.test_accuracy));
  f.push_back(fmt(r.final_test_accuracy));
  f.push_back(fmt(r.mean_auc));
  std::string auc;
  for (std::size_t c = 0; c < r.per_class_auc.size(); ++c) {
    if (c) auc += ';';
    if (r.per_class_auc[c]) auc += fmt(*r.per_class_auc[c]);
  }
  f.push_back(auc);
  f.push_back(join_epochs(r.epochs, &EpochMetrics::train_loss));
  f.push_back(join_epochs(r.epochs, &EpochMetrics::val_accuracy));
  f.push_back(join_epochs(r.epochs, &EpochMetrics::val_loss));
  std::string attention;
  for (std::size_t e = 0; e < r.epochs.size(); ++e) {
    if (e) attention += '|';
    attention += join(r.epochs[e].attention_mean, ';', fmt);
  }
  f.push_back(attention);
  f.push_back(fmt(r.wall_seconds));
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) line += ',';
    line += f[i];
  }
  return line;
}

ResultRecord from_csv_row(const std::string& line) {
  auto f = split_on(line, ',');
  if (f.size() != csv_columns().size()) {
    throw std::invalid_argument("CSV row has " + std::to_string(f.size()) + " fields, expected " +
                                std::to_string(csv_columns().size()));
  }
  ResultRecord r;
  r.config_hash = f[0];
  r.seed = std::stoull(f[1]);
  r.method = f[2];
  r.sweep_kind = f[3];
  if (!f[4].empty()) r.sweep_value = parse_double(f[4]);
  r.n_sets = std::stoul(f[5]);
  r.selected_epoch = std::stoul(f[6]);
  r.test_accuracy = parse_double(f[7]);
  r.final_test_accuracy = parse_double(f[8]);
  r.mean_auc = parse_double(f[9]);
  for (const auto& a : split_on(f[10], ';')) {
    r.per_class_auc.push_back(a.empty() ? std::nullopt : std::optional<double>(parse_double(a)));
  }
  const auto train = split_on(f[11], ';');
  const auto val_acc = split_on(f[12], ';');
  const auto val_loss = split_on(f[13], ';');
  const auto attention = split_on(f[14], '|');
  if (val_acc.size() != train.size() || val_loss.size() != train.size() ||
      (!attention.empty() && attention.size() != train.size())) {
    throw std::invalid_argument("CSV row has inconsistent per-epoch columns");
  }
  for (std::size_t e = 0; e < train.size(); ++e) {
    EpochMetrics m;
    m.epoch = e;
    m.train_loss = parse_double(train[e]);
    m.val_accuracy = parse_double(val_acc[e]);
    m.val_loss = parse_double(val_loss[e]);
    if (!attention.empty()) {
      for (const auto& w : split_on(attention[e], ';')) m.attention_mean.push_back(parse_double(w));
    }
    r.epochs.push_back(std::move(m));
  }
  r.wall_seconds = parse_double(f[15]);
  return r;
}

std::string to_json_line(const ResultRecord& r) {
  json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["method"] = r.method;
  j["sweep_kind"] = r.sweep_kind;
  j["sweep_value"] = r.sweep_value ? json(*r.sweep_value) : json(nullptr);
  j["n_sets"] = r.n_sets;
  j["selected_epoch"] = r.selected_epoch;
  j["test_accuracy"] = r.test_accuracy;
  j["final_test_accuracy"] = r.final_test_accuracy;
  j["mean_auc"] = r.mean_auc;
  j["per_class_auc"] = json::array();
  for (const auto& a : r.per_class_auc) j["per_class_auc"].push_back(a ? json(*a) : json(nullptr));
  j["epochs"] = json::array();
  for (const auto& e : r.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"val_accuracy", e.val_accuracy},
                           {"val_loss", e.val_loss},
                           {"attention_mean", e.attention_mean}});
  }
  j["wall_seconds"] = r.wall_seconds;
  return j.dump();
}

ResultRecord from_json_line(const std::string& line) {
  const auto j = json::parse(line);
  ResultRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.method = j.at("method").get<std::string>();
  r.sweep_kind = j.at("sweep_kind").get<std::string>();
  if (!j.at("sweep_value").is_null()) r.sweep_value = j.at("sweep_value").get<double>();
  r.n_sets = j.at("n_sets").get<std::size_t>();
  r.selected_epoch = j.at("selected_epoch").get<std::size_t>();
  r.test_accuracy = j.at("test_accuracy").get<double>();
  r.final_test_accuracy = j.at("final_test_accuracy").get<double>();
  r.mean_auc = j.at("mean_auc").get<double>();
  for (const auto& a : j.at("per_class_auc")) {
    r.per_class_auc.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
  }
  for (const auto& e : j.at("epochs")) {
    r.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                        e.at("val_accuracy").get<double>(), e.at("val_loss").get<double>(),
                        e.at("attention_mean").get<std::vector<double>>()});
  }
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

void write_csv(const std::vector<ResultRecord>& records, const std::string& path) {
  auto out = open_for_write(path);
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<ResultRecord> read_csv(const std::string& path) {
  auto in = open_for_read(path);
  std::string line;
  std::getline(in, line);
  std::string expected;
  for (std::size_t i = 0; i < csv_columns().size(); ++i) expected += (i ? "," : "") + csv_columns()[i];
  if (line != expected) throw std::invalid_argument(path + ": unexpected CSV header");
  std::vector<ResultRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(from_csv_row(line));
  }
  return out;
}

void write_jsonl(const std::vector<ResultRecord>& records, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& r : records) out << to_json_line(r) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<ResultRecord> read_jsonl(const std::string& path) {
  auto in = open_for_read(path);
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(from_json_line(line));
  }
  return out;
}

std::vector<PlotPoint> aggregate(const std::vector<ResultRecord>& records) {
  std::map<std::pair<double, std::string>, std::vector<double>> groups;
  for (const auto& r : records) groups[{r.sweep_value.value_or(0.0), r.method}].push_back(r.test_accuracy);
  std::vector<PlotPoint> out;
  for (const auto& [key, values] : groups) {
    PlotPoint p{key.first, key.second, 0.0, 0.0, values.size()};
    for (double v : values) p.mean += v / static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - p.mean) * (v - p.mean);
      p.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.push_back(p);
  }
  return out;
}

void write_plot_csv(const std::vector<PlotPoint>& points, const std::string& path) {
  auto out = open_for_write(path);
  out << "x,method,mean,stddev,n\n";
  for (const auto& p : points) {
    out << fmt(p.x) << ',' << p.method << ',' << fmt(p.mean) << ',' << fmt(p.stddev) << ',' << p.n << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace aol
