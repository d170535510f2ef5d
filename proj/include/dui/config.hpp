#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dui/dataset.hpp"
#include "dui/request.hpp"
#include "dui/unlearn.hpp"

namespace dui {

// ---------------------------------------------------------------------------
// Experiment configuration. The on-disk form is a line-based key-value file
// with [section] headers, '#' comments and a mandatory schema_version key;
// see the README for the full grammar. Unknown sections or keys are rejected
// with line numbers; everything except the dataset paths has a default.
// ---------------------------------------------------------------------------

struct DatasetConfig {
  std::string kind = "synthetic";  // synthetic | csv | idx | citation
  std::string path;                             // csv
  std::string images_path, labels_path;         // idx (first pair)
  std::string images_path2, labels_path2;       // idx (optional second pair, concatenated)
  std::string content_path, cites_path;         // citation
  SyntheticSpec synthetic;
};

struct RequestConfig {
  Strategy strategy = Strategy::random;
  RequestMode mode = RequestMode::points;
  std::vector<double> unlearn_ratios = {0.05};
  double feature_ratio = 1.0;
  Replacement replacement = Replacement::zero;
  std::uint64_t seed = 13;
};

struct ExperimentConfig {
  int schema_version = 1;
  DatasetConfig dataset;
  // arch/hidden/l2/seed come from the file; input_dim and class_count are
  // filled from the loaded dataset.
  ModelSpec model{Arch::logreg, 0, 0, 16, 0.01, 42};
  SplitSpec split{0.9, 7};
  RequestConfig request;
  std::vector<UnlearnMethod> methods = {UnlearnMethod::retrain, UnlearnMethod::influence,
                                        UnlearnMethod::dui};
  UnlearnConfig unlearn;
  TrainOptions train;
  int repeats = 1;
  std::uint64_t run_seed = 42;
  int threads = 1;
  std::string output_dir = "out";
};

namespace cfg_detail {

struct Line {
  int number;
  std::string section;
  std::string key;
  std::string value;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

inline double to_double(const Line& l) {
  try {
    std::size_t pos;
    const double v = std::stod(l.value, &pos);
    if (pos != l.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(l.number, "expected a number for '" + l.key + "', got '" + l.value + "'");
  }
}

inline std::int64_t to_int(const Line& l) {
  try {
    std::size_t pos;
    const std::int64_t v = std::stoll(l.value, &pos);
    if (pos != l.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(l.number, "expected an integer for '" + l.key + "', got '" + l.value + "'");
  }
}

inline std::uint64_t to_u64(const Line& l) {
  try {
    std::size_t pos;
    const std::uint64_t v = std::stoull(l.value, &pos);
    if (pos != l.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(l.number, "expected an unsigned integer for '" + l.key + "', got '" + l.value + "'");
  }
}

inline bool to_bool(const Line& l) {
  if (l.value == "true" || l.value == "1") return true;
  if (l.value == "false" || l.value == "0") return false;
  fail(l.number, "expected true/false for '" + l.key + "', got '" + l.value + "'");
}

inline std::vector<double> to_double_list(const Line& l) {
  std::vector<double> out;
  std::stringstream ss(l.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(l.number, "empty entry in list for '" + l.key + "'");
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      fail(l.number, "expected a number in list for '" + l.key + "', got '" + item + "'");
    }
  }
  if (out.empty()) fail(l.number, "empty list for '" + l.key + "'");
  return out;
}

inline KernelKind to_kernel(const Line& l) {
  if (l.value == "rbf") return KernelKind::rbf;
  if (l.value == "linear") return KernelKind::linear;
  if (l.value == "delta") return KernelKind::delta;
  fail(l.number, "unknown kernel '" + l.value + "' (expected rbf|linear|delta)");
}

inline std::optional<double> to_bandwidth(const Line& l) {
  if (l.value == "median") return std::nullopt;
  const double v = to_double(l);
  if (!(v > 0)) fail(l.number, "bandwidth must be positive or 'median'");
  return v;
}

}  // namespace cfg_detail

inline ExperimentConfig parse_config(std::istream& in) {
  using cfg_detail::Line;
  using cfg_detail::fail;
  ExperimentConfig cfg;
  bool saw_version = false;

  static const std::map<std::string, std::set<std::string>> schema = {
      {"", {"schema_version"}},
      {"dataset",
       {"kind", "path", "images_path", "labels_path", "images_path2", "labels_path2",
        "content_path", "cites_path", "n", "m", "classes", "class_sep", "noise", "clip", "seed"}},
      {"model", {"arch", "hidden_dim", "l2_reg", "seed"}},
      {"split", {"train_fraction", "seed"}},
      {"request", {"strategy", "mode", "unlearn_ratios", "feature_ratio", "replacement", "seed"}},
      {"methods", {"use"}},
      {"unlearn",
       {"lambda", "solver", "lissa_iterations", "lissa_scale", "damping", "lissa_repeats",
        "probe_spectrum"}},
      {"independence",
       {"alpha", "normalization", "feature_kernel", "feature_bandwidth", "label_kernel",
        "prediction_kernel", "batch_limit", "batch_seed", "mi_feature"}},
      {"train", {"learning_rate", "epochs", "tolerance"}},
      {"run", {"repeats", "seed", "threads", "output_dir"}},
  };

  std::string section;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto hash = raw.find('#');
    std::string text = cfg_detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') fail(number, "malformed section header '" + text + "'");
      section = text.substr(1, text.size() - 2);
      if (!schema.count(section)) fail(number, "unknown section [" + section + "]");
      continue;
    }
    const auto space = text.find_first_of(" \t");
    Line l{number, section, space == std::string::npos ? text : text.substr(0, space),
           space == std::string::npos ? "" : cfg_detail::trim(text.substr(space))};
    if (!schema.at(section).count(l.key))
      fail(number, "unknown key '" + l.key + "' in section [" + (section.empty() ? "top level" : section) + "]");
    if (l.value.empty()) fail(number, "missing value for '" + l.key + "'");

    if (section.empty()) {
      const auto v = cfg_detail::to_int(l);
      if (v != 1) fail(number, "unsupported schema_version " + std::to_string(v) + " (expected 1)");
      cfg.schema_version = static_cast<int>(v);
      saw_version = true;
    } else if (section == "dataset") {
      auto& d = cfg.dataset;
      if (l.key == "kind") {
        if (l.value != "synthetic" && l.value != "csv" && l.value != "idx" && l.value != "citation")
          fail(number, "unknown dataset kind '" + l.value + "'");
        d.kind = l.value;
      } else if (l.key == "path") d.path = l.value;
      else if (l.key == "images_path") d.images_path = l.value;
      else if (l.key == "labels_path") d.labels_path = l.value;
      else if (l.key == "images_path2") d.images_path2 = l.value;
      else if (l.key == "labels_path2") d.labels_path2 = l.value;
      else if (l.key == "content_path") d.content_path = l.value;
      else if (l.key == "cites_path") d.cites_path = l.value;
      else if (l.key == "n") d.synthetic.n = cfg_detail::to_int(l);
      else if (l.key == "m") d.synthetic.m = cfg_detail::to_int(l);
      else if (l.key == "classes") d.synthetic.class_count = static_cast<int>(cfg_detail::to_int(l));
      else if (l.key == "class_sep") d.synthetic.class_sep = cfg_detail::to_double(l);
      else if (l.key == "noise") d.synthetic.noise = cfg_detail::to_double(l);
      else if (l.key == "clip") d.synthetic.clip = cfg_detail::to_bool(l);
      else if (l.key == "seed") d.synthetic.seed = cfg_detail::to_u64(l);
    } else if (section == "model") {
      if (l.key == "arch") {
        if (l.value == "logreg") cfg.model.arch = Arch::logreg;
        else if (l.value == "mlp") cfg.model.arch = Arch::mlp;
        else if (l.value == "gcn") cfg.model.arch = Arch::gcn;
        else fail(number, "unknown arch '" + l.value + "'");
      } else if (l.key == "hidden_dim") cfg.model.hidden_dim = static_cast<int>(cfg_detail::to_int(l));
      else if (l.key == "l2_reg") cfg.model.l2_reg = cfg_detail::to_double(l);
      else if (l.key == "seed") cfg.model.seed = cfg_detail::to_u64(l);
    } else if (section == "split") {
      if (l.key == "train_fraction") cfg.split.train_fraction = cfg_detail::to_double(l);
      else cfg.split.seed = cfg_detail::to_u64(l);
    } else if (section == "request") {
      auto& r = cfg.request;
      if (l.key == "strategy") {
        if (l.value == "random") r.strategy = Strategy::random;
        else if (l.value == "top_k") r.strategy = Strategy::top_k;
        else fail(number, "unknown strategy '" + l.value + "'");
      } else if (l.key == "mode") {
        if (l.value == "points") r.mode = RequestMode::points;
        else if (l.value == "feature_values") r.mode = RequestMode::feature_values;
        else fail(number, "unknown mode '" + l.value + "'");
      } else if (l.key == "unlearn_ratios") r.unlearn_ratios = cfg_detail::to_double_list(l);
      else if (l.key == "feature_ratio") r.feature_ratio = cfg_detail::to_double(l);
      else if (l.key == "replacement") {
        if (l.value == "zero") r.replacement = Replacement::zero;
        else if (l.value == "feature_mean") r.replacement = Replacement::feature_mean;
        else fail(number, "unknown replacement '" + l.value + "'");
      } else r.seed = cfg_detail::to_u64(l);
    } else if (section == "methods") {
      cfg.methods.clear();
      std::stringstream ss(l.value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = cfg_detail::trim(item);
        if (item == "retrain") cfg.methods.push_back(UnlearnMethod::retrain);
        else if (item == "influence") cfg.methods.push_back(UnlearnMethod::influence);
        else if (item == "dui") cfg.methods.push_back(UnlearnMethod::dui);
        else fail(number, "unknown method '" + item + "'");
      }
      if (cfg.methods.empty()) fail(number, "empty method list");
    } else if (section == "unlearn") {
      auto& u = cfg.unlearn;
      if (l.key == "lambda") u.lambda = cfg_detail::to_double(l);
      else if (l.key == "solver") {
        if (l.value == "direct") u.solver = SolverKind::direct;
        else if (l.value == "lissa") u.solver = SolverKind::lissa;
        else fail(number, "unknown solver '" + l.value + "'");
      } else if (l.key == "lissa_iterations") u.lissa_iterations = static_cast<int>(cfg_detail::to_int(l));
      else if (l.key == "lissa_scale") u.lissa_scale = cfg_detail::to_double(l);
      else if (l.key == "damping") u.damping = cfg_detail::to_double(l);
      else if (l.key == "lissa_repeats") u.lissa_repeats = static_cast<int>(cfg_detail::to_int(l));
      else u.probe_spectrum = cfg_detail::to_bool(l);
    } else if (section == "independence") {
      auto& ic = cfg.unlearn.independence;
      if (l.key == "alpha") ic.alpha = cfg_detail::to_double(l);
      else if (l.key == "normalization") {
        if (l.value == "raw_trace") ic.normalization = HsicNormalization::raw_trace;
        else if (l.value == "n_minus_1_squared") ic.normalization = HsicNormalization::n_minus_1_squared;
        else if (l.value == "frobenius") ic.normalization = HsicNormalization::frobenius;
        else fail(number, "unknown normalization '" + l.value + "'");
      } else if (l.key == "feature_kernel") ic.feature_kernel.kind = cfg_detail::to_kernel(l);
      else if (l.key == "feature_bandwidth") ic.feature_kernel.bandwidth = cfg_detail::to_bandwidth(l);
      else if (l.key == "label_kernel") ic.label_kernel.kind = cfg_detail::to_kernel(l);
      else if (l.key == "prediction_kernel") {
        const KernelKind k = cfg_detail::to_kernel(l);
        if (k == KernelKind::delta) fail(number, "non-differentiable prediction kernel");
        ic.prediction_kernel.kind = k;
      } else if (l.key == "batch_limit") ic.batch_limit = static_cast<int>(cfg_detail::to_int(l));
      else if (l.key == "batch_seed") ic.batch_seed = cfg_detail::to_u64(l);
      else ic.mi_feature = static_cast<int>(cfg_detail::to_int(l));
    } else if (section == "train") {
      if (l.key == "learning_rate") cfg.train.learning_rate = cfg_detail::to_double(l);
      else if (l.key == "epochs") cfg.train.epochs = static_cast<int>(cfg_detail::to_int(l));
      else cfg.train.tolerance = cfg_detail::to_double(l);
    } else if (section == "run") {
      if (l.key == "repeats") cfg.repeats = static_cast<int>(cfg_detail::to_int(l));
      else if (l.key == "seed") cfg.run_seed = cfg_detail::to_u64(l);
      else if (l.key == "threads") cfg.threads = static_cast<int>(cfg_detail::to_int(l));
      else cfg.output_dir = l.value;
    }
  }
  if (!saw_version) throw ConfigError("config: missing required key 'schema_version'");
  cfg.unlearn.retrain_options = cfg.train;
  return cfg;
}

inline void validate_config(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  if (d.kind == "csv" && d.path.empty()) throw ConfigError("dataset: csv kind requires 'path'");
  if (d.kind == "idx" && (d.images_path.empty() || d.labels_path.empty()))
    throw ConfigError("dataset: idx kind requires 'images_path' and 'labels_path'");
  if (d.kind == "idx" && d.images_path2.empty() != d.labels_path2.empty())
    throw ConfigError("dataset: idx second pair requires both 'images_path2' and 'labels_path2'");
  if (d.kind == "citation" && (d.content_path.empty() || d.cites_path.empty()))
    throw ConfigError("dataset: citation kind requires 'content_path' and 'cites_path'");
  if (!(cfg.split.train_fraction > 0 && cfg.split.train_fraction < 1))
    throw ConfigError("split: train_fraction must be in (0,1)");
  for (double r : cfg.request.unlearn_ratios)
    if (r < 0 || r >= 1) throw ConfigError("request: unlearn_ratios must lie in [0,1)");
  if (!(cfg.request.feature_ratio > 0 && cfg.request.feature_ratio <= 1))
    throw ConfigError("request: feature_ratio must lie in (0,1]");
  if (cfg.model.l2_reg < 0) throw ConfigError("model: l2_reg must be >= 0");
  if (cfg.model.hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
  if (cfg.unlearn.lambda < 0) throw ConfigError("unlearn: lambda must be >= 0");
  if (cfg.unlearn.lissa_iterations < 1) throw ConfigError("unlearn: lissa_iterations must be >= 1");
  if (!(cfg.unlearn.lissa_scale > 0)) throw ConfigError("unlearn: lissa_scale must be positive");
  if (cfg.unlearn.damping < 0) throw ConfigError("unlearn: damping must be >= 0");
  if (cfg.unlearn.lissa_repeats < 1) throw ConfigError("unlearn: lissa_repeats must be >= 1");
  if (cfg.unlearn.independence.alpha < 0) throw ConfigError("independence: alpha must be >= 0");
  if (cfg.unlearn.independence.batch_limit < 2)
    throw ConfigError("independence: batch_limit must be >= 2");
  if (cfg.train.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(cfg.train.learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
  if (cfg.repeats < 1) throw ConfigError("run: repeats must be >= 1");
  if (cfg.threads < 1) throw ConfigError("run: threads must be >= 1");
  if (cfg.dataset.kind == "synthetic") {
    if (d.synthetic.n < 4) throw ConfigError("dataset: synthetic n must be >= 4");
    if (d.synthetic.m < 1) throw ConfigError("dataset: synthetic m must be >= 1");
    if (d.synthetic.class_count < 2) throw ConfigError("dataset: synthetic classes must be >= 2");
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg = parse_config(in);
  validate_config(cfg);
  return cfg;
}

/// Digest of the effective configuration (canonical key=value dump).
inline std::string config_digest(const ExperimentConfig& c) {
  std::ostringstream s;
  s << "schema_version=" << c.schema_version << ";kind=" << c.dataset.kind << ";path=" << c.dataset.path
    << ";idx=" << c.dataset.images_path << "," << c.dataset.labels_path << ","
    << c.dataset.images_path2 << "," << c.dataset.labels_path2 << ";cit=" << c.dataset.content_path
    << "," << c.dataset.cites_path << ";syn=" << c.dataset.synthetic.n << ","
    << c.dataset.synthetic.m << "," << c.dataset.synthetic.class_count << ","
    << c.dataset.synthetic.class_sep << "," << c.dataset.synthetic.noise << ","
    << c.dataset.synthetic.clip << "," << c.dataset.synthetic.seed
    << ";arch=" << to_string(c.model.arch) << ";hidden=" << c.model.hidden_dim
    << ";l2=" << c.model.l2_reg << ";mseed=" << c.model.seed
    << ";frac=" << c.split.train_fraction << ";sseed=" << c.split.seed
    << ";strategy=" << to_string(c.request.strategy) << ";mode=" << to_string(c.request.mode);
  for (double r : c.request.unlearn_ratios) s << ",r" << r;
  s << ";fr=" << c.request.feature_ratio << ";repl=" << to_string(c.request.replacement)
    << ";rseed=" << c.request.seed << ";methods=";
  for (auto m : c.methods) s << to_string(m) << ",";
  s << ";lambda=" << c.unlearn.lambda << ";solver=" << to_string(c.unlearn.solver)
    << ";J=" << c.unlearn.lissa_iterations << ";beta=" << c.unlearn.lissa_scale
    << ";delta=" << c.unlearn.damping << ";reps=" << c.unlearn.lissa_repeats
    << ";alpha=" << c.unlearn.independence.alpha
    << ";norm=" << to_string(c.unlearn.independence.normalization)
    << ";fk=" << to_string(c.unlearn.independence.feature_kernel.kind) << ","
    << (c.unlearn.independence.feature_kernel.bandwidth ? *c.unlearn.independence.feature_kernel.bandwidth : -1)
    << ";lk=" << to_string(c.unlearn.independence.label_kernel.kind)
    << ";pk=" << to_string(c.unlearn.independence.prediction_kernel.kind)
    << ";bl=" << c.unlearn.independence.batch_limit << ";bs=" << c.unlearn.independence.batch_seed
    << ";mif=" << c.unlearn.independence.mi_feature << ";lr=" << c.train.learning_rate
    << ";ep=" << c.train.epochs << ";tol=" << c.train.tolerance << ";repeats=" << c.repeats
    << ";runseed=" << c.run_seed;
  Digest d;
  d.str(s.str());
  return to_hex(d.value());
}

}  // namespace dui
