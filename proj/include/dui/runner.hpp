#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "dui/config.hpp"
#include "dui/dataset_io.hpp"
#include "dui/metrics.hpp"
#include "dui/unlearn.hpp"

namespace dui {

struct LoadedData {
  std::optional<DatasetTable> table;
  std::optional<GraphDataset> graph;
  std::string note;  // loader remarks (dropped edge counts etc.)

  bool is_graph() const { return graph.has_value(); }
  const DatasetTable& full_table() const { return is_graph() ? graph->table : *table; }
};

inline LoadedData load_dataset(const DatasetConfig& d) {
  LoadedData out;
  if (d.kind == "synthetic") {
    out.table = make_synthetic(d.synthetic);
  } else if (d.kind == "csv") {
    out.table = load_csv(d.path);
  } else if (d.kind == "idx") {
    DatasetTable t = load_idx(d.images_path, d.labels_path);
    if (!d.images_path2.empty()) t = concat(t, load_idx(d.images_path2, d.labels_path2));
    out.table = std::move(t);
  } else if (d.kind == "citation") {
    CitationLoadResult r = load_citation_graph(d.content_path, d.cites_path);
    out.note = "dropped_unknown_edges=" + std::to_string(r.dropped_unknown_edges) +
               " dropped_self_edges=" + std::to_string(r.dropped_self_edges);
    out.graph = std::move(r.graph);
  } else {
    throw ConfigError("unknown dataset kind '" + d.kind + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment grid. One record per (method, ratio, repeat) cell; failed cells
// carry their error text and the run continues.
// ---------------------------------------------------------------------------
struct CellRecord {
  std::string method;
  double ratio = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  EvalReport eval;  // runtime_seconds inside is wall-clock (volatile)
  UnlearnDiagnostics diagnostics;
  std::string request_digest;
  std::string error;  // empty on success
  bool ok() const { return error.empty(); }
};

struct ExperimentOutcome {
  std::vector<CellRecord> records;
  std::string config_digest;
  std::string dataset_note;
  Eigen::Index n_full = 0, n_train = 0, n_test = 0, m = 0;
  int class_count = 0;
  std::vector<std::string> label_names;
  bool any_failed = false;
};

struct Aggregate {
  std::string method;
  double ratio = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
  double micro_mean = 0.0, brier_mean = 0.0;
  double hsic_shift_mean = 0.0, mi_shift_mean = 0.0;
  double rt_mean = 0.0;
  int count = 0;
};

inline std::vector<Aggregate> aggregate(const ExperimentOutcome& outcome) {
  std::vector<Aggregate> out;
  for (const CellRecord& r : outcome.records) {
    if (!r.ok()) continue;
    Aggregate* agg = nullptr;
    for (auto& a : out)
      if (a.method == r.method && a.ratio == r.ratio) agg = &a;
    if (!agg) {
      out.push_back(Aggregate{r.method, r.ratio, 0, 0, 0, 0, 0, 0, 0, 0});
      agg = &out.back();
    }
    agg->f1_mean += r.eval.macro_f1;
    agg->micro_mean += r.eval.micro_f1;
    agg->brier_mean += r.eval.brier;
    agg->hsic_shift_mean += r.eval.hsic_shift;
    agg->mi_shift_mean += r.eval.mi_shift;
    agg->rt_mean += r.eval.runtime_seconds;
    agg->count += 1;
  }
  for (auto& a : out) {
    const double n = a.count;
    a.f1_mean /= n;
    a.micro_mean /= n;
    a.brier_mean /= n;
    a.hsic_shift_mean /= n;
    a.mi_shift_mean /= n;
    a.rt_mean /= n;
  }
  // sample standard deviation (n-1 denominator; 0 for a single repeat)
  for (auto& a : out) {
    if (a.count < 2) {
      a.f1_std = 0.0;
      continue;
    }
    double ss = 0.0;
    for (const CellRecord& r : outcome.records)
      if (r.ok() && r.method == a.method && r.ratio == a.ratio)
        ss += (r.eval.macro_f1 - a.f1_mean) * (r.eval.macro_f1 - a.f1_mean);
    a.f1_std = std::sqrt(ss / (a.count - 1));
  }
  return out;
}

/// Loaded dataset, split, and the spec completed with the data dimensions;
/// shared by the experiment grid and the single-shot CLI subcommands.
struct Prepared {
  LoadedData data;
  SplitIndices split;
  DatasetTable train_table;          // tabular only
  std::vector<int> train_loss;       // indices into the training view
  DatasetTable test_table;           // tabular only
  ModelSpec base_spec;               // input_dim/class_count filled

  DataView train_view() const {
    return data.is_graph() ? view(*data.graph) : view(train_table);
  }
};

inline Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  p.data = load_dataset(cfg.dataset);
  const DatasetTable& full = p.data.full_table();
  p.split = make_split(full.n(), cfg.split);
  if (p.data.is_graph()) {
    p.train_loss = p.split.train;
  } else {
    p.train_table = subset_rows(full, p.split.train);
    p.test_table = subset_rows(full, p.split.test);
    p.train_loss.resize(p.split.train.size());
    for (std::size_t i = 0; i < p.train_loss.size(); ++i) p.train_loss[i] = static_cast<int>(i);
  }
  p.base_spec = cfg.model;
  p.base_spec.input_dim = static_cast<int>(full.m());
  p.base_spec.class_count = full.class_count;
  return p;
}

inline UnlearnRequest make_request(const Prepared& p, const RequestConfig& rc, double ratio,
                                   std::uint64_t seed) {
  const DatasetTable& table = p.data.is_graph() ? p.data.graph->table : p.train_table;
  std::vector<int> candidates;
  if (p.data.is_graph()) candidates = p.split.train;
  UnlearnRequest r = rc.strategy == Strategy::random
                         ? random_request(table, ratio, rc.mode, seed, rc.feature_ratio, candidates)
                         : topk_request(table, ratio, rc.feature_ratio, rc.mode, candidates);
  r.replacement = rc.replacement;
  return r;
}

inline AppliedRequest apply_request(const Prepared& p, const UnlearnRequest& r) {
  return p.data.is_graph() ? apply(*p.data.graph, r) : apply(p.train_table, r);
}

/// Metrics of theta_star on the held-out split.
inline EvalReport evaluate(const Prepared& p, const ModelSpec& spec, const Vec& theta_star,
                           const AppliedRequest& applied) {
  EvalReport e;
  Mat probs;
  IVec truth;
  if (p.data.is_graph()) {
    const Mat all = forward(spec, theta_star, applied.view_retained());
    std::vector<int> rows;
    rows.reserve(p.split.test.size());
    for (int t : p.split.test) {
      const int r = applied.retained_row_of_original[static_cast<std::size_t>(t)];
      if (r >= 0) rows.push_back(r);
    }
    if (rows.empty()) throw PreconditionError("evaluate: no test nodes survived the request");
    probs = detail::take_rows(all, rows);
    truth = detail::take(applied.retained_table().labels, rows);
  } else {
    probs = forward(spec, theta_star, view(p.test_table));
    truth = p.test_table.labels;
  }
  const IVec predicted = predict_classes(probs);
  e.macro_f1 = macro_f1(predicted, truth, spec.class_count);
  e.micro_f1 = micro_f1(predicted, truth, spec.class_count);
  e.brier = brier(probs, truth);
  return e;
}

/// Metrics of a model on the held-out split, without any request applied.
inline EvalReport evaluate_holdout(const Prepared& p, const ModelSpec& spec, const Vec& theta) {
  EvalReport e;
  Mat probs;
  IVec truth;
  if (p.data.is_graph()) {
    const Mat all = forward(spec, theta, view(*p.data.graph));
    probs = detail::take_rows(all, p.split.test);
    truth = detail::take(p.data.graph->table.labels, p.split.test);
  } else {
    probs = forward(spec, theta, view(p.test_table));
    truth = p.test_table.labels;
  }
  const IVec predicted = predict_classes(probs);
  e.macro_f1 = macro_f1(predicted, truth, spec.class_count);
  e.micro_f1 = micro_f1(predicted, truth, spec.class_count);
  e.brier = brier(probs, truth);
  return e;
}

inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentOutcome outcome;
  outcome.config_digest = config_digest(cfg);
  Prepared p = prepare(cfg);
  outcome.dataset_note = p.data.note;
  outcome.n_full = p.data.full_table().n();
  outcome.n_train = static_cast<Eigen::Index>(p.split.train.size());
  outcome.n_test = static_cast<Eigen::Index>(p.split.test.size());
  outcome.m = p.data.full_table().m();
  outcome.class_count = p.data.full_table().class_count;
  outcome.label_names = p.data.full_table().label_names;

  // Base models, one per repeat (seeds derived as seed + repeat index).
  std::vector<Vec> base_thetas(static_cast<std::size_t>(cfg.repeats));
  std::vector<ModelSpec> specs(static_cast<std::size_t>(cfg.repeats));
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    ModelSpec s = p.base_spec;
    s.seed = cfg.model.seed + static_cast<std::uint64_t>(rep);
    specs[static_cast<std::size_t>(rep)] = s;
    base_thetas[static_cast<std::size_t>(rep)] = train(s, p.train_view(), p.train_loss, cfg.train).theta;
  }

  // Grid cells in canonical order: ratio, then configured method order, then repeat.
  struct Cell {
    double ratio;
    UnlearnMethod method;
    int repeat;
  };
  std::vector<Cell> cells;
  for (double ratio : cfg.request.unlearn_ratios)
    for (UnlearnMethod m : cfg.methods)
      for (int rep = 0; rep < cfg.repeats; ++rep) cells.push_back(Cell{ratio, m, rep});
  outcome.records.resize(cells.size());

  auto run_cell = [&](std::size_t idx) {
    const Cell& cell = cells[idx];
    CellRecord& rec = outcome.records[idx];
    rec.method = to_string(cell.method);
    rec.ratio = cell.ratio;
    rec.repeat = cell.repeat;
    rec.seed = cfg.request.seed + static_cast<std::uint64_t>(cell.repeat);
    try {
      const ModelSpec& spec = specs[static_cast<std::size_t>(cell.repeat)];
      const Vec& theta = base_thetas[static_cast<std::size_t>(cell.repeat)];
      UnlearnRequest request = make_request(p, cfg.request, cell.ratio, rec.seed);
      AppliedRequest applied = apply_request(p, request);
      {
        Digest d;
        const std::string text = serialize_request(request);
        d.bytes(text.data(), text.size());
        rec.request_digest = to_hex(d.value());
      }
      UnlearnConfig ucfg = cfg.unlearn;
      ucfg.method = cell.method;
      ucfg.retrain_options = cfg.train;
      UnlearnResult res = unlearn(spec, theta, p.train_view(), applied, ucfg, p.train_loss);

      rec.eval = evaluate(p, spec, res.theta_star, applied);
      rec.eval.method = rec.method;
      rec.eval.unlearn_ratio = cell.ratio;
      rec.eval.feature_ratio = cfg.request.feature_ratio;
      rec.eval.seed = rec.seed;
      rec.eval.runtime_seconds = res.runtime_seconds;
      rec.diagnostics = std::move(res.diagnostics);

      const DatasetTable& full_train = p.data.is_graph() ? p.data.graph->table : p.train_table;
      const ShiftReport shift = shift_report(spec, theta, res.theta_star, full_train,
                                             p.train_view(), applied, cfg.unlearn.independence);
      rec.eval.hsic_shift = shift.hsic_shift;
      rec.eval.mi_shift = shift.mi_shift;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  };

  const int threads = std::min<int>(cfg.threads, static_cast<int>(cells.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          run_cell(i);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (const auto& r : outcome.records)
    if (!r.ok()) outcome.any_failed = true;
  return outcome;
}

// ---------------------------------------------------------------------------
// Report persistence. report.json holds every deterministic field and is
// byte-identical across reruns of the same config; wall-clock runtimes live
// in report.csv and summary.csv.
// ---------------------------------------------------------------------------
namespace run_detail {

inline std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace run_detail

inline nlohmann::ordered_json report_json(const ExperimentOutcome& outcome,
                                          const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config_digest"] = outcome.config_digest;
  j["dataset"] = {{"kind", cfg.dataset.kind},
                  {"n", outcome.n_full},
                  {"m", outcome.m},
                  {"classes", outcome.class_count},
                  {"note", outcome.dataset_note},
                  {"label_names", outcome.label_names}};
  j["split"] = {{"train", outcome.n_train}, {"test", outcome.n_test}};
  j["evaluation_split"] = "held_out_test";
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const CellRecord& r : outcome.records) {
    nlohmann::ordered_json rec;
    rec["method"] = r.method;
    rec["ratio"] = r.ratio;
    rec["repeat"] = r.repeat;
    rec["seed"] = r.seed;
    if (r.ok()) {
      rec["macro_f1"] = r.eval.macro_f1;
      rec["micro_f1"] = r.eval.micro_f1;
      rec["brier"] = r.eval.brier;
      rec["hsic_shift"] = r.eval.hsic_shift;
      rec["mi_shift"] = r.eval.mi_shift;
      rec["influence_grad_norm"] = r.diagnostics.influence_grad_norm;
      if (r.diagnostics.lissa_residual) rec["lissa_residual"] = *r.diagnostics.lissa_residual;
      if (r.diagnostics.condition_estimate)
        rec["condition_estimate"] = *r.diagnostics.condition_estimate;
      rec["loss_before"] = {{"origin", r.diagnostics.loss_before.origin},
                            {"lf", r.diagnostics.loss_before.lf},
                            {"total", r.diagnostics.loss_before.total}};
      rec["loss_after"] = {{"origin", r.diagnostics.loss_after.origin},
                           {"lf", r.diagnostics.loss_after.lf},
                           {"total", r.diagnostics.loss_after.total}};
      rec["request_digest"] = r.request_digest;
      rec["warnings"] = r.diagnostics.warnings;
    } else {
      rec["error"] = r.error;
    }
    records.push_back(std::move(rec));
  }
  j["records"] = std::move(records);
  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const Aggregate& a : aggregate(outcome)) {
    aggs.push_back({{"method", a.method},
                    {"ratio", a.ratio},
                    {"f1_mean", a.f1_mean},
                    {"f1_std", a.f1_std},
                    {"micro_f1_mean", a.micro_mean},
                    {"brier_mean", a.brier_mean},
                    {"hsic_shift_mean", a.hsic_shift_mean},
                    {"mi_shift_mean", a.mi_shift_mean},
                    {"repeats", a.count}});
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

inline void write_reports(const std::string& output_dir, const ExperimentOutcome& outcome,
                          const ExperimentConfig& cfg) {
  std::filesystem::create_directories(output_dir);
  {
    std::ofstream out(output_dir + "/report.json", std::ios::binary);
    if (!out) throw Error("cannot write " + output_dir + "/report.json");
    out << report_json(outcome, cfg).dump(2) << "\n";
  }
  {
    std::ofstream out(output_dir + "/report.csv", std::ios::binary);
    if (!out) throw Error("cannot write " + output_dir + "/report.csv");
    out << "method,ratio,repeat,macro_f1,micro_f1,brier,runtime_s,hsic_shift,mi_shift\n";
    for (const CellRecord& r : outcome.records) {
      if (!r.ok()) continue;
      out << r.method << "," << run_detail::fmt(r.ratio, "%g") << "," << r.repeat << ","
          << run_detail::fmt(r.eval.macro_f1) << "," << run_detail::fmt(r.eval.micro_f1) << ","
          << run_detail::fmt(r.eval.brier) << "," << run_detail::fmt(r.eval.runtime_seconds) << ","
          << run_detail::fmt(r.eval.hsic_shift) << "," << run_detail::fmt(r.eval.mi_shift) << "\n";
    }
  }
  {
    std::ofstream out(output_dir + "/summary.csv", std::ios::binary);
    if (!out) throw Error("cannot write " + output_dir + "/summary.csv");
    out << "method,ratio,f1_mean,f1_std,rt_seconds\n";
    for (const Aggregate& a : aggregate(outcome))
      out << a.method << "," << run_detail::fmt(a.ratio, "%g") << "," << run_detail::fmt(a.f1_mean)
          << "," << run_detail::fmt(a.f1_std) << "," << run_detail::fmt(a.rt_mean) << "\n";
  }
}

}  // namespace dui
