#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dui/dataset.hpp"

namespace dui {

enum class RequestMode { points, feature_values };
enum class Replacement { zero, feature_mean };
enum class Strategy { random, top_k };

inline const char* to_string(RequestMode m) {
  return m == RequestMode::points ? "points" : "feature_values";
}
inline const char* to_string(Replacement r) { return r == Replacement::zero ? "zero" : "feature_mean"; }
inline const char* to_string(Strategy s) { return s == Strategy::random ? "random" : "top_k"; }

struct Cell {
  int row = 0;
  int feature = 0;
  friend bool operator<(const Cell& a, const Cell& b) {
    return a.row != b.row ? a.row < b.row : a.feature < b.feature;
  }
  friend bool operator==(const Cell& a, const Cell& b) {
    return a.row == b.row && a.feature == b.feature;
  }
};

struct UnlearnRequest {
  RequestMode mode = RequestMode::points;
  std::vector<int> point_indices;  // sorted, points mode
  std::vector<Cell> cells;         // sorted, feature_values mode
  Replacement replacement = Replacement::zero;
  double unlearn_ratio = 0.0;
  double feature_ratio = 1.0;
  Strategy strategy = Strategy::random;
  std::uint64_t seed = 0;
  std::uint64_t data_digest = 0;
  bool empty_selection = false;  // set when the ratios produced zero picks
};

inline void validate_request(const DatasetTable& data, const UnlearnRequest& r) {
  for (int i : r.point_indices)
    if (i < 0 || i >= data.n()) throw PreconditionError("request: point index out of bounds");
  for (const Cell& c : r.cells)
    if (c.row < 0 || c.row >= data.n() || c.feature < 0 || c.feature >= data.m())
      throw PreconditionError("request: cell out of bounds");
  for (std::size_t i = 1; i < r.point_indices.size(); ++i)
    if (r.point_indices[i] <= r.point_indices[i - 1])
      throw PreconditionError("request: point indices must be strictly increasing");
  for (std::size_t i = 1; i < r.cells.size(); ++i)
    if (!(r.cells[i - 1] < r.cells[i]))
      throw PreconditionError("request: cells must be strictly increasing");
}

namespace detail {

inline std::vector<int> all_rows(Eigen::Index n) {
  std::vector<int> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Random requests. `candidates` restricts selection (the transductive graph
// flow passes its training rows); empty means every row is eligible. Ratios
// are taken relative to the candidate count.
// ---------------------------------------------------------------------------
inline UnlearnRequest random_request(const DatasetTable& data, double unlearn_ratio,
                                     RequestMode mode, std::uint64_t seed,
                                     double feature_ratio = 1.0,
                                     std::vector<int> candidates = {}) {
  if (unlearn_ratio < 0.0 || unlearn_ratio >= 1.0)
    throw PreconditionError("random_request: unlearn_ratio must be in [0,1)");
  if (feature_ratio <= 0.0 || feature_ratio > 1.0)
    throw PreconditionError("random_request: feature_ratio must be in (0,1]");
  if (candidates.empty()) candidates = detail::all_rows(data.n());
  UnlearnRequest r;
  r.mode = mode;
  r.strategy = Strategy::random;
  r.unlearn_ratio = unlearn_ratio;
  r.feature_ratio = feature_ratio;
  r.seed = seed;
  r.data_digest = dataset_digest(data);
  Rng rng(seed);
  const int n_cand = static_cast<int>(candidates.size());
  const int k = static_cast<int>(std::floor(unlearn_ratio * n_cand));
  if (mode == RequestMode::points) {
    for (int p : rng.sample_without_replacement(n_cand, k))
      r.point_indices.push_back(candidates[static_cast<std::size_t>(p)]);
    std::sort(r.point_indices.begin(), r.point_indices.end());
    r.empty_selection = r.point_indices.empty();
  } else {
    const int f = static_cast<int>(std::floor(feature_ratio * static_cast<double>(data.m())));
    const std::vector<int> features = rng.sample_without_replacement(static_cast<int>(data.m()), f);
    for (int j : features) {
      for (int p : rng.sample_without_replacement(n_cand, k))
        r.cells.push_back(Cell{candidates[static_cast<std::size_t>(p)], j});
    }
    std::sort(r.cells.begin(), r.cells.end());
    r.empty_selection = r.cells.empty();
  }
  validate_request(data, r);
  return r;
}

// ---------------------------------------------------------------------------
// Top-k requests: deterministic, no seed. Feature groups are the
// floor(m * feature_ratio) columns with the largest sums over the candidate
// rows (ties to the lower column index). In feature_values mode the
// k = floor(n * unlearn_ratio) largest cells within each selected column are
// marked (ties to the lower row index); in points mode rows are ranked by
// their total value across the selected columns.
// ---------------------------------------------------------------------------
inline UnlearnRequest topk_request(const DatasetTable& data, double unlearn_ratio,
                                   double feature_ratio,
                                   RequestMode mode = RequestMode::feature_values,
                                   std::vector<int> candidates = {}) {
  if (unlearn_ratio < 0.0 || unlearn_ratio >= 1.0)
    throw PreconditionError("topk_request: unlearn_ratio must be in [0,1)");
  if (feature_ratio <= 0.0 || feature_ratio > 1.0)
    throw PreconditionError("topk_request: feature_ratio must be in (0,1]");
  if (candidates.empty()) candidates = detail::all_rows(data.n());
  UnlearnRequest r;
  r.mode = mode;
  r.strategy = Strategy::top_k;
  r.unlearn_ratio = unlearn_ratio;
  r.feature_ratio = feature_ratio;
  r.data_digest = dataset_digest(data);

  const int n_cand = static_cast<int>(candidates.size());
  const int k = static_cast<int>(std::floor(unlearn_ratio * n_cand));
  const int f = static_cast<int>(std::floor(feature_ratio * static_cast<double>(data.m())));

  std::vector<int> columns(static_cast<std::size_t>(data.m()));
  for (Eigen::Index j = 0; j < data.m(); ++j) columns[static_cast<std::size_t>(j)] = static_cast<int>(j);
  std::vector<double> col_sums(columns.size(), 0.0);
  for (int i : candidates)
    for (Eigen::Index j = 0; j < data.m(); ++j) col_sums[static_cast<std::size_t>(j)] += data.features(i, j);
  std::sort(columns.begin(), columns.end(), [&](int a, int b) {
    const double sa = col_sums[static_cast<std::size_t>(a)], sb = col_sums[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  std::vector<int> selected(columns.begin(), columns.begin() + f);
  std::sort(selected.begin(), selected.end());

  if (mode == RequestMode::feature_values) {
    for (int j : selected) {
      std::vector<int> rows = candidates;
      std::stable_sort(rows.begin(), rows.end(), [&](int a, int b) {
        const double va = data.features(a, j), vb = data.features(b, j);
        return va != vb ? va > vb : a < b;
      });
      for (int t = 0; t < k; ++t) r.cells.push_back(Cell{rows[static_cast<std::size_t>(t)], j});
    }
    std::sort(r.cells.begin(), r.cells.end());
    r.empty_selection = r.cells.empty();
  } else {
    std::vector<int> rows = candidates;
    std::vector<double> scores(static_cast<std::size_t>(data.n()), 0.0);
    for (int i : candidates) {
      double s = 0.0;
      for (int j : selected) s += data.features(i, j);
      scores[static_cast<std::size_t>(i)] = s;
    }
    std::stable_sort(rows.begin(), rows.end(), [&](int a, int b) {
      const double sa = scores[static_cast<std::size_t>(a)], sb = scores[static_cast<std::size_t>(b)];
      return sa != sb ? sa > sb : a < b;
    });
    r.point_indices.assign(rows.begin(), rows.begin() + k);
    std::sort(r.point_indices.begin(), r.point_indices.end());
    r.empty_selection = r.point_indices.empty();
  }
  validate_request(data, r);
  return r;
}

// ---------------------------------------------------------------------------
// Applying a request. Points mode drops rows (and incident edges, for
// graphs); feature_values mode overwrites the listed cells and keeps both the
// original and perturbed copies of every touched row for the gradient
// differencing done by the unlearning engine.
// ---------------------------------------------------------------------------
struct AppliedRequest {
  UnlearnRequest request;
  DatasetTable retained;                    // tabular result; for graphs see retained_graph
  std::optional<GraphDataset> retained_graph;
  std::vector<int> delta_rows;              // touched rows in original indexing, sorted
  Mat original_rows;                        // |delta_rows| x m, the rows before perturbation
  IVec original_labels;
  Mat perturbed_rows;                       // feature_values mode: rows after perturbation
  std::vector<int> retained_row_of_original;  // -1 where the row was removed

  const DatasetTable& retained_table() const {
    return retained_graph ? retained_graph->table : retained;
  }
  DataView view_retained() const {
    return retained_graph ? view(*retained_graph) : view(retained);
  }
  bool empty() const { return delta_rows.empty(); }
};

namespace detail {

inline void snapshot_delta(const DatasetTable& data, AppliedRequest& out) {
  const auto d = static_cast<Eigen::Index>(out.delta_rows.size());
  out.original_rows.resize(d, data.m());
  out.original_labels.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.original_rows.row(i) = data.features.row(out.delta_rows[static_cast<std::size_t>(i)]);
    out.original_labels(i) = data.labels(out.delta_rows[static_cast<std::size_t>(i)]);
  }
}

inline DatasetTable perturb_cells(const DatasetTable& data, const UnlearnRequest& r) {
  DatasetTable out = data;
  for (const Cell& c : r.cells) {
    const double v = r.replacement == Replacement::zero ? 0.0 : data.features.col(c.feature).mean();
    out.features(c.row, c.feature) = v;
  }
  return out;
}

inline std::vector<int> delta_rows_of(const UnlearnRequest& r) {
  if (r.mode == RequestMode::points) return r.point_indices;
  std::vector<int> rows;
  for (const Cell& c : r.cells) rows.push_back(c.row);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

}  // namespace detail

inline AppliedRequest apply(const DatasetTable& data, const UnlearnRequest& r) {
  validate_request(data, r);
  AppliedRequest out;
  out.request = r;
  out.delta_rows = detail::delta_rows_of(r);
  detail::snapshot_delta(data, out);
  if (r.mode == RequestMode::points) {
    if (static_cast<Eigen::Index>(r.point_indices.size()) >= data.n())
      throw PreconditionError("apply: empty retained set");
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(data.n()));
    out.retained_row_of_original.assign(static_cast<std::size_t>(data.n()), -1);
    std::size_t cursor = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (cursor < r.point_indices.size() && r.point_indices[cursor] == static_cast<int>(i)) {
        ++cursor;
        continue;
      }
      out.retained_row_of_original[static_cast<std::size_t>(i)] = static_cast<int>(keep.size());
      keep.push_back(static_cast<int>(i));
    }
    out.retained = subset_rows(data, keep);
  } else {
    out.retained = detail::perturb_cells(data, r);
    out.retained_row_of_original.resize(static_cast<std::size_t>(data.n()));
    for (Eigen::Index i = 0; i < data.n(); ++i)
      out.retained_row_of_original[static_cast<std::size_t>(i)] = static_cast<int>(i);
    const auto d = static_cast<Eigen::Index>(out.delta_rows.size());
    out.perturbed_rows.resize(d, data.m());
    for (Eigen::Index i = 0; i < d; ++i)
      out.perturbed_rows.row(i) = out.retained.features.row(out.delta_rows[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline AppliedRequest apply(const GraphDataset& g, const UnlearnRequest& r) {
  AppliedRequest out = apply(g.table, r);
  if (r.mode == RequestMode::feature_values) {
    GraphDataset pg;
    pg.table = out.retained;
    pg.adjacency = g.adjacency;
    pg.normalized_adjacency = g.normalized_adjacency;
    out.retained_graph = std::move(pg);
  } else {
    // Rebuild the adjacency over the kept nodes and renormalize.
    const auto& map = out.retained_row_of_original;
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < g.adjacency.outerSize(); ++k)
      for (SpMat::InnerIterator it(g.adjacency, k); it; ++it) {
        const int ni = map[static_cast<std::size_t>(it.row())];
        const int nj = map[static_cast<std::size_t>(it.col())];
        if (ni >= 0 && nj >= 0) trips.emplace_back(ni, nj, it.value());
      }
    SpMat adj(out.retained.n(), out.retained.n());
    adj.setFromTriplets(trips.begin(), trips.end());
    out.retained_graph = make_graph(out.retained, adj);
  }
  out.retained = out.retained_graph->table;
  return out;
}

// ---------------------------------------------------------------------------
// Canonical text serialization with a trailing content digest, for replay.
// ---------------------------------------------------------------------------
inline std::string serialize_request(const UnlearnRequest& r) {
  std::ostringstream out;
  out << "dui-request v1\n";
  out << "mode " << to_string(r.mode) << "\n";
  out << "strategy " << to_string(r.strategy) << "\n";
  out << "replacement " << to_string(r.replacement) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.unlearn_ratio);
  out << "unlearn_ratio " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", r.feature_ratio);
  out << "feature_ratio " << buf << "\n";
  out << "seed " << r.seed << "\n";
  out << "data_digest " << to_hex(r.data_digest) << "\n";
  out << "points";
  for (int i : r.point_indices) out << " " << i;
  out << "\n";
  out << "cells";
  for (const Cell& c : r.cells) out << " " << c.row << "," << c.feature;
  out << "\n";
  const std::string body = out.str();
  Digest d;
  d.bytes(body.data(), body.size());
  return body + "digest " + d.hex() + "\n";
}

inline UnlearnRequest parse_request(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  UnlearnRequest r;
  std::string body;
  std::string digest_line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.rfind("digest ", 0) == 0) {
      digest_line = line;
      break;
    }
    body += line + "\n";
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (!saw_header) {
      if (line != "dui-request v1") throw FormatError("request: bad header line");
      saw_header = true;
      continue;
    }
    if (key == "mode") {
      std::string v;
      ls >> v;
      if (v == "points") r.mode = RequestMode::points;
      else if (v == "feature_values") r.mode = RequestMode::feature_values;
      else throw FormatError("request: unknown mode '" + v + "'");
    } else if (key == "strategy") {
      std::string v;
      ls >> v;
      if (v == "random") r.strategy = Strategy::random;
      else if (v == "top_k") r.strategy = Strategy::top_k;
      else throw FormatError("request: unknown strategy '" + v + "'");
    } else if (key == "replacement") {
      std::string v;
      ls >> v;
      if (v == "zero") r.replacement = Replacement::zero;
      else if (v == "feature_mean") r.replacement = Replacement::feature_mean;
      else throw FormatError("request: unknown replacement '" + v + "'");
    } else if (key == "unlearn_ratio") {
      ls >> r.unlearn_ratio;
    } else if (key == "feature_ratio") {
      ls >> r.feature_ratio;
    } else if (key == "seed") {
      ls >> r.seed;
    } else if (key == "data_digest") {
      std::string v;
      ls >> v;
      r.data_digest = std::stoull(v, nullptr, 16);
    } else if (key == "points") {
      int i;
      while (ls >> i) r.point_indices.push_back(i);
    } else if (key == "cells") {
      std::string pair;
      while (ls >> pair) {
        const auto comma = pair.find(',');
        if (comma == std::string::npos) throw FormatError("request: malformed cell '" + pair + "'");
        r.cells.push_back(Cell{std::stoi(pair.substr(0, comma)), std::stoi(pair.substr(comma + 1))});
      }
    } else {
      throw FormatError("request: unknown key '" + key + "'");
    }
  }
  if (digest_line.empty()) throw FormatError("request: missing digest line");
  Digest d;
  d.bytes(body.data(), body.size());
  if (digest_line != "digest " + d.hex())
    throw FormatError("request: digest mismatch (file corrupted or edited)");
  r.empty_selection = r.point_indices.empty() && r.cells.empty();
  return r;
}

}  // namespace dui
