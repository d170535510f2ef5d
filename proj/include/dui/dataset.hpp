#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dui/common.hpp"

namespace dui {

/// Uniform numeric dataset: one row per data point, integer class labels.
struct DatasetTable {
  Mat features;  // n x m
  IVec labels;   // n, each in [0, class_count)
  int class_count = 0;
  std::vector<std::string> feature_names;  // optional, length m when present
  std::vector<std::string> label_names;    // optional, id -> original label string

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index m() const { return features.cols(); }
};

inline void validate(const DatasetTable& t) {
  if (t.n() < 1 || t.m() < 1) throw PreconditionError("dataset: need n >= 1 and m >= 1");
  if (t.labels.size() != t.n()) throw PreconditionError("dataset: label count != row count");
  if (t.class_count < 2) throw PreconditionError("dataset: class_count must be >= 2");
  if (!all_finite(t.features)) throw PreconditionError("dataset: non-finite feature value");
  for (Eigen::Index i = 0; i < t.n(); ++i)
    if (t.labels(i) < 0 || t.labels(i) >= t.class_count)
      throw PreconditionError("dataset: label out of range at row " + std::to_string(i));
  if (!t.feature_names.empty() && static_cast<Eigen::Index>(t.feature_names.size()) != t.m())
    throw PreconditionError("dataset: feature_names length != m");
}

inline std::uint64_t dataset_digest(const DatasetTable& t) {
  Digest d;
  d.i64(t.n()).i64(t.m()).i64(t.class_count).mat(t.features).ivec(t.labels);
  return d.value();
}

/// Node-classification dataset. The adjacency is the raw 0/1 citation graph;
/// normalized_adjacency caches D^{-1/2} (A + I) D^{-1/2} where D is the
/// degree matrix of A + I.
struct GraphDataset {
  DatasetTable table;
  SpMat adjacency;             // n x n, symmetric, zero diagonal
  SpMat normalized_adjacency;  // n x n, symmetric

  Eigen::Index n() const { return table.n(); }
};

inline SpMat normalize_adjacency(const SpMat& adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (adjacency.cols() != n) throw PreconditionError("adjacency must be square");
  Vec degree = Vec::Ones(n);  // self-loop contributes 1 to every node
  for (int k = 0; k < adjacency.outerSize(); ++k)
    for (SpMat::InnerIterator it(adjacency, k); it; ++it) degree(it.row()) += it.value();
  Vec inv_sqrt = degree.array().rsqrt();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(adjacency.nonZeros() + n));
  for (Eigen::Index i = 0; i < n; ++i)
    trips.emplace_back(i, i, inv_sqrt(i) * inv_sqrt(i));
  for (int k = 0; k < adjacency.outerSize(); ++k)
    for (SpMat::InnerIterator it(adjacency, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value() * inv_sqrt(it.row()) * inv_sqrt(it.col()));
  SpMat out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

inline void validate(const GraphDataset& g) {
  validate(g.table);
  if (g.adjacency.rows() != g.n() || g.adjacency.cols() != g.n())
    throw PreconditionError("graph: adjacency shape != n x n");
  SpMat diff = SpMat(g.adjacency.transpose()) - g.adjacency;
  if (diff.coeffs().size() > 0 && diff.coeffs().abs().maxCoeff() > 0)
    throw PreconditionError("graph: adjacency not symmetric");
  for (Eigen::Index i = 0; i < g.n(); ++i)
    if (g.adjacency.coeff(i, i) != 0.0) throw PreconditionError("graph: adjacency diagonal must be zero");
}

inline GraphDataset make_graph(DatasetTable table, const SpMat& adjacency) {
  GraphDataset g;
  g.table = std::move(table);
  g.adjacency = adjacency;
  g.normalized_adjacency = normalize_adjacency(adjacency);
  validate(g);
  return g;
}

/// Read-only view bundling the pieces a model needs; adjacency is null for
/// non-graph data.
struct DataView {
  const Mat* features = nullptr;
  const IVec* labels = nullptr;
  int class_count = 0;
  const SpMat* adjacency = nullptr;

  Eigen::Index n() const { return features->rows(); }
  Eigen::Index m() const { return features->cols(); }
};

inline DataView view(const DatasetTable& t) { return DataView{&t.features, &t.labels, t.class_count, nullptr}; }
inline DataView view(const GraphDataset& g) {
  return DataView{&g.table.features, &g.table.labels, g.table.class_count, &g.normalized_adjacency};
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------
struct SplitSpec {
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<int> train;  // sorted
  std::vector<int> test;   // sorted
};

/// Deterministic shuffle-then-cut. train gets floor(n * fraction) points.
inline SplitIndices make_split(Eigen::Index n, const SplitSpec& spec) {
  if (n < 2) throw PreconditionError("split: need n >= 2");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw PreconditionError("split: train_fraction must be in (0,1)");
  const auto k = static_cast<Eigen::Index>(std::floor(spec.train_fraction * static_cast<double>(n)));
  if (k < 1 || k >= n) throw PreconditionError("split: fraction yields an empty side");
  std::vector<int> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);
  Rng rng(spec.seed);
  rng.shuffle(order);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + k);
  out.test.assign(order.begin() + k, order.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline DatasetTable subset_rows(const DatasetTable& t, const std::vector<int>& rows) {
  if (rows.empty()) throw PreconditionError("subset_rows: empty index set");
  DatasetTable out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), t.m());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = t.features.row(rows[i]);
    out.labels(static_cast<Eigen::Index>(i)) = t.labels(rows[i]);
  }
  out.class_count = t.class_count;
  out.feature_names = t.feature_names;
  out.label_names = t.label_names;
  return out;
}

template <typename Data>
struct SplitResult {
  Data train;  // materialized rows for tables, the untouched graph for graphs
  SplitIndices indices;
};

inline SplitResult<DatasetTable> split(const DatasetTable& t, const SplitSpec& spec) {
  SplitIndices idx = make_split(t.n(), spec);
  return SplitResult<DatasetTable>{subset_rows(t, idx.train), std::move(idx)};
}

/// Transductive split: every node stays in the propagation structure; the
/// index sets partition only the supervision/evaluation rows.
inline SplitResult<GraphDataset> split(const GraphDataset& g, const SplitSpec& spec) {
  SplitIndices idx = make_split(g.n(), spec);
  return SplitResult<GraphDataset>{g, std::move(idx)};
}

// ---------------------------------------------------------------------------
// Synthetic data: seeded Gaussian class blobs, used by fixtures and the
// `synthetic` dataset kind in experiment configs.
// ---------------------------------------------------------------------------
struct SyntheticSpec {
  Eigen::Index n = 500;
  Eigen::Index m = 10;
  int class_count = 2;
  double class_sep = 2.0;    // distance scale between class centers
  double noise = 1.0;        // within-class standard deviation
  double clip_min = 0.0;     // applied when clip = true
  double clip_max = 1.0;
  bool clip = false;
  std::uint64_t seed = 0;
};

inline DatasetTable make_synthetic(const SyntheticSpec& s) {
  if (s.n < 1 || s.m < 1 || s.class_count < 2) throw PreconditionError("synthetic: bad dimensions");
  Rng rng(s.seed);
  Mat centers(s.class_count, s.m);
  for (int c = 0; c < s.class_count; ++c)
    for (Eigen::Index j = 0; j < s.m; ++j) centers(c, j) = s.class_sep * rng.next_normal();
  DatasetTable t;
  t.features.resize(s.n, s.m);
  t.labels.resize(s.n);
  t.class_count = s.class_count;
  for (Eigen::Index i = 0; i < s.n; ++i) {
    const int c = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(s.class_count)));
    t.labels(i) = c;
    for (Eigen::Index j = 0; j < s.m; ++j) {
      double v = centers(c, j) + s.noise * rng.next_normal();
      if (s.clip) v = std::min(s.clip_max, std::max(s.clip_min, v));
      t.features(i, j) = v;
    }
  }
  validate(t);
  return t;
}

}  // namespace dui
