#pragma once

#include <optional>

#include "dui/common.hpp"

namespace dui {

enum class KernelKind { rbf, linear, delta };

struct KernelConfig {
  KernelKind kind = KernelKind::rbf;
  /// rbf bandwidth; disengaged means the median heuristic.
  std::optional<double> bandwidth = std::nullopt;
};

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::rbf: return "rbf";
    case KernelKind::linear: return "linear";
    case KernelKind::delta: return "delta";
  }
  return "?";
}

/// Median of pairwise Euclidean distances (lower median for even counts).
inline double median_pairwise_distance(const Mat& rows) {
  const Eigen::Index n = rows.rows();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((rows.row(i) - rows.row(j)).norm());
  const std::size_t mid = (d.size() - 1) / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  return d[mid];
}

inline Mat kernel_matrix(const Mat& rows, const KernelConfig& config) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw PreconditionError("kernel_matrix: need n >= 2");
  if (!all_finite(rows)) throw PreconditionError("kernel_matrix: non-finite input");
  switch (config.kind) {
    case KernelKind::linear:
      return rows * rows.transpose();
    case KernelKind::delta: {
      for (Eigen::Index i = 0; i < rows.size(); ++i)
        if (rows.data()[i] != std::floor(rows.data()[i]))
          throw PreconditionError("kernel_matrix: delta kernel requires integer-valued inputs");
      Mat k(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const double v = (rows.row(i).array() == rows.row(j).array()).all() ? 1.0 : 0.0;
          k(i, j) = v;
          k(j, i) = v;
        }
      }
      return k;
    }
    case KernelKind::rbf: {
      double sigma;
      if (config.bandwidth) {
        sigma = *config.bandwidth;
        if (!(sigma > 0.0)) throw PreconditionError("kernel_matrix: bandwidth must be positive");
      } else {
        sigma = median_pairwise_distance(rows);
        if (!(sigma > 0.0)) throw PreconditionError("kernel_matrix: degenerate kernel input (all rows identical)");
      }
      const double inv = -0.5 / (sigma * sigma);
      Mat k(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const double v = std::exp(inv * (rows.row(i) - rows.row(j)).squaredNorm());
          k(i, j) = v;
          k(j, i) = v;
        }
      }
      return k;
    }
  }
  throw PreconditionError("kernel_matrix: unknown kernel kind");
}

/// Doubly-centered kernel: HKH with H = I - (1/n) 1 1^T. Row and column sums
/// are zero up to roundoff.
struct CenteredKernel {
  Mat matrix;
  Eigen::Index n = 0;
};

inline CenteredKernel center(const Mat& k) {
  const Eigen::Index n = k.rows();
  if (k.cols() != n) throw PreconditionError("center: kernel must be square");
  const Vec row_means = k.rowwise().mean();
  const Vec col_means = k.colwise().mean();
  const double grand = k.mean();
  CenteredKernel out;
  out.n = n;
  out.matrix = k;
  out.matrix.colwise() -= row_means;
  out.matrix.rowwise() -= col_means.transpose();
  out.matrix.array() += grand;
  return out;
}

}  // namespace dui
