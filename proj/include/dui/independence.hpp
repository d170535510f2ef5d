#pragma once

#include <unordered_map>

#include "dui/dataset.hpp"
#include "dui/kernel.hpp"

namespace dui {

enum class HsicNormalization { raw_trace, n_minus_1_squared, frobenius };

inline const char* to_string(HsicNormalization n) {
  switch (n) {
    case HsicNormalization::raw_trace: return "raw_trace";
    case HsicNormalization::n_minus_1_squared: return "n_minus_1_squared";
    case HsicNormalization::frobenius: return "frobenius";
  }
  return "?";
}

struct IndependenceConfig {
  KernelConfig feature_kernel{KernelKind::rbf, std::nullopt};
  KernelConfig label_kernel{KernelKind::delta, std::nullopt};
  KernelConfig prediction_kernel{KernelKind::linear, std::nullopt};
  double alpha = 1.0;
  HsicNormalization normalization = HsicNormalization::n_minus_1_squared;
  /// Kernel matrices are O(n^2); larger sets are subsampled to this many rows.
  int batch_limit = 512;
  std::uint64_t batch_seed = 17;
  /// Feature column used by the plug-in MI diagnostics.
  int mi_feature = 0;
};

// ---------------------------------------------------------------------------
// nHSIC: trace of the product of two doubly-centered kernel matrices,
// optionally normalized. For symmetric matrices tr(AB) = sum_ij A_ij B_ij.
// ---------------------------------------------------------------------------
inline double nhsic(const CenteredKernel& a, const CenteredKernel& b,
                    HsicNormalization normalization) {
  if (a.n != b.n) throw PreconditionError("nhsic: sample-count mismatch");
  const double trace = a.matrix.cwiseProduct(b.matrix).sum();
  switch (normalization) {
    case HsicNormalization::raw_trace:
      return trace;
    case HsicNormalization::n_minus_1_squared: {
      const double d = static_cast<double>(a.n - 1);
      return trace / (d * d);
    }
    case HsicNormalization::frobenius: {
      const double na = a.matrix.norm();
      const double nb = b.matrix.norm();
      if (na == 0.0 || nb == 0.0) return 0.0;
      return trace / (na * nb);
    }
  }
  throw PreconditionError("nhsic: unknown normalization");
}

// ---------------------------------------------------------------------------
// Plug-in mutual information of two discrete variables under the empirical
// joint; natural log, empty cells contribute zero.
// ---------------------------------------------------------------------------
inline double plugin_mi(const IVec& x, const IVec& y) {
  if (x.size() != y.size()) throw PreconditionError("plugin_mi: length mismatch");
  if (x.size() < 1) throw PreconditionError("plugin_mi: empty input");
  const double n = static_cast<double>(x.size());
  std::unordered_map<int, double> px, py;
  std::unordered_map<std::int64_t, double> pxy;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    px[x(i)] += 1.0;
    py[y(i)] += 1.0;
    pxy[(static_cast<std::int64_t>(x(i)) << 32) ^ static_cast<std::uint32_t>(y(i))] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [key, cnt] : pxy) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(static_cast<std::uint32_t>(key & 0xFFFFFFFF));
    const double pj = cnt / n;
    mi += pj * std::log(pj * n * n / (px[a] * py[b]));
  }
  return mi;
}

/// Empirical Shannon entropy (natural log); the MI self-consistency bound.
inline double empirical_entropy(const IVec& x) {
  std::unordered_map<int, double> counts;
  for (Eigen::Index i = 0; i < x.size(); ++i) counts[x(i)] += 1.0;
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (const auto& [v, c] : counts) h -= (c / n) * std::log(c / n);
  return h;
}

/// Equal-width binning into ceil(sqrt(n)) bins, for MI over a continuous
/// feature column.
inline IVec discretize_column(const Vec& column) {
  const Eigen::Index n = column.size();
  const int bins = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  IVec out(n);
  if (hi <= lo) {
    out.setZero();
    return out;
  }
  const double width = (hi - lo) / bins;
  for (Eigen::Index i = 0; i < n; ++i)
    out(i) = std::min(bins - 1, static_cast<int>((column(i) - lo) / width));
  return out;
}

/// Distance between two dependence values.
inline double dist(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw PreconditionError("dist: non-finite input");
  return std::abs(a - b);
}

// ---------------------------------------------------------------------------
// The distributional loss L_F = nHSIC(X, Y) - alpha * nHSIC(X, Yhat), both
// terms under the same normalization. The first term does not depend on the
// model and can be cached per dataset.
// ---------------------------------------------------------------------------
inline void require_differentiable_prediction_kernel(const IndependenceConfig& config) {
  if (config.prediction_kernel.kind == KernelKind::delta)
    throw PreconditionError("non-differentiable prediction kernel");
}

inline CenteredKernel label_kernel(const IVec& labels, const IndependenceConfig& config) {
  Mat label_rows = labels.cast<double>();
  return center(kernel_matrix(label_rows, config.label_kernel));
}

inline void require_row_stochastic(const Mat& predictions, double tol = 1e-6) {
  for (Eigen::Index i = 0; i < predictions.rows(); ++i)
    if (std::abs(predictions.row(i).sum() - 1.0) > tol)
      throw PreconditionError("predictions must be row-stochastic");
}

inline double lf_value(const CenteredKernel& features_kernel, const IVec& labels,
                       const Mat& predictions, const IndependenceConfig& config) {
  require_differentiable_prediction_kernel(config);
  require_row_stochastic(predictions);
  if (labels.size() != features_kernel.n || predictions.rows() != features_kernel.n)
    throw PreconditionError("lf_value: sample-count mismatch");
  const double hsic_xy = nhsic(features_kernel, label_kernel(labels, config), config.normalization);
  const double hsic_xp =
      nhsic(features_kernel, center(kernel_matrix(predictions, config.prediction_kernel)),
            config.normalization);
  return hsic_xy - config.alpha * hsic_xp;
}

// ---------------------------------------------------------------------------
// Analytic gradient of L_F with respect to the prediction matrix.
//
// With a linear prediction kernel, tr(Kx~ . H P P^T H) = tr(P^T Kx~ P)
// because Kx~ is already centered, so the raw-trace gradient of the second
// term is 2 Kx~ P. The frobenius normalization adds the quotient-rule term
// through ||K~_P||_F.
// ---------------------------------------------------------------------------
inline Mat lf_grad_predictions(const CenteredKernel& features_kernel, const Mat& predictions,
                               const IndependenceConfig& config) {
  require_differentiable_prediction_kernel(config);
  if (config.prediction_kernel.kind != KernelKind::linear)
    throw PreconditionError("lf_grad_predictions: only the linear prediction kernel is supported");
  if (predictions.rows() != features_kernel.n)
    throw PreconditionError("lf_grad_predictions: sample-count mismatch");
  const Eigen::Index n = features_kernel.n;
  if (config.alpha == 0.0) return Mat::Zero(n, predictions.cols());

  const Mat k_grad = 2.0 * features_kernel.matrix * predictions;  // d tr / d P
  switch (config.normalization) {
    case HsicNormalization::raw_trace:
      return -config.alpha * k_grad;
    case HsicNormalization::n_minus_1_squared: {
      const double d = static_cast<double>(n - 1);
      return (-config.alpha / (d * d)) * k_grad;
    }
    case HsicNormalization::frobenius: {
      // centered prediction kernel: Kp~ = H P P^T H
      Mat centered_p = predictions.rowwise() - predictions.colwise().mean();  // H P
      const Mat gram = centered_p.transpose() * centered_p;                   // P^T H P
      const double b2 = gram.cwiseProduct(gram).sum();                        // ||Kp~||_F^2
      const double b = std::sqrt(b2);
      const double na = features_kernel.matrix.norm();
      if (b == 0.0 || na == 0.0) return Mat::Zero(n, predictions.cols());
      const double trace = (features_kernel.matrix * centered_p).cwiseProduct(centered_p).sum();
      // d||Kp~||_F/dP = (2/b) H P (P^T H P)
      const Mat db = (2.0 / b) * centered_p * gram;
      return -config.alpha * (k_grad * b - trace * db) / (na * b2);
    }
  }
  throw PreconditionError("lf_grad_predictions: unknown normalization");
}

// ---------------------------------------------------------------------------
// Distribution-shift diagnostic:
//   delta_p = DIST(dep(D, Yhat), dep(D, Y)) - DIST(dep(D', Yhat'), dep(D', Y'))
// where dep is nHSIC (or plug-in MI) and D' is the retained dataset.
// ---------------------------------------------------------------------------
enum class DependenceMeasure { nhsic, plugin_mi };

namespace detail {

inline std::vector<int> independence_batch(Eigen::Index n, const IndependenceConfig& config) {
  if (n <= config.batch_limit) {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = static_cast<int>(i);
    return all;
  }
  Rng rng(config.batch_seed);
  return rng.sample_without_replacement(static_cast<int>(n), config.batch_limit);
}

inline Mat take_rows(const Mat& m, const std::vector<int>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

inline IVec take(const IVec& v, const std::vector<int>& rows) {
  IVec out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

inline IVec argmax_rows(const Mat& probabilities) {
  IVec out(probabilities.rows());
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    Eigen::Index best;
    probabilities.row(i).maxCoeff(&best);
    out(i) = static_cast<int>(best);
  }
  return out;
}

/// dep(X, labels) and dep(X, predictions) on one dataset, under one measure.
inline std::pair<double, double> dependence_pair(const Mat& features, const IVec& labels,
                                                 const Mat& predictions,
                                                 const IndependenceConfig& config,
                                                 DependenceMeasure measure) {
  const std::vector<int> batch = independence_batch(features.rows(), config);
  const Mat x = take_rows(features, batch);
  const IVec y = take(labels, batch);
  const Mat p = take_rows(predictions, batch);
  if (measure == DependenceMeasure::nhsic) {
    const CenteredKernel kx = center(kernel_matrix(x, config.feature_kernel));
    const double dep_y = nhsic(kx, label_kernel(y, config), config.normalization);
    const double dep_p =
        nhsic(kx, center(kernel_matrix(p, config.prediction_kernel)), config.normalization);
    return {dep_y, dep_p};
  }
  const int j = config.mi_feature;
  if (j < 0 || j >= x.cols()) throw PreconditionError("delta_p: mi_feature out of range");
  const IVec xb = discretize_column(x.col(j));
  return {plugin_mi(xb, y), plugin_mi(xb, argmax_rows(p))};
}

}  // namespace detail

inline double delta_p(const Mat& predictions_full, const Mat& predictions_retained,
                      const DatasetTable& data_full, const DatasetTable& data_retained,
                      const IndependenceConfig& config,
                      DependenceMeasure measure = DependenceMeasure::nhsic) {
  if (data_retained.n() < 1) throw PreconditionError("delta_p: empty retained set");
  if (predictions_full.rows() != data_full.n() || predictions_retained.rows() != data_retained.n())
    throw PreconditionError("delta_p: predictions misaligned with datasets");
  const auto [full_y, full_p] =
      detail::dependence_pair(data_full.features, data_full.labels, predictions_full, config, measure);
  const auto [ret_y, ret_p] = detail::dependence_pair(data_retained.features, data_retained.labels,
                                                      predictions_retained, config, measure);
  return dist(full_p, full_y) - dist(ret_p, ret_y);
}

}  // namespace dui
