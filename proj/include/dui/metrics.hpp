#pragma once

#include <string>
#include <vector>

#include "dui/independence.hpp"
#include "dui/model.hpp"
#include "dui/request.hpp"

namespace dui {

/// Argmax class per row, ties to the lower class id.
inline IVec predict_classes(const Mat& probabilities) {
  IVec out(probabilities.rows());
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    int best = 0;
    double best_p = probabilities(i, 0);
    for (Eigen::Index c = 1; c < probabilities.cols(); ++c)
      if (probabilities(i, c) > best_p) {
        best_p = probabilities(i, c);
        best = static_cast<int>(c);
      }
    out(i) = best;
  }
  return out;
}

/// Unweighted mean of per-class F1 over all C classes; a class with
/// precision + recall = 0 contributes 0.
inline double macro_f1(const IVec& predicted, const IVec& truth, int class_count) {
  if (predicted.size() != truth.size() || predicted.size() < 1)
    throw PreconditionError("macro_f1: length mismatch or empty input");
  double total = 0.0;
  for (int c = 0; c < class_count; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < predicted.size(); ++i) {
      if (predicted(i) == c && truth(i) == c) ++tp;
      else if (predicted(i) == c) ++fp;
      else if (truth(i) == c) ++fn;
    }
    const double denom = 2 * tp + fp + fn;
    total += denom > 0 ? 2 * tp / denom : 0.0;
  }
  return total / class_count;
}

/// Micro F1 from pooled counts; equals accuracy for single-label problems.
inline double micro_f1(const IVec& predicted, const IVec& truth, int class_count) {
  if (predicted.size() != truth.size() || predicted.size() < 1)
    throw PreconditionError("micro_f1: length mismatch or empty input");
  double tp = 0, fp = 0, fn = 0;
  for (int c = 0; c < class_count; ++c) {
    for (Eigen::Index i = 0; i < predicted.size(); ++i) {
      if (predicted(i) == c && truth(i) == c) ++tp;
      else if (predicted(i) == c) ++fp;
      else if (truth(i) == c) ++fn;
    }
  }
  const double denom = 2 * tp + fp + fn;
  return denom > 0 ? 2 * tp / denom : 0.0;
}

/// Multiclass Brier score, mean over points of sum_c (p_c - [y=c])^2;
/// range [0, 2].
inline double brier(const Mat& probabilities, const IVec& truth) {
  if (probabilities.rows() != truth.size() || truth.size() < 1)
    throw PreconditionError("brier: length mismatch or empty input");
  require_row_stochastic(probabilities);
  double total = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    for (Eigen::Index c = 0; c < probabilities.cols(); ++c) {
      const double t = truth(i) == static_cast<int>(c) ? 1.0 : 0.0;
      const double d = probabilities(i, c) - t;
      total += d * d;
    }
  }
  return total / static_cast<double>(truth.size());
}

struct EmpiricalDistribution {
  std::string variable;
  Vec histogram;  // entries >= 0, sums to 1
};

inline EmpiricalDistribution label_histogram(const IVec& labels, int class_count,
                                             const std::string& name) {
  EmpiricalDistribution d;
  d.variable = name;
  d.histogram = Vec::Zero(class_count);
  for (Eigen::Index i = 0; i < labels.size(); ++i) d.histogram(labels(i)) += 1.0;
  d.histogram /= static_cast<double>(labels.size());
  return d;
}

/// Marginal of one feature column, binned like the MI diagnostics.
inline EmpiricalDistribution feature_histogram(const Mat& features, int column) {
  if (column < 0 || column >= features.cols())
    throw PreconditionError("feature_histogram: column out of range");
  const IVec bins = discretize_column(features.col(column));
  return label_histogram(bins, bins.maxCoeff() + 1, "feature(" + std::to_string(column) + ")");
}

/// Marginal of the argmax predicted class.
inline EmpiricalDistribution prediction_histogram(const Mat& probabilities) {
  return label_histogram(predict_classes(probabilities),
                         static_cast<int>(probabilities.cols()), "prediction_class");
}

struct EvalReport {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double brier = 0.0;
  double runtime_seconds = 0.0;
  double hsic_shift = 0.0;
  double mi_shift = 0.0;
  std::string method;
  double unlearn_ratio = 0.0;
  double feature_ratio = 0.0;
  std::uint64_t seed = 0;
};

struct ShiftReport {
  double hsic_shift = 0.0;
  double mi_shift = 0.0;
  EmpiricalDistribution labels_full;
  EmpiricalDistribution labels_retained;
};

/// Distribution-shift diagnostics comparing the model before unlearning (on
/// the full data) against the model after it (on the retained data).
inline ShiftReport shift_report(const ModelSpec& s, const Vec& theta_before,
                                const Vec& theta_after, const DatasetTable& data_full,
                                const DataView& view_full, const AppliedRequest& applied,
                                const IndependenceConfig& icfg) {
  ShiftReport out;
  const Mat preds_full = forward(s, theta_before, view_full);
  const Mat preds_retained = forward(s, theta_after, applied.view_retained());
  const DatasetTable& retained = applied.retained_table();
  out.hsic_shift =
      delta_p(preds_full, preds_retained, data_full, retained, icfg, DependenceMeasure::nhsic);
  out.mi_shift =
      delta_p(preds_full, preds_retained, data_full, retained, icfg, DependenceMeasure::plugin_mi);
  out.labels_full = label_histogram(data_full.labels, data_full.class_count, "label");
  out.labels_retained = label_histogram(retained.labels, retained.class_count, "label");
  return out;
}

}  // namespace dui
