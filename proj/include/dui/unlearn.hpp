#pragma once

#include <chrono>
#include <functional>
#include <optional>

#include <Eigen/Cholesky>

#include "dui/model.hpp"
#include "dui/request.hpp"

namespace dui {

enum class UnlearnMethod { retrain, influence, dui };
enum class SolverKind { direct, lissa };

inline const char* to_string(UnlearnMethod m) {
  switch (m) {
    case UnlearnMethod::retrain: return "retrain";
    case UnlearnMethod::influence: return "influence";
    case UnlearnMethod::dui: return "dui";
  }
  return "?";
}
inline const char* to_string(SolverKind s) { return s == SolverKind::direct ? "direct" : "lissa"; }

struct UnlearnConfig {
  UnlearnMethod method = UnlearnMethod::influence;
  double lambda = 0.0;  // weight of the distributional term (dui)
  SolverKind solver = SolverKind::direct;
  int lissa_iterations = 2000;
  double lissa_scale = 0.1;  // beta, the recursion step scale
  double damping = 0.01;     // delta, added to every Hessian application
  int lissa_repeats = 1;
  bool probe_spectrum = true;
  IndependenceConfig independence;
  TrainOptions retrain_options;
};

/// Dense assembly above this parameter count is refused.
inline constexpr Eigen::Index kDirectSolverMaxDim = 2000;

using HvpFn = std::function<Vec(const Vec&)>;

// ---------------------------------------------------------------------------
// Direct inverse-HVP: assemble the damped Hessian column-by-column through
// the HVP callback and solve the dense symmetric system.
// ---------------------------------------------------------------------------
struct DirectSolveResult {
  Vec x;
  double condition_estimate = 0.0;
};

inline DirectSolveResult solve_direct(const HvpFn& apply_hessian, Eigen::Index dim, const Vec& v,
                                      double damping) {
  if (dim > kDirectSolverMaxDim)
    throw PreconditionError("solve_direct: parameter dimension exceeds direct-solver limit");
  if (v.size() != dim) throw PreconditionError("solve_direct: rhs length mismatch");
  DirectSolveResult out;
  if (v.norm() == 0.0) {
    out.x = Vec::Zero(dim);
    return out;
  }
  Mat h(dim, dim);
  Vec e = Vec::Zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    e(j) = 1.0;
    h.col(j) = apply_hessian(e);
    e(j) = 0.0;
  }
  h = 0.5 * (h + h.transpose()).eval();  // FD columns are symmetric only to truncation error
  h.diagonal().array() += damping;

  Eigen::LDLT<Mat> ldlt(h);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
    throw SolverError("solve_direct: damped Hessian is singular or indefinite; increase damping");
  out.x = ldlt.solve(v);

  // Condition estimate: power iteration for the top eigenvalue, inverse
  // iteration through the factorization for the bottom one.
  Rng rng(0xC0ED);
  Vec w(dim);
  for (Eigen::Index i = 0; i < dim; ++i) w(i) = rng.next_normal();
  w.normalize();
  double lambda_max = 0.0;
  for (int it = 0; it < 20; ++it) {
    w = h * w;
    lambda_max = w.norm();
    if (lambda_max == 0.0) break;
    w /= lambda_max;
  }
  Vec u(dim);
  for (Eigen::Index i = 0; i < dim; ++i) u(i) = rng.next_normal();
  u.normalize();
  double inv_norm = 1.0;
  for (int it = 0; it < 20; ++it) {
    u = ldlt.solve(u);
    inv_norm = u.norm();
    if (inv_norm == 0.0) break;
    u /= inv_norm;
  }
  const double lambda_min = inv_norm > 0.0 ? 1.0 / inv_norm : 0.0;
  out.condition_estimate = lambda_min > 0.0 ? lambda_max / lambda_min : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// LiSSA-style iterative inverse-HVP:
//   x_1 = v,   x_j = v + (I - beta*(H + delta*I)) x_{j-1}
// which converges to (beta*(H + delta*I))^{-1} v, so the final estimate is
// scaled by beta once. Requires beta * ||H + delta*I|| < 1; a power-iteration
// probe warns when the config violates that.
// ---------------------------------------------------------------------------
struct LissaResult {
  Vec x;
  double residual = 0.0;  // ||(H + delta I) x - v|| / ||v||
  std::vector<std::string> warnings;
};

inline LissaResult solve_lissa(const HvpFn& apply_hessian, const Vec& v, int iterations,
                               double beta, double damping, int repeats = 1,
                               bool probe_spectrum = true) {
  if (iterations < 1) throw PreconditionError("solve_lissa: iterations must be >= 1");
  if (!(beta > 0.0)) throw PreconditionError("solve_lissa: beta must be positive");
  if (repeats < 1) throw PreconditionError("solve_lissa: repeats must be >= 1");
  LissaResult out;
  if (v.norm() == 0.0) {
    out.x = Vec::Zero(v.size());
    return out;
  }
  auto damped = [&](const Vec& w) -> Vec { return apply_hessian(w) + damping * w; };

  if (probe_spectrum) {
    Rng rng(0x11554A);
    Vec w(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) w(i) = rng.next_normal();
    w.normalize();
    double lambda_max = 0.0;
    for (int it = 0; it < 12; ++it) {
      w = damped(w);
      lambda_max = w.norm();
      if (lambda_max == 0.0) break;
      w /= lambda_max;
    }
    if (beta * lambda_max >= 1.0)
      out.warnings.push_back("lissa: beta * ||H|| >= 1 (estimated " +
                             std::to_string(beta * lambda_max) +
                             "); the recursion may diverge, reduce beta");
  }

  Vec accum = Vec::Zero(v.size());
  for (int rep = 0; rep < repeats; ++rep) {
    Vec x = v;
    double prev_norm = x.norm();
    int growth_streak = 0;
    for (int j = 1; j < iterations; ++j) {
      x = v + x - beta * damped(x);
      const double norm = x.norm();
      if (!std::isfinite(norm)) throw SolverError("solve_lissa: beta too large (iterate overflow)");
      growth_streak = norm > 2.0 * prev_norm ? growth_streak + 1 : 0;
      if (growth_streak >= 3)
        throw SolverError("solve_lissa: beta too large (iterate norm doubled 3 steps in a row)");
      prev_norm = norm;
    }
    accum += beta * x;
  }
  out.x = accum / static_cast<double>(repeats);
  out.residual = (damped(out.x) - v).norm() / v.norm();
  return out;
}

// ---------------------------------------------------------------------------
// Influence-gradient assembly.
// ---------------------------------------------------------------------------
struct InfluenceGradient {
  Vec g;
  std::vector<std::string> warnings;
};

namespace detail {

/// Parameter-space gradient of the batch L_F restricted to the predictions of
/// `restrict_rows` (the leave-one-row convention for per-point contributions).
inline Vec lf_restricted_param_grad(const ModelSpec& s, const Vec& theta, const DataView& data,
                                    const std::vector<int>& batch,
                                    const std::vector<int>& restrict_rows,
                                    const IndependenceConfig& icfg) {
  const ForwardCache cache = forward_cache(s, theta, data);
  const CenteredKernel kx = batch_feature_kernel(data, batch, icfg);
  const Mat probs_b = take_rows(cache.probs, batch);
  const Mat g_b = lf_grad_predictions(kx, probs_b, icfg);
  Mat dprobs = Mat::Zero(cache.probs.rows(), cache.probs.cols());
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (std::binary_search(restrict_rows.begin(), restrict_rows.end(), batch[i]))
      dprobs.row(batch[i]) = g_b.row(static_cast<Eigen::Index>(i));
  const Mat dlogits = softmax_backward(cache.probs, dprobs);
  return backprop_logits(s, theta, data, cache, dlogits);
}

}  // namespace detail

/// The update direction g with theta* = theta - H^{-1} g.
///
/// points mode:          g = -(1/n) sum_{z in Delta} grad l(z, theta)
/// feature_values mode:  g = (1/n) sum_{z in Delta} [grad l(z~) - grad l(z)]
///
/// where l(z) = per-point cross-entropy + ridge, n = |loss_indices|, and for
/// lambda > 0 the per-point share of the batch L_F gradient (restricted-row
/// backprop) is added at weight lambda.
inline InfluenceGradient influence_gradient(const ModelSpec& s, const Vec& theta,
                                            const DataView& data, const AppliedRequest& applied,
                                            double lambda, const IndependenceConfig& icfg,
                                            const std::vector<int>& loss_indices) {
  detail::check_theta(s, theta);
  if (loss_indices.empty()) throw PreconditionError("influence_gradient: empty index set");
  InfluenceGradient out;
  if (applied.empty()) {
    out.g = Vec::Zero(param_count(s));
    out.warnings.push_back("influence_gradient: empty request, zero update");
    return out;
  }
  const double inv_n = 1.0 / static_cast<double>(loss_indices.size());
  const auto n_delta = static_cast<double>(applied.delta_rows.size());
  const std::vector<int> batch = detail::batch_of(loss_indices, icfg);

  if (applied.request.mode == RequestMode::points) {
    Vec g = grad_sum_rows(s, theta, data, applied.delta_rows);
    g += n_delta * s.l2_reg * theta;
    g *= -inv_n;
    if (lambda > 0.0)
      g -= lambda * detail::lf_restricted_param_grad(s, theta, data, batch, applied.delta_rows, icfg);
    out.g = std::move(g);
  } else {
    // Perturbed-minus-original differencing; the ridge cancels. The graph
    // structure is shared: feature_values requests never touch edges.
    DatasetTable perturbed;
    perturbed.features = *data.features;
    perturbed.labels = *data.labels;
    perturbed.class_count = data.class_count;
    for (std::size_t i = 0; i < applied.delta_rows.size(); ++i)
      perturbed.features.row(applied.delta_rows[i]) =
          applied.perturbed_rows.row(static_cast<Eigen::Index>(i));
    DataView pview{&perturbed.features, &perturbed.labels, perturbed.class_count, data.adjacency};

    Vec g = inv_n * (grad_sum_rows(s, theta, pview, applied.delta_rows) -
                     grad_sum_rows(s, theta, data, applied.delta_rows));
    if (lambda > 0.0)
      g += lambda *
           (detail::lf_restricted_param_grad(s, theta, pview, batch, applied.delta_rows, icfg) -
            detail::lf_restricted_param_grad(s, theta, data, batch, applied.delta_rows, icfg));
    if (g.norm() == 0.0) out.warnings.push_back("influence_gradient: no-op perturbation, zero update");
    out.g = std::move(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model-level inverse-HVP entry points over the combined objective
// L + lambda*L_F on the given data.
// ---------------------------------------------------------------------------
inline DirectSolveResult inverse_hvp_direct(const ModelSpec& s, const Vec& theta,
                                            const DataView& data,
                                            const std::vector<int>& loss_indices, const Vec& v,
                                            double lambda, const IndependenceConfig& icfg,
                                            double damping) {
  LfContext ctx;
  const LfContext* ctx_ptr = nullptr;
  if (lambda > 0.0 && icfg.alpha != 0.0) {
    ctx = make_lf_context(data, loss_indices, icfg);
    ctx_ptr = &ctx;
  }
  HvpFn h = [&, ctx_ptr](const Vec& w) {
    return combined_hvp(s, theta, data, loss_indices, lambda, icfg, w, ctx_ptr);
  };
  return solve_direct(h, param_count(s), v, damping);
}

inline LissaResult inverse_hvp_lissa(const ModelSpec& s, const Vec& theta, const DataView& data,
                                     const std::vector<int>& loss_indices, const Vec& v,
                                     double lambda, const IndependenceConfig& icfg, int iterations,
                                     double beta, double damping, int repeats = 1,
                                     bool probe_spectrum = true) {
  LfContext ctx;
  const LfContext* ctx_ptr = nullptr;
  if (lambda > 0.0 && icfg.alpha != 0.0) {
    ctx = make_lf_context(data, loss_indices, icfg);
    ctx_ptr = &ctx;
  }
  HvpFn h = [&, ctx_ptr](const Vec& w) {
    return combined_hvp(s, theta, data, loss_indices, lambda, icfg, w, ctx_ptr);
  };
  return solve_lissa(h, v, iterations, beta, damping, repeats, probe_spectrum);
}

// ---------------------------------------------------------------------------
// The unlearning engine.
// ---------------------------------------------------------------------------
struct UnlearnDiagnostics {
  double influence_grad_norm = 0.0;
  std::optional<double> lissa_residual;
  std::optional<double> condition_estimate;
  LossBreakdown loss_before;
  LossBreakdown loss_after;
  std::vector<std::string> warnings;
};

struct UnlearnResult {
  Vec theta_star;
  double runtime_seconds = 0.0;
  UnlearnDiagnostics diagnostics;
};

/// Loss indices of the retained dataset induced by `loss_indices` on the
/// original one.
inline std::vector<int> retained_loss_indices(const AppliedRequest& applied,
                                              const std::vector<int>& loss_indices) {
  std::vector<int> out;
  out.reserve(loss_indices.size());
  for (int i : loss_indices) {
    const int r = applied.retained_row_of_original[static_cast<std::size_t>(i)];
    if (r >= 0) out.push_back(r);
  }
  return out;
}

inline UnlearnResult unlearn(const ModelSpec& s, const Vec& theta, const DataView& data,
                             const AppliedRequest& applied, const UnlearnConfig& cfg,
                             const std::vector<int>& loss_indices) {
  detail::check_theta(s, theta);
  const auto start = std::chrono::steady_clock::now();
  UnlearnResult result;
  const DataView retained = applied.view_retained();
  const std::vector<int> retained_loss = retained_loss_indices(applied, loss_indices);
  if (retained_loss.empty()) throw PreconditionError("unlearn: no retained loss rows");
  const double lambda = cfg.method == UnlearnMethod::dui ? cfg.lambda : 0.0;

  if (cfg.method == UnlearnMethod::retrain) {
    TrainResult tr = train(s, retained, retained_loss, cfg.retrain_options);
    result.theta_star = std::move(tr.theta);
    result.diagnostics.loss_before = combined_loss(s, theta, retained, retained_loss, lambda, cfg.independence);
    result.diagnostics.loss_after =
        combined_loss(s, result.theta_star, retained, retained_loss, lambda, cfg.independence);
    result.runtime_seconds = std::max(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9);
    return result;
  }

  InfluenceGradient ig = influence_gradient(s, theta, data, applied, lambda, cfg.independence, loss_indices);
  result.diagnostics.warnings = std::move(ig.warnings);
  result.diagnostics.influence_grad_norm = ig.g.norm();

  // One retained-side L_F context shared by the solver loop and the
  // before/after loss breakdowns; the feature kernel is theta-independent.
  LfContext ctx;
  const LfContext* ctx_ptr = nullptr;
  if (lambda > 0.0 && cfg.independence.alpha != 0.0) {
    ctx = make_lf_context(retained, retained_loss, cfg.independence);
    ctx_ptr = &ctx;
  }

  if (result.diagnostics.influence_grad_norm == 0.0) {
    result.theta_star = theta;
  } else {
    HvpFn apply_h = [&, ctx_ptr](const Vec& w) {
      return combined_hvp(s, theta, retained, retained_loss, lambda, cfg.independence, w, ctx_ptr);
    };
    Vec step;
    if (cfg.solver == SolverKind::direct) {
      if (param_count(s) > kDirectSolverMaxDim)
        throw PreconditionError("unlearn: direct solver limited to " +
                                std::to_string(kDirectSolverMaxDim) +
                                " parameters; use the lissa solver");
      DirectSolveResult ds = solve_direct(apply_h, param_count(s), ig.g, cfg.damping);
      result.diagnostics.condition_estimate = ds.condition_estimate;
      step = std::move(ds.x);
    } else {
      LissaResult ls = solve_lissa(apply_h, ig.g, cfg.lissa_iterations, cfg.lissa_scale,
                                   cfg.damping, cfg.lissa_repeats, cfg.probe_spectrum);
      result.diagnostics.lissa_residual = ls.residual;
      for (auto& w : ls.warnings) result.diagnostics.warnings.push_back(std::move(w));
      step = std::move(ls.x);
    }
    result.theta_star = theta - step;
    if (!result.theta_star.allFinite())
      throw SolverError("unlearn: updated parameters are non-finite");
  }

  result.diagnostics.loss_before =
      combined_loss(s, theta, retained, retained_loss, lambda, cfg.independence, ctx_ptr);
  result.diagnostics.loss_after = combined_loss(s, result.theta_star, retained, retained_loss,
                                                lambda, cfg.independence, ctx_ptr);
  result.runtime_seconds = std::max(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9);
  return result;
}

/// Per-point distributional influence -H^{-1} grad L_F(z); reporting
/// diagnostic, not part of the update path.
inline Vec i_up_params(const ModelSpec& s, const Vec& theta, int z_row, const DataView& data,
                       const IndependenceConfig& icfg, double damping = 0.01,
                       const std::vector<int>* loss_indices = nullptr) {
  std::vector<int> all;
  if (!loss_indices) {
    all = detail::all_rows(data.n());
    loss_indices = &all;
  }
  if (icfg.alpha == 0.0) return Vec::Zero(param_count(s));
  const std::vector<int> batch = detail::batch_of(*loss_indices, icfg);
  const Vec glf = detail::lf_restricted_param_grad(s, theta, data, batch, {z_row}, icfg);
  if (glf.norm() == 0.0) return Vec::Zero(param_count(s));
  HvpFn apply_h = [&](const Vec& w) { return hvp(s, theta, data, *loss_indices, w); };
  if (param_count(s) <= kDirectSolverMaxDim)
    return -solve_direct(apply_h, param_count(s), glf, damping).x;
  return -solve_lissa(apply_h, glf, 1000, 0.1, damping).x;
}

}  // namespace dui
