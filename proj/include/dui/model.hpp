#pragma once

#include <chrono>
#include <fstream>
#include <limits>
#include <functional>
#include <string>
#include <vector>

#include "dui/dataset.hpp"
#include "dui/independence.hpp"

namespace dui {

enum class Arch { logreg, mlp, gcn };

inline const char* to_string(Arch a) {
  switch (a) {
    case Arch::logreg: return "logreg";
    case Arch::mlp: return "mlp";
    case Arch::gcn: return "gcn";
  }
  return "?";
}

struct ModelSpec {
  Arch arch = Arch::logreg;
  int input_dim = 0;
  int class_count = 0;
  int hidden_dim = 16;   // mlp/gcn only
  double l2_reg = 0.01;  // ridge weight on the whole parameter vector
  std::uint64_t seed = 42;
};

/// Flat parameter layout, per arch, weights before biases in layer order:
///   logreg: W (m x C), b (C)
///   mlp:    W0 (m x h), b0 (h), W1 (h x C), b1 (C)
///   gcn:    W0 (m x h), W1 (h x C)           (no biases)
/// Matrices are stored column-major.
inline Eigen::Index param_count(const ModelSpec& s) {
  const Eigen::Index m = s.input_dim, c = s.class_count, h = s.hidden_dim;
  switch (s.arch) {
    case Arch::logreg: return m * c + c;
    case Arch::mlp: return m * h + h + h * c + c;
    case Arch::gcn: return m * h + h * c;
  }
  throw PreconditionError("param_count: unknown arch");
}

inline void validate(const ModelSpec& s) {
  if (s.input_dim < 1) throw PreconditionError("model: input_dim must be >= 1");
  if (s.class_count < 2) throw PreconditionError("model: class_count must be >= 2");
  if ((s.arch == Arch::mlp || s.arch == Arch::gcn) && s.hidden_dim < 1)
    throw PreconditionError("model: hidden_dim must be >= 1");
  if (s.l2_reg < 0) throw PreconditionError("model: l2_reg must be >= 0");
}

inline std::uint64_t spec_digest(const ModelSpec& s) {
  Digest d;
  d.i64(static_cast<int>(s.arch)).i64(s.input_dim).i64(s.class_count).i64(s.hidden_dim);
  d.f64(s.l2_reg).u64(s.seed);
  return d.value();
}

namespace detail {

struct ParamMap {
  Eigen::Map<const Mat> w0;
  Eigen::Map<const Vec> b0;
  Eigen::Map<const Mat> w1;
  Eigen::Map<const Vec> b1;
};

inline void check_theta(const ModelSpec& s, const Vec& theta) {
  if (theta.size() != param_count(s)) throw PreconditionError("theta length != param count");
  if (!theta.allFinite()) throw PreconditionError("theta has non-finite entries");
}

inline Mat softmax_rows(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Vec row = logits.row(i).transpose();
    const double mx = row.maxCoeff();
    Vec e = (row.array() - mx).exp();
    p.row(i) = (e / e.sum()).transpose();
  }
  return p;
}

inline void check_view(const ModelSpec& s, const DataView& data) {
  if (data.m() != s.input_dim) throw PreconditionError("forward: feature dim != input_dim");
  if (data.class_count != s.class_count) throw PreconditionError("forward: class_count mismatch");
  if ((s.arch == Arch::gcn) != (data.adjacency != nullptr))
    throw PreconditionError("forward: adjacency required iff arch = gcn");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward pass with cached intermediates for backprop.
// ---------------------------------------------------------------------------
struct ForwardCache {
  Mat probs;   // n x C, rows sum to 1
  Mat logits;  // n x C
  Mat z0;      // pre-activation of the hidden layer (mlp/gcn)
  Mat h1;      // ReLU(z0)
  Mat ax;      // gcn only: A_hat * X
};

inline ForwardCache forward_cache(const ModelSpec& s, const Vec& theta, const DataView& data) {
  detail::check_theta(s, theta);
  detail::check_view(s, data);
  const Eigen::Index m = s.input_dim, c = s.class_count, h = s.hidden_dim;
  const Mat& x = *data.features;
  ForwardCache cache;
  switch (s.arch) {
    case Arch::logreg: {
      Eigen::Map<const Mat> w(theta.data(), m, c);
      Eigen::Map<const Vec> b(theta.data() + m * c, c);
      cache.logits = (x * w).rowwise() + b.transpose();
      break;
    }
    case Arch::mlp: {
      const double* p = theta.data();
      Eigen::Map<const Mat> w0(p, m, h);
      Eigen::Map<const Vec> b0(p + m * h, h);
      Eigen::Map<const Mat> w1(p + m * h + h, h, c);
      Eigen::Map<const Vec> b1(p + m * h + h + h * c, c);
      cache.z0 = (x * w0).rowwise() + b0.transpose();
      cache.h1 = cache.z0.cwiseMax(0.0);
      cache.logits = (cache.h1 * w1).rowwise() + b1.transpose();
      break;
    }
    case Arch::gcn: {
      const double* p = theta.data();
      Eigen::Map<const Mat> w0(p, m, h);
      Eigen::Map<const Mat> w1(p + m * h, h, c);
      const SpMat& a = *data.adjacency;
      cache.ax = a * x;
      cache.z0 = cache.ax * w0;
      cache.h1 = cache.z0.cwiseMax(0.0);
      cache.logits = a * (cache.h1 * w1);
      break;
    }
  }
  cache.probs = detail::softmax_rows(cache.logits);
  return cache;
}

inline Mat forward(const ModelSpec& s, const Vec& theta, const DataView& data) {
  return forward_cache(s, theta, data).probs;
}

// ---------------------------------------------------------------------------
// Backpropagate an n x C logit-space gradient to parameter space. The ridge
// term is NOT included; callers add it where the objective has one.
// ---------------------------------------------------------------------------
inline Vec backprop_logits(const ModelSpec& s, const Vec& theta, const DataView& data,
                           const ForwardCache& cache, const Mat& dlogits) {
  const Eigen::Index m = s.input_dim, c = s.class_count, h = s.hidden_dim;
  const Mat& x = *data.features;
  Vec g = Vec::Zero(param_count(s));
  switch (s.arch) {
    case Arch::logreg: {
      Eigen::Map<Mat>(g.data(), m, c) = x.transpose() * dlogits;
      Eigen::Map<Vec>(g.data() + m * c, c) = dlogits.colwise().sum().transpose();
      break;
    }
    case Arch::mlp: {
      const double* p = theta.data();
      Eigen::Map<const Mat> w1(p + m * h + h, h, c);
      const Mat dh1 = dlogits * w1.transpose();
      const Mat dz0 = (cache.z0.array() > 0.0).select(dh1, 0.0);
      double* q = g.data();
      Eigen::Map<Mat>(q, m, h) = x.transpose() * dz0;
      Eigen::Map<Vec>(q + m * h, h) = dz0.colwise().sum().transpose();
      Eigen::Map<Mat>(q + m * h + h, h, c) = cache.h1.transpose() * dlogits;
      Eigen::Map<Vec>(q + m * h + h + h * c, c) = dlogits.colwise().sum().transpose();
      break;
    }
    case Arch::gcn: {
      const double* p = theta.data();
      Eigen::Map<const Mat> w1(p + m * h, h, c);
      const SpMat& a = *data.adjacency;
      const Mat a_dlogits = a * dlogits;  // A_hat is symmetric
      const Mat dh1 = a_dlogits * w1.transpose();
      const Mat dz0 = (cache.z0.array() > 0.0).select(dh1, 0.0);
      double* q = g.data();
      Eigen::Map<Mat>(q, m, h) = cache.ax.transpose() * dz0;
      Eigen::Map<Mat>(q + m * h, h, c) = cache.h1.transpose() * a_dlogits;
      break;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Scalar loss: mean cross-entropy over loss_indices plus (l2/2)||theta||^2.
// ---------------------------------------------------------------------------
inline double loss_from_probs(const ModelSpec& s, const Vec& theta, const Mat& probs,
                              const IVec& labels, const std::vector<int>& loss_indices) {
  if (loss_indices.empty()) throw PreconditionError("loss: empty index set");
  double ce = 0.0;
  for (int i : loss_indices) {
    if (i < 0 || i >= probs.rows()) throw PreconditionError("loss: index out of range");
    ce -= std::log(std::max(probs(i, labels(i)), 1e-300));
  }
  ce /= static_cast<double>(loss_indices.size());
  return ce + 0.5 * s.l2_reg * theta.squaredNorm();
}

inline double loss(const ModelSpec& s, const Vec& theta, const DataView& data,
                   const std::vector<int>& loss_indices) {
  return loss_from_probs(s, theta, forward(s, theta, data).eval(), *data.labels, loss_indices);
}

/// Gradient of the mean cross-entropy objective (analytic backprop).
inline Vec grad(const ModelSpec& s, const Vec& theta, const DataView& data,
                const std::vector<int>& loss_indices) {
  if (loss_indices.empty()) throw PreconditionError("grad: empty index set");
  const ForwardCache cache = forward_cache(s, theta, data);
  Mat dlogits = Mat::Zero(cache.probs.rows(), cache.probs.cols());
  const double inv_k = 1.0 / static_cast<double>(loss_indices.size());
  for (int i : loss_indices) {
    dlogits.row(i) = cache.probs.row(i) * inv_k;
    dlogits(i, (*data.labels)(i)) -= inv_k;
  }
  return backprop_logits(s, theta, data, cache, dlogits) + s.l2_reg * theta;
}

/// Sum over `rows` of per-point cross-entropy gradients (no 1/k, no ridge);
/// used by the influence assembly where per-point loss terms are summed.
inline Vec grad_sum_rows(const ModelSpec& s, const Vec& theta, const DataView& data,
                         const std::vector<int>& rows) {
  const ForwardCache cache = forward_cache(s, theta, data);
  Mat dlogits = Mat::Zero(cache.probs.rows(), cache.probs.cols());
  for (int i : rows) {
    dlogits.row(i) += cache.probs.row(i);
    dlogits(i, (*data.labels)(i)) -= 1.0;
  }
  return backprop_logits(s, theta, data, cache, dlogits);
}

// ---------------------------------------------------------------------------
// Hessian-vector products. The logreg Hessian is applied in closed form
// (softmax cross-entropy is exactly quadratic in its Gauss-Newton sense
// through the linear map); mlp/gcn fall back to central finite differences
// of the analytic gradient.
// ---------------------------------------------------------------------------
inline double hvp_fd_step(const Vec& theta, const Vec& v) {
  return 1e-4 * (1.0 + theta.norm()) / std::max(v.norm(), 1e-12);
}

inline Vec hvp_fd(const ModelSpec& s, const Vec& theta, const DataView& data,
                  const std::vector<int>& loss_indices, const Vec& v) {
  if (v.norm() == 0.0) return Vec::Zero(v.size());
  const double h = hvp_fd_step(theta, v);
  const Vec gp = grad(s, theta + h * v, data, loss_indices);
  const Vec gm = grad(s, theta - h * v, data, loss_indices);
  return (gp - gm) / (2.0 * h);
}

inline Vec hvp_logreg(const ModelSpec& s, const Vec& theta, const DataView& data,
                      const std::vector<int>& loss_indices, const Vec& v) {
  const Eigen::Index m = s.input_dim, c = s.class_count;
  const Mat& x = *data.features;
  const ForwardCache cache = forward_cache(s, theta, data);
  Eigen::Map<const Mat> vw(v.data(), m, c);
  Eigen::Map<const Vec> vb(v.data() + m * c, c);
  const double inv_k = 1.0 / static_cast<double>(loss_indices.size());
  Mat sgrad = Mat::Zero(x.rows(), c);  // rows: (diag(p) - p p^T) u, u = d logits
  for (int i : loss_indices) {
    const Vec p = cache.probs.row(i).transpose();
    const Vec u = (vw.transpose() * x.row(i).transpose()) + vb;
    sgrad.row(i) = (p.array() * u.array()).matrix().transpose() - p.dot(u) * p.transpose();
  }
  Vec out(v.size());
  Eigen::Map<Mat>(out.data(), m, c) = inv_k * (x.transpose() * sgrad);
  Eigen::Map<Vec>(out.data() + m * c, c) = inv_k * sgrad.colwise().sum().transpose();
  return out + s.l2_reg * v;
}

inline Vec hvp(const ModelSpec& s, const Vec& theta, const DataView& data,
               const std::vector<int>& loss_indices, const Vec& v) {
  if (loss_indices.empty()) throw PreconditionError("hvp: empty index set");
  if (!v.allFinite()) throw PreconditionError("hvp: non-finite direction");
  if (v.norm() == 0.0) return Vec::Zero(v.size());
  if (s.arch == Arch::logreg) return hvp_logreg(s, theta, data, loss_indices, v);
  return hvp_fd(s, theta, data, loss_indices, v);
}

// ---------------------------------------------------------------------------
// Combined objective L + lambda * L_F. The L_F term is evaluated on an
// independence batch drawn from loss_indices; its prediction-space gradient
// is pushed through softmax and the network in one extra backward pass.
// ---------------------------------------------------------------------------
struct LossBreakdown {
  double origin = 0.0;
  double lf = 0.0;
  double total = 0.0;
};

namespace detail {

inline std::vector<int> batch_of(const std::vector<int>& indices, const IndependenceConfig& cfg) {
  if (static_cast<int>(indices.size()) <= cfg.batch_limit) return indices;
  Rng rng(cfg.batch_seed);
  std::vector<int> pos =
      rng.sample_without_replacement(static_cast<int>(indices.size()), cfg.batch_limit);
  std::vector<int> out;
  out.reserve(pos.size());
  for (int p : pos) out.push_back(indices[static_cast<std::size_t>(p)]);
  return out;
}

/// Chain an n x C probability-space gradient through the softmax rows.
inline Mat softmax_backward(const Mat& probs, const Mat& dprobs) {
  Mat dlogits(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double inner = probs.row(i).dot(dprobs.row(i));
    dlogits.row(i) = probs.row(i).cwiseProduct(dprobs.row(i)) - inner * probs.row(i);
  }
  return dlogits;
}

}  // namespace detail

/// Feature kernel over an independence batch; constant in theta, so callers
/// may build it once and reuse it across gradient and curvature evaluations.
inline CenteredKernel batch_feature_kernel(const DataView& data, const std::vector<int>& batch,
                                           const IndependenceConfig& cfg) {
  return center(kernel_matrix(detail::take_rows(*data.features, batch), cfg.feature_kernel));
}

/// The theta-independent pieces of the L_F term: the independence batch, its
/// feature kernel, and the batch labels. Solver loops evaluate combined
/// gradients hundreds of times; rebuilding the kernel each time would swamp
/// them.
struct LfContext {
  std::vector<int> batch;
  CenteredKernel kx;
  IVec labels;
};

inline LfContext make_lf_context(const DataView& data, const std::vector<int>& loss_indices,
                                 const IndependenceConfig& icfg) {
  LfContext ctx;
  ctx.batch = detail::batch_of(loss_indices, icfg);
  ctx.kx = batch_feature_kernel(data, ctx.batch, icfg);
  ctx.labels = detail::take(*data.labels, ctx.batch);
  return ctx;
}

inline std::pair<Vec, LossBreakdown> combined_grad(const ModelSpec& s, const Vec& theta,
                                                   const DataView& data,
                                                   const std::vector<int>& loss_indices,
                                                   double lambda, const IndependenceConfig& icfg,
                                                   const LfContext* ctx = nullptr) {
  if (lambda < 0) throw PreconditionError("combined_grad: lambda must be >= 0");
  if (loss_indices.empty()) throw PreconditionError("combined_grad: empty index set");
  LfContext local;
  if (lambda > 0.0 && !ctx) {
    local = make_lf_context(data, loss_indices, icfg);
    ctx = &local;
  }
  const ForwardCache cache = forward_cache(s, theta, data);
  const double inv_k = 1.0 / static_cast<double>(loss_indices.size());
  Mat dlogits = Mat::Zero(cache.probs.rows(), cache.probs.cols());
  for (int i : loss_indices) {
    dlogits.row(i) = cache.probs.row(i) * inv_k;
    dlogits(i, (*data.labels)(i)) -= inv_k;
  }

  LossBreakdown breakdown;
  breakdown.origin = loss_from_probs(s, theta, cache.probs, *data.labels, loss_indices);

  if (lambda > 0.0) {
    const Mat probs_b = detail::take_rows(cache.probs, ctx->batch);
    breakdown.lf = lf_value(ctx->kx, ctx->labels, probs_b, icfg);
    const Mat dprobs_b = lf_grad_predictions(ctx->kx, probs_b, icfg);
    Mat dprobs = Mat::Zero(cache.probs.rows(), cache.probs.cols());
    for (std::size_t i = 0; i < ctx->batch.size(); ++i)
      dprobs.row(ctx->batch[i]) = dprobs_b.row(static_cast<Eigen::Index>(i));
    dlogits += lambda * detail::softmax_backward(cache.probs, dprobs);
  }
  breakdown.total = breakdown.origin + lambda * breakdown.lf;
  Vec g = backprop_logits(s, theta, data, cache, dlogits) + s.l2_reg * theta;
  return {std::move(g), breakdown};
}

/// Total-loss value matching combined_grad's objective (for FD checks and
/// before/after reports).
inline LossBreakdown combined_loss(const ModelSpec& s, const Vec& theta, const DataView& data,
                                   const std::vector<int>& loss_indices, double lambda,
                                   const IndependenceConfig& icfg,
                                   const LfContext* ctx = nullptr) {
  LossBreakdown b;
  const ForwardCache cache = forward_cache(s, theta, data);
  b.origin = loss_from_probs(s, theta, cache.probs, *data.labels, loss_indices);
  if (lambda > 0.0) {
    LfContext local;
    if (!ctx) {
      local = make_lf_context(data, loss_indices, icfg);
      ctx = &local;
    }
    b.lf = lf_value(ctx->kx, ctx->labels, detail::take_rows(cache.probs, ctx->batch), icfg);
  }
  b.total = b.origin + lambda * b.lf;
  return b;
}

/// HVP of L + lambda*L_F. When lambda = 0, or alpha = 0 (L_F constant in
/// theta), the combined Hessian equals the plain one and we dispatch to it.
inline Vec combined_hvp(const ModelSpec& s, const Vec& theta, const DataView& data,
                        const std::vector<int>& loss_indices, double lambda,
                        const IndependenceConfig& icfg, const Vec& v,
                        const LfContext* ctx = nullptr) {
  if (lambda == 0.0 || icfg.alpha == 0.0) return hvp(s, theta, data, loss_indices, v);
  if (v.norm() == 0.0) return Vec::Zero(v.size());
  LfContext local;
  if (!ctx) {
    local = make_lf_context(data, loss_indices, icfg);
    ctx = &local;
  }
  const double h = hvp_fd_step(theta, v);
  const Vec gp = combined_grad(s, theta + h * v, data, loss_indices, lambda, icfg, ctx).first;
  const Vec gm = combined_grad(s, theta - h * v, data, loss_indices, lambda, icfg, ctx).first;
  return (gp - gm) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Full-batch gradient-descent training from a seeded small-uniform init.
// ---------------------------------------------------------------------------
struct TrainOptions {
  double learning_rate = 0.5;
  int epochs = 500;
  double tolerance = 1e-8;  // stop when ||grad|| drops below this
};

struct TrainResult {
  Vec theta;
  double runtime_seconds = 0.0;
  int epochs_run = 0;
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
  std::vector<double> loss_history;
};

/// Seeded init, uniform in +-0.1/sqrt(fan_in) per layer.
inline Vec init_params(const ModelSpec& s) {
  validate(s);
  const Eigen::Index m = s.input_dim, c = s.class_count, h = s.hidden_dim;
  Vec theta(param_count(s));
  Rng rng(s.seed);
  auto fill = [&](Eigen::Index offset, Eigen::Index count, Eigen::Index fan_in) {
    const double scale = 0.1 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < count; ++i) theta(offset + i) = rng.next_uniform(-scale, scale);
  };
  switch (s.arch) {
    case Arch::logreg:
      fill(0, m * c + c, m);
      break;
    case Arch::mlp:
      fill(0, m * h + h, m);
      fill(m * h + h, h * c + c, h);
      break;
    case Arch::gcn:
      fill(0, m * h, m);
      fill(m * h, h * c, h);
      break;
  }
  return theta;
}

inline TrainResult train(const ModelSpec& s, const DataView& data,
                         const std::vector<int>& train_indices, const TrainOptions& opt) {
  if (opt.epochs < 1) throw PreconditionError("train: epochs must be >= 1");
  if (!(opt.learning_rate > 0)) throw PreconditionError("train: learning_rate must be positive");
  if (train_indices.empty()) throw PreconditionError("train: empty index set");
  const auto start = std::chrono::steady_clock::now();
  TrainResult r;
  r.theta = init_params(s);
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  r.loss_history.reserve(static_cast<std::size_t>(opt.epochs));
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const double l = loss(s, r.theta, data, train_indices);
    if (!std::isfinite(l))
      throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch) +
                              " (last finite loss " + std::to_string(last_finite) + ")",
                          last_finite);
    last_finite = l;
    r.loss_history.push_back(l);
    const Vec g = grad(s, r.theta, data, train_indices);
    r.final_grad_norm = g.norm();
    r.epochs_run = epoch + 1;
    if (r.final_grad_norm < opt.tolerance) break;
    r.theta -= opt.learning_rate * g;
  }
  if (!r.theta.allFinite())
    throw TrainingError("train: parameters diverged (last finite loss " +
                            std::to_string(last_finite) + ")",
                        last_finite);
  r.final_loss = loss(s, r.theta, data, train_indices);
  r.runtime_seconds = std::max(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9);
  return r;
}

// ---------------------------------------------------------------------------
// Parameter persistence: little-endian 64-bit floats prefixed by the spec
// digest.
// ---------------------------------------------------------------------------
inline void save_params(const std::string& path, const ModelSpec& s, const Vec& theta) {
  detail::check_theta(s, theta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  const char magic[8] = {'D', 'U', 'I', 'P', 'A', 'R', 'M', '1'};
  out.write(magic, 8);
  auto write_u64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
  };
  write_u64(spec_digest(s));
  write_u64(static_cast<std::uint64_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &theta(i), 8);
    write_u64(bits);
  }
  if (!out) throw FormatError("write failed: " + path);
}

inline Vec load_params(const std::string& path, const ModelSpec& s) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, "DUIPARM1", 8) != 0)
    throw FormatError("params: bad magic in " + path);
  auto read_u64 = [&](const char* field) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw FormatError("params: truncated file while reading " + std::string(field));
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  };
  const std::uint64_t digest = read_u64("spec digest");
  if (digest != spec_digest(s))
    throw FormatError("params: spec digest mismatch (file was written for a different model spec)");
  const std::uint64_t p = read_u64("param count");
  if (p != static_cast<std::uint64_t>(param_count(s)))
    throw FormatError("params: parameter count mismatch");
  Vec theta(static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const std::uint64_t bits = read_u64("parameter value");
    double v;
    std::memcpy(&v, &bits, 8);
    theta(i) = v;
  }
  return theta;
}

}  // namespace dui
