#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "dui/independence.hpp"
#include "helpers.hpp"

using namespace dui;
using testutil::naive_center;
using testutil::naive_trace_product;

TEST_CASE("kernel_matrix: linear kernel of orthonormal rows is the identity") {
  Mat rows = Mat::Identity(4, 4);
  Mat k = kernel_matrix(rows, {KernelKind::linear, std::nullopt});
  CHECK((k - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel_matrix: rbf of two identical points is all ones") {
  Mat rows(2, 3);
  rows << 1, 2, 3, 1, 2, 3;
  Mat k = kernel_matrix(rows, {KernelKind::rbf, 0.7});
  CHECK(k(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k(0, 0) == 1.0);
}

TEST_CASE("kernel_matrix: rbf closed-form entry for points {0,2} at sigma 1") {
  Mat rows(2, 1);
  rows << 0.0, 2.0;
  Mat k = kernel_matrix(rows, {KernelKind::rbf, 1.0});
  CHECK(k(0, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("kernel_matrix: median heuristic on identical rows is a degenerate-input error") {
  Mat rows = Mat::Ones(3, 2);
  CHECK_THROWS_WITH_AS(kernel_matrix(rows, {KernelKind::rbf, std::nullopt}),
                       doctest::Contains("degenerate kernel input"), PreconditionError);
}

TEST_CASE("kernel_matrix: delta kernel requires integer values") {
  Mat ints(3, 1);
  ints << 0, 1, 0;
  Mat k = kernel_matrix(ints, {KernelKind::delta, std::nullopt});
  CHECK(k(0, 2) == 1.0);
  CHECK(k(0, 1) == 0.0);
  Mat bad(2, 1);
  bad << 0.5, 1.0;
  CHECK_THROWS_AS(kernel_matrix(bad, {KernelKind::delta, std::nullopt}), PreconditionError);
}

TEST_CASE("kernel_matrix: rbf median heuristic is PSD-ish and unit diagonal") {
  Mat rows = testutil::random_matrix(6, 3, 42);
  Mat k = kernel_matrix(rows, {KernelKind::rbf, std::nullopt});
  CHECK(k.diagonal().isApproxToConstant(1.0, 1e-15));
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(k);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("center: constant matrix becomes zero") {
  Mat k = Mat::Constant(5, 5, 3.25);
  CenteredKernel c = center(k);
  CHECK(c.matrix.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("center: idempotent on an already-centered matrix") {
  Mat k = kernel_matrix(testutil::random_matrix(5, 2, 7), {KernelKind::rbf, 1.0});
  CenteredKernel once = center(k);
  CenteredKernel twice = center(once.matrix);
  CHECK((once.matrix - twice.matrix).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("center: 3x3 fixture matches hand arithmetic") {
  Mat k(3, 3);
  k << 1, 2, 3, 2, 5, 6, 3, 6, 9;
  CenteredKernel c = center(k);
  // row means (2, 13/3, 6), grand mean 37/9; HKH entries worked out by hand
  Mat expected(3, 3);
  expected << 10.0 / 9, -2.0 / 9, -8.0 / 9, -2.0 / 9, 4.0 / 9, -2.0 / 9, -8.0 / 9, -2.0 / 9,
      10.0 / 9;
  CHECK((c.matrix - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((c.matrix - naive_center(k)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("center: row and column sums vanish") {
  Mat k = kernel_matrix(testutil::random_matrix(7, 3, 11), {KernelKind::rbf, 2.0});
  CenteredKernel c = center(k);
  const double scale = 7.0 * c.matrix.cwiseAbs().maxCoeff();
  CHECK(c.matrix.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-8 * scale);
  CHECK(c.matrix.colwise().sum().cwiseAbs().maxCoeff() <= 1e-8 * scale);
}

namespace {

CenteredKernel centered_rbf(const Mat& rows, double sigma) {
  return center(kernel_matrix(rows, {KernelKind::rbf, sigma}));
}

}  // namespace

TEST_CASE("nhsic: constant label vector gives zero dependence") {
  Mat x = testutil::random_matrix(5, 2, 3);
  IVec labels = IVec::Zero(5);
  CenteredKernel kx = centered_rbf(x, 1.0);
  CenteredKernel ky = center(kernel_matrix(labels.cast<double>(), {KernelKind::delta, std::nullopt}));
  for (auto norm : {HsicNormalization::raw_trace, HsicNormalization::n_minus_1_squared,
                    HsicNormalization::frobenius})
    CHECK(std::abs(nhsic(kx, ky, norm)) < 1e-12);
}

TEST_CASE("nhsic: frobenius self-dependence is exactly one") {
  CenteredKernel kx = centered_rbf(testutil::random_matrix(6, 2, 5), 1.5);
  CHECK(nhsic(kx, kx, HsicNormalization::frobenius) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nhsic: brute-force trace oracle on 4-sample fixture") {
  Mat x = testutil::random_matrix(4, 3, 21);
  Mat y = testutil::random_matrix(4, 2, 22);
  Mat kx_raw = kernel_matrix(x, {KernelKind::rbf, 1.0});
  Mat ky_raw = kernel_matrix(y, {KernelKind::linear, std::nullopt});
  const double oracle = naive_trace_product(naive_center(kx_raw), naive_center(ky_raw));
  const double got = nhsic(center(kx_raw), center(ky_raw), HsicNormalization::raw_trace);
  CHECK(std::abs(got - oracle) <= 1e-10);
  const double got_n = nhsic(center(kx_raw), center(ky_raw), HsicNormalization::n_minus_1_squared);
  CHECK(std::abs(got_n - oracle / 9.0) <= 1e-10);
}

TEST_CASE("nhsic: symmetric in its arguments") {
  CenteredKernel a = centered_rbf(testutil::random_matrix(5, 2, 31), 1.0);
  CenteredKernel b = centered_rbf(testutil::random_matrix(5, 3, 32), 2.0);
  for (auto norm : {HsicNormalization::raw_trace, HsicNormalization::n_minus_1_squared,
                    HsicNormalization::frobenius})
    CHECK(nhsic(a, b, norm) == nhsic(b, a, norm));
}

TEST_CASE("nhsic: non-negative for centered PSD pairs") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CenteredKernel a = centered_rbf(testutil::random_matrix(6, 2, 100 + seed), 1.0);
    CenteredKernel b =
        center(kernel_matrix(testutil::random_matrix(6, 2, 200 + seed), {KernelKind::linear, {}}));
    CHECK(nhsic(a, b, HsicNormalization::raw_trace) >= -1e-10);
  }
}

TEST_CASE("nhsic: invariant under a shared permutation") {
  Mat x = testutil::random_matrix(6, 2, 41);
  Mat y = testutil::random_matrix(6, 2, 42);
  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Mat xp(6, 2), yp(6, 2);
  for (int i = 0; i < 6; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    yp.row(i) = y.row(perm[static_cast<std::size_t>(i)]);
  }
  const double base = nhsic(centered_rbf(x, 1.0), centered_rbf(y, 1.0),
                            HsicNormalization::n_minus_1_squared);
  const double permuted = nhsic(centered_rbf(xp, 1.0), centered_rbf(yp, 1.0),
                                HsicNormalization::n_minus_1_squared);
  CHECK(std::abs(base - permuted) <= 1e-10);
}

TEST_CASE("nhsic: independent draws fall below the permutation null band") {
  const int n = 200;
  Mat x = testutil::random_matrix(n, 1, 51);
  Mat y = testutil::random_matrix(n, 1, 52);
  CenteredKernel kx = centered_rbf(x, 1.0);
  const double actual = nhsic(kx, centered_rbf(y, 1.0), HsicNormalization::frobenius);

  std::vector<double> null_values;
  Rng rng(53);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int rep = 0; rep < 200; ++rep) {
    rng.shuffle(perm);
    Mat yp(n, 1);
    for (int i = 0; i < n; ++i) yp.row(i) = y.row(perm[static_cast<std::size_t>(i)]);
    null_values.push_back(nhsic(kx, centered_rbf(yp, 1.0), HsicNormalization::frobenius));
  }
  std::sort(null_values.begin(), null_values.end());
  const double q95 = null_values[189];  // 95th percentile of 200
  CHECK(actual < q95);
}

TEST_CASE("plugin_mi: product joint is independent") {
  IVec x(4), y(4);
  x << 0, 0, 1, 1;
  y << 0, 1, 0, 1;  // all four cells equal count
  CHECK(std::abs(plugin_mi(x, y)) <= 1e-12);
}

TEST_CASE("plugin_mi: perfectly coupled binary pair gives ln 2") {
  IVec x(4), y(4);
  x << 0, 0, 1, 1;
  y << 0, 0, 1, 1;
  CHECK(plugin_mi(x, y) == doctest::Approx(std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("plugin_mi: self-MI equals empirical entropy") {
  IVec x(7);
  x << 0, 1, 2, 0, 1, 0, 2;
  CHECK(plugin_mi(x, x) == doctest::Approx(empirical_entropy(x)).epsilon(1e-13));
}

TEST_CASE("plugin_mi: bounded by min marginal entropy and non-negative") {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    IVec x(30), y(30);
    for (int i = 0; i < 30; ++i) {
      x(i) = static_cast<int>(rng.next_below(3));
      y(i) = (rng.next_unit() < 0.5) ? x(i) : static_cast<int>(rng.next_below(3));
    }
    const double mi = plugin_mi(x, y);
    CHECK(mi >= -1e-12);
    CHECK(mi <= std::min(empirical_entropy(x), empirical_entropy(y)) + 1e-12);
  }
}

TEST_CASE("dist: absolute difference") {
  CHECK(dist(0.4, 0.4) == 0.0);
  CHECK(dist(0.2, 0.5) == doctest::Approx(0.3));
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const double a = rng.next_normal(), b = rng.next_normal();
    CHECK(dist(a, b) == dist(b, a));
  }
}

TEST_CASE("discretize_column: sqrt-n equal-width bins") {
  Vec col(9);
  col << 0, 1, 2, 3, 4, 5, 6, 7, 8;  // 3 bins of width 8/3
  IVec bins = discretize_column(col);
  CHECK(bins.minCoeff() == 0);
  CHECK(bins.maxCoeff() == 2);
  CHECK(bins(0) == 0);
  CHECK(bins(8) == 2);
  Vec constant = Vec::Ones(5);
  CHECK(discretize_column(constant).maxCoeff() == 0);
}

namespace {

IndependenceConfig small_config(HsicNormalization norm = HsicNormalization::n_minus_1_squared) {
  IndependenceConfig c;
  c.feature_kernel = {KernelKind::rbf, 1.0};
  c.normalization = norm;
  return c;
}

}  // namespace

TEST_CASE("lf_value: alpha = 0 ignores predictions") {
  Mat x = testutil::random_matrix(5, 2, 61);
  IVec labels(5);
  labels << 0, 1, 0, 1, 1;
  CenteredKernel kx = centered_rbf(x, 1.0);
  IndependenceConfig c = small_config();
  c.alpha = 0.0;
  const double a = lf_value(kx, labels, testutil::random_predictions(5, 2, 1), c);
  const double b = lf_value(kx, labels, testutil::random_predictions(5, 2, 2), c);
  CHECK(a == b);
  CHECK(a == doctest::Approx(nhsic(kx, label_kernel(labels, c), c.normalization)));
}

TEST_CASE("lf_value: one-hot predictions under the linear kernel equal the delta-kernel term") {
  Mat x = testutil::random_matrix(6, 3, 62);
  IVec labels(6);
  labels << 0, 1, 2, 0, 1, 2;
  Mat onehot = Mat::Zero(6, 3);
  for (int i = 0; i < 6; ++i) onehot(i, labels(i)) = 1.0;
  CenteredKernel kx = centered_rbf(x, 1.0);
  IndependenceConfig c = small_config();
  c.alpha = 1.0;
  // linear kernel on one-hot rows reproduces the delta kernel on class ids,
  // so both terms coincide and L_F collapses to (1 - alpha) * nHSIC(X, Y)
  const double value = lf_value(kx, labels, onehot, c);
  CHECK(value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lf_value: 5-sample fixture against an explicit HKH-product oracle") {
  Mat x = testutil::random_matrix(5, 2, 63);
  IVec labels(5);
  labels << 0, 1, 1, 0, 1;
  Mat preds = testutil::random_predictions(5, 2, 64);
  IndependenceConfig c = small_config(HsicNormalization::raw_trace);
  c.alpha = 0.75;

  Mat kx_raw = kernel_matrix(x, {KernelKind::rbf, 1.0});
  Mat ky_raw = kernel_matrix(labels.cast<double>(), {KernelKind::delta, std::nullopt});
  Mat kp_raw = kernel_matrix(preds, {KernelKind::linear, std::nullopt});
  const double oracle = naive_trace_product(naive_center(kx_raw), naive_center(ky_raw)) -
                        0.75 * naive_trace_product(naive_center(kx_raw), naive_center(kp_raw));
  CHECK(lf_value(center(kx_raw), labels, preds, c) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("lf_value: delta prediction kernel is rejected") {
  IndependenceConfig c = small_config();
  c.prediction_kernel.kind = KernelKind::delta;
  IVec labels(4);
  labels << 0, 1, 0, 1;
  CenteredKernel kx = centered_rbf(testutil::random_matrix(4, 2, 65), 1.0);
  CHECK_THROWS_WITH_AS(lf_value(kx, labels, testutil::random_predictions(4, 2, 66), c),
                       doctest::Contains("non-differentiable prediction kernel"),
                       PreconditionError);
}

TEST_CASE("lf_grad_predictions: alpha = 0 gives the zero matrix") {
  IndependenceConfig c = small_config();
  c.alpha = 0.0;
  CenteredKernel kx = centered_rbf(testutil::random_matrix(4, 2, 71), 1.0);
  Mat g = lf_grad_predictions(kx, testutil::random_predictions(4, 2, 72), c);
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lf_grad_predictions: finite-difference oracle on a 4x2 prediction matrix") {
  CenteredKernel kx = centered_rbf(testutil::random_matrix(4, 3, 73), 1.0);
  Mat preds = testutil::random_predictions(4, 2, 74);
  for (auto norm : {HsicNormalization::raw_trace, HsicNormalization::n_minus_1_squared,
                    HsicNormalization::frobenius}) {
    IndependenceConfig c = small_config(norm);
    c.alpha = 1.3;
    // value as a function of the raw prediction matrix (no row-sum projection:
    // nhsic itself is defined for any matrix rows)
    auto value = [&](const Mat& p) {
      return -c.alpha * nhsic(kx, center(kernel_matrix(p, {KernelKind::linear, {}})), norm);
    };
    Mat analytic = lf_grad_predictions(kx, preds, c);
    Mat fd(4, 2);
    const double step = 1e-5;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) {
        Mat p = preds;
        p(i, j) = preds(i, j) + step;
        const double up = value(p);
        p(i, j) = preds(i, j) - step;
        const double down = value(p);
        fd(i, j) = (up - down) / (2 * step);
      }
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("lf_grad_predictions: linear in alpha for trace normalizations") {
  CenteredKernel kx = centered_rbf(testutil::random_matrix(5, 2, 75), 1.0);
  Mat preds = testutil::random_predictions(5, 3, 76);
  for (auto norm : {HsicNormalization::raw_trace, HsicNormalization::n_minus_1_squared}) {
    IndependenceConfig c1 = small_config(norm);
    c1.alpha = 0.6;
    IndependenceConfig c2 = small_config(norm);
    c2.alpha = 1.2;
    Mat g1 = lf_grad_predictions(kx, preds, c1);
    Mat g2 = lf_grad_predictions(kx, preds, c2);
    CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("delta_p: empty removal is exactly zero") {
  DatasetTable t = make_synthetic({.n = 20, .m = 3, .class_count = 2, .seed = 81});
  Mat preds = testutil::random_predictions(20, 2, 82);
  IndependenceConfig c = small_config();
  CHECK(delta_p(preds, preds, t, t, c, DependenceMeasure::nhsic) == 0.0);
  CHECK(delta_p(preds, preds, t, t, c, DependenceMeasure::plugin_mi) == 0.0);
}

TEST_CASE("delta_p: removing one copy of each duplicated row leaves the distribution fixed") {
  DatasetTable half = make_synthetic({.n = 12, .m = 3, .class_count = 2, .seed = 83});
  DatasetTable full;
  full.class_count = 2;
  full.features.resize(24, 3);
  full.labels.resize(24);
  full.features << half.features, half.features;
  full.labels << half.labels, half.labels;
  Mat preds_half = testutil::random_predictions(12, 2, 84);
  Mat preds_full(24, 2);
  preds_full << preds_half, preds_half;
  // frobenius-normalized nHSIC is exactly invariant under duplication when
  // the bandwidth is held fixed
  IndependenceConfig c = small_config(HsicNormalization::frobenius);
  const double shift = delta_p(preds_full, preds_half, full, half, c, DependenceMeasure::nhsic);
  CHECK(std::abs(shift) < 1e-9);
}

TEST_CASE("delta_p: top-k removal snapshot on a correlated fixture") {
  // Feature 0 tracks the label; removing the rows with its largest values
  // shears off one class and the dependence of the retained set drops.
  const int n = 40;
  Mat features(n, 2);
  IVec labels(n);
  Rng rng(85);
  for (int i = 0; i < n; ++i) {
    labels(i) = i < n / 2 ? 0 : 1;
    features(i, 0) = (labels(i) == 1 ? 2.0 : 0.0) + 0.1 * rng.next_normal();
    features(i, 1) = rng.next_normal();
  }
  DatasetTable full{features, labels, 2, {}, {}};
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (!(labels(i) == 1 && i >= 30)) keep.push_back(i);  // drop 10 high-value rows
  DatasetTable retained = subset_rows(full, keep);
  Mat preds_full = testutil::random_predictions(n, 2, 86);
  Mat preds_ret(static_cast<Eigen::Index>(keep.size()), 2);
  for (std::size_t i = 0; i < keep.size(); ++i) preds_ret.row(static_cast<Eigen::Index>(i)) = preds_full.row(keep[i]);
  IndependenceConfig c = small_config(HsicNormalization::frobenius);
  const double shift = delta_p(preds_full, preds_ret, full, retained, c, DependenceMeasure::nhsic);
  // regression snapshot: sign and rough magnitude only
  CHECK(std::isfinite(shift));
  CHECK(std::abs(shift) > 1e-4);
}

TEST_CASE("delta_p: empty retained set is an error") {
  DatasetTable t = make_synthetic({.n = 4, .m = 2, .class_count = 2, .seed = 87});
  DatasetTable empty_t;
  empty_t.class_count = 2;
  empty_t.features.resize(0, 2);
  empty_t.labels.resize(0);
  Mat preds = testutil::random_predictions(4, 2, 88);
  Mat none(0, 2);
  CHECK_THROWS_AS(delta_p(preds, none, t, empty_t, small_config()), PreconditionError);
}
