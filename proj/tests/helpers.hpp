#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "dui/common.hpp"

namespace testutil {

using dui::Mat;
using dui::Vec;

/// Central finite differences of a scalar function; the independent oracle
/// for every analytic gradient in the suite.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double step = 1e-5) {
  Vec g(x.size());
  Vec p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = p(i);
    p(i) = orig + step;
    const double fp = f(p);
    p(i) = orig - step;
    const double fm = f(p);
    p(i) = orig;
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Plain-loop matrix product, independent of Eigen's evaluation paths.
inline Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat c = Mat::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

/// HKH with an explicit H = I - (1/n) 1 1^T, by naive multiplication.
inline Mat naive_center(const Mat& k) {
  const Eigen::Index n = k.rows();
  Mat h = Mat::Identity(n, n);
  h.array() -= 1.0 / static_cast<double>(n);
  return naive_matmul(naive_matmul(h, k), h);
}

inline double naive_trace_product(const Mat& a, const Mat& b) {
  double t = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k) t += a(i, k) * b(k, i);
  return t;
}

inline Mat random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                         double scale = 1.0) {
  dui::Rng rng(seed);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.next_normal();
  return m;
}

inline Vec random_vector(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  dui::Rng rng(seed);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.next_normal();
  return v;
}

/// Rows normalized to the simplex, for synthetic prediction matrices.
inline Mat random_predictions(Eigen::Index n, Eigen::Index c, std::uint64_t seed) {
  dui::Rng rng(seed);
  Mat p(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      p(i, j) = 0.05 + rng.next_unit();
      sum += p(i, j);
    }
    p.row(i) /= sum;
  }
  return p;
}

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("dui_test_" + tag);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

inline void append_u32_be(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>(v & 0xFF));
}

/// Minimal IDX pair writer for fixtures.
inline void write_idx_pair(const std::string& images_path, const std::string& labels_path,
                           const std::vector<std::vector<unsigned char>>& images,
                           const std::vector<unsigned char>& labels, std::uint32_t rows,
                           std::uint32_t cols) {
  std::string img;
  append_u32_be(img, 0x00000803u);
  append_u32_be(img, static_cast<std::uint32_t>(images.size()));
  append_u32_be(img, rows);
  append_u32_be(img, cols);
  for (const auto& im : images)
    for (unsigned char b : im) img.push_back(static_cast<char>(b));
  write_file(images_path, img);

  std::string lab;
  append_u32_be(lab, 0x00000801u);
  append_u32_be(lab, static_cast<std::uint32_t>(labels.size()));
  for (unsigned char b : labels) lab.push_back(static_cast<char>(b));
  write_file(labels_path, lab);
}

}  // namespace testutil
