#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace dui {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using IVec = Eigen::VectorXi;
using SpMat = Eigen::SparseMatrix<double>;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files (IDX, .content/.cites, CSV, request/model files).
class FormatError : public Error {
public:
  using Error::Error;
};

/// Invalid experiment configuration (unknown key, bad value, missing path).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Caller violated an operation's contract (bad shape, empty index set, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Numerical failure inside a solver (divergence, indefiniteness).
class SolverError : public Error {
public:
  using Error::Error;
};

/// Training diverged; carries the last finite loss seen.
class TrainingError : public Error {
public:
  TrainingError(const std::string& msg, double last_finite_loss)
      : Error(msg), last_finite_loss(last_finite_loss) {}
  double last_finite_loss;
};

// ---------------------------------------------------------------------------
// Deterministic PRNG (splitmix64). All randomness in the library flows
// through this so results are reproducible across platforms, unlike
// std::shuffle / std::uniform_int_distribution whose draws are
// implementation-defined.
// ---------------------------------------------------------------------------
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Unbiased draw in [0, bound) via rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw PreconditionError("next_below: bound must be positive");
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller (no state caching, fully deterministic).
  double next_normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from [0, n), returned sorted.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw PreconditionError("sample_without_replacement: k out of range");
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates: the first k slots end up holding the sample.
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(next_below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit content digests, used for dataset/request/model provenance.
// ---------------------------------------------------------------------------
class Digest {
public:
  Digest& bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= static_cast<std::uint64_t>(p[i]);
      h_ *= 1099511628211ULL;
    }
    return *this;
  }
  Digest& u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    return bytes(b, 8);
  }
  Digest& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  Digest& f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    return u64(bits);
  }
  Digest& str(const std::string& s) {
    u64(s.size());
    return bytes(s.data(), s.size());
  }
  Digest& mat(const Mat& m) {
    i64(m.rows());
    i64(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) f64(m(i, j));
    return *this;
  }
  Digest& ivec(const IVec& v) {
    i64(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) i64(v(i));
    return *this;
  }
  std::uint64_t value() const { return h_; }
  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = h_;
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return out;
  }

private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Relative distance between vectors: ||a-b|| / max(||b||, floor).
inline double rel_error(const Vec& a, const Vec& b, double floor_norm = 1e-12) {
  return (a - b).norm() / std::max(b.norm(), floor_norm);
}

}  // namespace dui
