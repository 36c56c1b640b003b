#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tegee/errors.hpp"

namespace tegee {

// Counter-style splitmix64 generator. The u64 stream is platform independent;
// all derived draws are pure arithmetic on that stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller; consumes exactly two uniforms per draw, no cached spare.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

 private:
  std::uint64_t state_;
};

// Derives an independent stream for a sub-computation.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng r(seed ^ (0x51e03f9bc9788a67ull * (stream + 1)));
  return r.next_u64();
}

// Dense row-major matrix of doubles. Vectors are 1xN, scalars 1x1.
struct Tensor {
  std::vector<std::size_t> shape;  // always {rows, cols}
  std::vector<double> data;

  Tensor() : shape{0, 0} {}
  Tensor(std::size_t r, std::size_t c) : shape{r, c}, data(r * c, 0.0) {}

  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c); }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }

  static Tensor gaussian(std::size_t r, std::size_t c, double stddev, Rng& rng) {
    Tensor t(r, c);
    for (auto& x : t.data) x = stddev * rng.gaussian();
    return t;
  }

  std::size_t rows() const { return shape[0]; }
  std::size_t cols() const { return shape[1]; }
  std::size_t size() const { return data.size(); }

  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool operator==(const Tensor& o) const {
    return shape == o.shape && data == o.data;
  }
};

inline void check_finite(const Tensor& t, const char* where) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw numeric_error(std::string("non-finite value in ") + where);
}

// C = A * B, inner sum accumulated in ascending k order for every entry.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw dim_error("matmul: inner dimensions disagree (" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
  Tensor c(a.rows(), b.cols());
  const std::size_t n = a.cols(), p = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a.at(i, k);
      const double* brow = &b.data[k * p];
      double* crow = &c.data[i * p];
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  check_finite(c, "matmul");
  return c;
}

// C = A * B^T.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw dim_error("matmul_nt: inner dimensions disagree");
  Tensor c(a.rows(), b.rows());
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a.at(i, k) * b.at(j, k);
      c.at(i, j) = s;
    }
  check_finite(c, "matmul_nt");
  return c;
}

// C = A^T * B.
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw dim_error("matmul_tn: inner dimensions disagree");
  Tensor c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a.at(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) c.at(i, j) += aki * b.at(k, j);
    }
  check_finite(c, "matmul_tn");
  return c;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw dim_error("add: shape mismatch");
  Tensor c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  check_finite(c, "add");
  return c;
}

inline Tensor scale(const Tensor& a, double s) {
  Tensor c = a;
  for (auto& v : c.data) v *= s;
  check_finite(c, "scale");
  return c;
}

inline double frobenius_distance(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw dim_error("frobenius_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// FNV-1a over arbitrary bytes; used for parameter checksums and text hashing.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t checksum(const Tensor& t, std::uint64_t h = 0xcbf29ce484222325ull) {
  h = fnv1a64(t.shape.data(), t.shape.size() * sizeof(std::size_t), h);
  return fnv1a64(t.data.data(), t.data.size() * sizeof(double), h);
}

}  // namespace tegee
