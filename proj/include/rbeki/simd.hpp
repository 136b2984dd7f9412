#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner kernels with a scalar reference implementation and an
// AVX2 variant selected once at runtime (env RBEKI_SIMD=scalar|avx2 forces a
// backend).  Elementwise kernels are bit-identical across backends; reductions
// differ only in summation order.
namespace rbeki::simd {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
const char* backend_name();

enum class Rbf { Gaussian, Multiquadric, InverseMultiquadric };

struct Kernels {
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out[i] = sum_d (q[d] - centers[d*n + i])^2   (dimension-major centers)
  void (*squared_distance)(const double* centers, std::size_t n, std::size_t dim,
                           const double* q, double* out);
  // out[i] = phi(eps[i]^2 * r2[i]): Gaussian exp(-t), MQ sqrt(1+t), IMQ 1/sqrt(1+t)
  void (*rbf_profile)(Rbf kind, const double* eps, const double* r2, double* out,
                      std::size_t n);
};

const Kernels& kernels();          // dispatched backend
const Kernels& scalar_kernels();   // reference, for equivalence tests

inline void axpy(double a, const double* x, double* y, std::size_t n) {
  kernels().axpy(a, x, y, n);
}
inline double dot(const double* x, const double* y, std::size_t n) {
  return kernels().dot(x, y, n);
}
inline void squared_distance(const double* centers, std::size_t n, std::size_t dim,
                             const double* q, double* out) {
  kernels().squared_distance(centers, n, dim, q, out);
}
inline void rbf_profile(Rbf kind, const double* eps, const double* r2, double* out,
                        std::size_t n) {
  kernels().rbf_profile(kind, eps, r2, out, n);
}

}  // namespace rbeki::simd
