#include "rbeki/simd.hpp"

#include <cmath>

namespace rbeki::simd {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void sqdist_scalar(const double* centers, std::size_t n, std::size_t dim,
                   const double* q, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double qd = q[d];
    const double* zd = centers + d * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = qd - zd[i];
      out[i] += diff * diff;
    }
  }
}

void rbf_profile_scalar(Rbf kind, const double* eps, const double* r2, double* out,
                        std::size_t n) {
  switch (kind) {
    case Rbf::Gaussian:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(-((eps[i] * eps[i]) * r2[i]));
      break;
    case Rbf::Multiquadric:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(1.0 + (eps[i] * eps[i]) * r2[i]);
      break;
    case Rbf::InverseMultiquadric:
      for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / std::sqrt(1.0 + (eps[i] * eps[i]) * r2[i]);
      break;
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{axpy_scalar, dot_scalar, sqdist_scalar, rbf_profile_scalar};
  return k;
}

}  // namespace rbeki::simd
