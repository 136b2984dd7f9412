#include "rbeki/simd.hpp"

#include <immintrin.h>

#include <cmath>

// AVX2 variants of the inner kernels.  No FMA is used so that every
// elementwise result rounds exactly like the scalar reference.
namespace rbeki::simd {
namespace {

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void sqdist_avx2(const double* centers, std::size_t n, std::size_t dim,
                 const double* q, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_setzero_pd());
  for (; i < n; ++i) out[i] = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double qd = q[d];
    const __m256d vq = _mm256_set1_pd(qd);
    const double* zd = centers + d * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d diff = _mm256_sub_pd(vq, _mm256_loadu_pd(zd + j));
      __m256d vo = _mm256_loadu_pd(out + j);
      vo = _mm256_add_pd(vo, _mm256_mul_pd(diff, diff));
      _mm256_storeu_pd(out + j, vo);
    }
    for (; j < n; ++j) {
      const double diff = qd - zd[j];
      out[j] += diff * diff;
    }
  }
}

// t_i = eps_i^2 * r2_i computed vectorized; the transcendental for the
// Gaussian stays on std::exp per element to keep backends bit-identical.
void rbf_profile_avx2(Rbf kind, const double* eps, const double* r2, double* out,
                      std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ve = _mm256_loadu_pd(eps + i);
    const __m256d t = _mm256_mul_pd(_mm256_mul_pd(ve, ve), _mm256_loadu_pd(r2 + i));
    switch (kind) {
      case Rbf::Gaussian: {
        alignas(32) double tt[4];
        _mm256_store_pd(tt, t);
        out[i + 0] = std::exp(-tt[0]);
        out[i + 1] = std::exp(-tt[1]);
        out[i + 2] = std::exp(-tt[2]);
        out[i + 3] = std::exp(-tt[3]);
        break;
      }
      case Rbf::Multiquadric:
        _mm256_storeu_pd(out + i, _mm256_sqrt_pd(_mm256_add_pd(one, t)));
        break;
      case Rbf::InverseMultiquadric:
        _mm256_storeu_pd(out + i, _mm256_div_pd(one, _mm256_sqrt_pd(_mm256_add_pd(one, t))));
        break;
    }
  }
  for (; i < n; ++i) {
    const double t = (eps[i] * eps[i]) * r2[i];
    switch (kind) {
      case Rbf::Gaussian: out[i] = std::exp(-t); break;
      case Rbf::Multiquadric: out[i] = std::sqrt(1.0 + t); break;
      case Rbf::InverseMultiquadric: out[i] = 1.0 / std::sqrt(1.0 + t); break;
    }
  }
}

}  // namespace

const Kernels& avx2_kernels() {
  static const Kernels k{axpy_avx2, dot_avx2, sqdist_avx2, rbf_profile_avx2};
  return k;
}

}  // namespace rbeki::simd
