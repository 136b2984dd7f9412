#include "rbeki/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace rbeki::simd {

#if defined(RBEKI_HAVE_AVX2)
const Kernels& avx2_kernels();
#endif

namespace {

Backend resolve() {
  const char* env = std::getenv("RBEKI_SIMD");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
#if defined(RBEKI_HAVE_AVX2)
    if (std::strcmp(env, "avx2") == 0) return Backend::Avx2;
#endif
  }
#if defined(RBEKI_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return Backend::Avx2;
#endif
  return Backend::Scalar;
}

}  // namespace

Backend active_backend() {
  static const Backend b = resolve();
  return b;
}

const char* backend_name() {
  switch (active_backend()) {
    case Backend::Avx2: return "avx2";
    default: return "scalar";
  }
}

const Kernels& kernels() {
#if defined(RBEKI_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

}  // namespace rbeki::simd
