#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rbeki/simd.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace rbeki::simd;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(eng);
  return v;
}

}  // namespace

TEST_CASE("dispatch reports a valid backend") {
  const Backend b = active_backend();
  CHECK((b == Backend::Scalar || b == Backend::Avx2));
  const std::string name = backend_name();
  CHECK((name == "scalar" || name == "avx2"));
}

TEST_CASE("axpy matches scalar reference bit for bit") {
  for (std::size_t n : {1u, 7u, 8u, 33u, 1000u}) {
    auto x = random_vec(n, 11 + n);
    auto y = random_vec(n, 17 + n);
    auto y_ref = y;
    kernels().axpy(0.37, x.data(), y.data(), n);
    scalar_kernels().axpy(0.37, x.data(), y_ref.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == y_ref[i]);
  }
}

TEST_CASE("dot matches scalar reference to roundoff") {
  for (std::size_t n : {1u, 5u, 64u, 257u}) {
    auto x = random_vec(n, 3 + n);
    auto y = random_vec(n, 5 + n);
    const double d = kernels().dot(x.data(), y.data(), n);
    const double d_ref = scalar_kernels().dot(x.data(), y.data(), n);
    CHECK(d == doctest::Approx(d_ref).epsilon(1e-13));
  }
}

TEST_CASE("squared_distance matches scalar reference bit for bit") {
  for (std::size_t n : {1u, 9u, 40u}) {
    for (std::size_t dim : {1u, 2u, 3u}) {
      auto centers = random_vec(n * dim, 23 + n + dim);
      auto q = random_vec(dim, 29 + dim);
      std::vector<double> out(n), out_ref(n);
      kernels().squared_distance(centers.data(), n, dim, q.data(), out.data());
      scalar_kernels().squared_distance(centers.data(), n, dim, q.data(), out_ref.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == out_ref[i]);
    }
  }
}

TEST_CASE("squared_distance hand value") {
  // centers dimension-major: two centers in 2-D, (0,0) and (3,4); q = (0,0)
  const double centers[4] = {0.0, 3.0, 0.0, 4.0};
  const double q[2] = {0.0, 0.0};
  double out[2];
  scalar_kernels().squared_distance(centers, 2, 2, q, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 25.0);
}

TEST_CASE("rbf_profile values and backend equivalence") {
  // profile argument is t = eps^2 r^2
  const double eps[3] = {1.0, 1.0, 2.0};
  const double r2[3] = {0.0, 1.0, 1.0};
  double out[3];

  scalar_kernels().rbf_profile(Rbf::Multiquadric, eps, r2, out, 3);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(std::sqrt(2.0)));   // sqrt(1 + 1)
  CHECK(out[2] == doctest::Approx(std::sqrt(5.0)));   // sqrt(1 + 4)

  scalar_kernels().rbf_profile(Rbf::InverseMultiquadric, eps, r2, out, 3);
  CHECK(out[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(out[2] == doctest::Approx(1.0 / std::sqrt(5.0)));

  scalar_kernels().rbf_profile(Rbf::Gaussian, eps, r2, out, 3);
  CHECK(out[1] == doctest::Approx(std::exp(-1.0)));

  for (Rbf kind : {Rbf::Gaussian, Rbf::Multiquadric, Rbf::InverseMultiquadric}) {
    const std::size_t n = 37;
    auto e = random_vec(n, 41);
    auto r = random_vec(n, 43);
    for (auto& v : e) v = std::abs(v) + 0.1;
    for (auto& v : r) v = std::abs(v);
    std::vector<double> a(n), b(n);
    kernels().rbf_profile(kind, e.data(), r.data(), a.data(), n);
    scalar_kernels().rbf_profile(kind, e.data(), r.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == b[i]);
  }
}
