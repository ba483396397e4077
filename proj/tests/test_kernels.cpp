#include <doctest.h>

#include <cmath>
#include <random>

#include "mlmlm/kernels.hpp"

using namespace mlmlm;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Restores the process-wide backend when a test switches it.
struct BackendGuard {
  kernels::Backend saved = kernels::active_backend();
  ~BackendGuard() { kernels::set_backend(saved); }
};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar backend is always available") {
    const auto backends = kernels::available_backends();
    REQUIRE(!backends.empty());
    CHECK(backends.front() == kernels::Backend::scalar);
  }

  TEST_CASE("backend names round-trip") {
    for (auto b : kernels::available_backends()) CHECK(kernels::parse_backend(kernels::backend_name(b)) == b);
    CHECK_THROWS(kernels::parse_backend("sse9"));
  }

  TEST_CASE("scalar kernels on small exact inputs") {
    const auto& k = kernels::scalar_table();
    const double a[3] = {1, 2, 3};
    const double b[3] = {4, 6, 3};
    CHECK(k.squared_l2(a, b, 3) == 25.0);
    CHECK(k.dot(a, b, 3) == 25.0);
    double y[3] = {1, 1, 1};
    k.axpy(2.0, a, y, 3);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 5.0);
    CHECK(y[2] == 7.0);
  }

  TEST_CASE("every backend agrees with the scalar reference") {
    std::mt19937_64 rng(11);
    const auto& ref = kernels::scalar_table();
    for (auto backend : kernels::available_backends()) {
      const auto& k = kernels::table_for(backend);
      CAPTURE(kernels::backend_name(backend));
      // lengths straddle every vector width and tail size
      for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 1001u}) {
        CAPTURE(n);
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]) + (a[i] - b[i]) * (a[i] - b[i]);
        const double tol = 1e-14 * (mag + 1.0);
        CHECK(std::abs(k.squared_l2(a.data(), b.data(), n) - ref.squared_l2(a.data(), b.data(), n)) <= tol);
        CHECK(std::abs(k.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol);

        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        k.axpy(-1.75, a.data(), y1.data(), n);
        ref.axpy(-1.75, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14 * (std::abs(y2[i]) + 10.0));
      }
    }
  }

  TEST_CASE("kernels are bitwise repeatable") {
    std::mt19937_64 rng(12);
    const auto a = random_vec(rng, 257);
    const auto b = random_vec(rng, 257);
    for (auto backend : kernels::available_backends()) {
      const auto& k = kernels::table_for(backend);
      const double d1 = k.dot(a.data(), b.data(), a.size());
      const double d2 = k.dot(a.data(), b.data(), a.size());
      CHECK(d1 == d2);
    }
  }

  TEST_CASE("set_backend switches the active table") {
    BackendGuard guard;
    for (auto backend : kernels::available_backends()) {
      kernels::set_backend(backend);
      CHECK(kernels::active_backend() == backend);
      CHECK(kernels::active().backend == backend);
    }
  }
}
