#pragma once

// Data-parallel inner loops shared by the distance and regression code.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into separate
// translation units and picked once per process. Within one backend each
// kernel uses a fixed accumulation order, so results are bitwise repeatable;
// across backends they agree to rounding only.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mlmlm::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  double (*squared_l2)(const double* a, const double* b, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();

/// Backends compiled into this binary and supported by the running CPU.
std::vector<Backend> available_backends();

/// Table for `backend`; throws std::invalid_argument when unavailable.
const KernelTable& table_for(Backend backend);

/// The process-wide active table. The first call resolves it from the
/// MLMLM_SIMD environment variable (scalar|avx2|neon|auto) and CPU features.
const KernelTable& active();
Backend active_backend();
void set_backend(Backend backend);

std::string_view backend_name(Backend backend);
Backend parse_backend(std::string_view name);

inline double squared_l2(std::span<const double> a, std::span<const double> b) {
  return active().squared_l2(a.data(), b.data(), a.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

namespace detail {
#if defined(MLMLM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(MLMLM_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace mlmlm::kernels
