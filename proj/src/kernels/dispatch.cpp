#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mlmlm/kernels.hpp"

namespace mlmlm::kernels {
namespace {

bool cpu_supports(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(MLMLM_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(MLMLM_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* resolve_default() {
  if (const char* env = std::getenv("MLMLM_SIMD"); env != nullptr && std::string(env) != "auto") {
    return &table_for(parse_backend(env));
  }
  const auto backends = available_backends();
  return &table_for(backends.back());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{resolve_default()};
  return slot;
}

}  // namespace

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::scalar};
  for (Backend b : {Backend::avx2, Backend::neon})
    if (cpu_supports(b)) out.push_back(b);
  return out;
}

const KernelTable& table_for(Backend backend) {
  if (!cpu_supports(backend)) {
    throw std::invalid_argument("SIMD backend '" + std::string(backend_name(backend)) +
                                "' is not available on this machine");
  }
  switch (backend) {
#if defined(MLMLM_HAVE_AVX2)
    case Backend::avx2:
      return detail::avx2_table();
#endif
#if defined(MLMLM_HAVE_NEON)
    case Backend::neon:
      return detail::neon_table();
#endif
    default:
      return scalar_table();
  }
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

Backend active_backend() { return active().backend; }

void set_backend(Backend backend) {
  active_slot().store(&table_for(backend), std::memory_order_release);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  if (name == "neon") return Backend::neon;
  throw std::invalid_argument("unknown SIMD backend '" + std::string(name) + "'");
}

}  // namespace mlmlm::kernels
