#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>

#include "bernlab/common.hpp"
#include "bernlab/simd.hpp"

namespace bernlab::simd {

#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif
#if defined(__aarch64__) && defined(__ARM_NEON)
const Ops& neon_ops();
#endif

namespace {

const Ops* detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &avx2_ops();
#endif
#if defined(__aarch64__) && defined(__ARM_NEON)
  return &neon_ops();
#endif
  return &scalar_ops();
}

const Ops* resolve(const std::string& name) {
  if (name == "auto") return detect();
  if (name == "scalar") return &scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2") {
    if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")))
      throw PreconditionError("simd backend 'avx2' requested but the CPU lacks AVX2/FMA");
    return &avx2_ops();
  }
#endif
#if defined(__aarch64__) && defined(__ARM_NEON)
  if (name == "neon") return &neon_ops();
#endif
  throw PreconditionError("unknown or unsupported simd backend '" + name +
                          "' (expected scalar, avx2, neon or auto)");
}

std::atomic<const Ops*> g_active{nullptr};
std::once_flag g_init;

void init_from_env() {
  const char* env = std::getenv("BERNSTEIN_LAB_SIMD");
  g_active.store(resolve(env && *env ? env : "auto"));
}

}  // namespace

const Ops& ops() {
  std::call_once(g_init, init_from_env);
  return *g_active.load();
}

void force_backend(const std::string& name) {
  std::call_once(g_init, init_from_env);
  g_active.store(resolve(name));
}

std::string active_backend() { return ops().name; }

}  // namespace bernlab::simd
