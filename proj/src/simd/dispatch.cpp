#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace liftcg::simd {

namespace {

bool cpu_has_avx2() {
#if LIFTCG_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("LIFTCG_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return &detail::kScalarTable;
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& scalar_kernels() { return detail::kScalarTable; }

const KernelTable* avx2_kernels() {
#if LIFTCG_HAVE_AVX2
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_relaxed); }

bool select_kernels(Isa isa) {
  const KernelTable* table = isa == Isa::Scalar ? &detail::kScalarTable : avx2_kernels();
  if (table == nullptr) return false;
  active_slot().store(table, std::memory_order_relaxed);
  return true;
}

}  // namespace liftcg::simd
