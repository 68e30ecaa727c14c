#pragma once

#include "liftcg/simd/kernels.hpp"

namespace liftcg::simd::detail {

extern const KernelTable kScalarTable;

#if LIFTCG_HAVE_AVX2
extern const KernelTable kAvx2Table;
#endif

}  // namespace liftcg::simd::detail
