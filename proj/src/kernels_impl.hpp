#pragma once

#include "aprox/kernels.hpp"

namespace aprox::kernels::detail {

extern const KernelTable kScalarTable;

#if defined(APROX_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace aprox::kernels::detail
