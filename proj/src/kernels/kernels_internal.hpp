#pragma once

#include "hotda/kernels.hpp"

namespace hotda::kernels::detail {

const KernelTable& scalar_table() noexcept;
#if defined(HOTDA_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

} // namespace hotda::kernels::detail
