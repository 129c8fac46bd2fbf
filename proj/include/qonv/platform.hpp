#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace qonv {

/// Keeps large tape buffers on the heap instead of fresh mmaps per iteration;
/// glibc otherwise returns them to the OS every step and page-faults them back.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

} // namespace qonv
