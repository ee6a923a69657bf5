#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace vgdf {

// Training allocates many same-sized activation matrices of a few hundred KB.
// glibc serves those with mmap and trims the heap after every free, which
// costs a page fault per touch; keeping them on a never-trimmed heap makes
// small-network training several times faster.
inline void keep_heap_warm() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace vgdf
