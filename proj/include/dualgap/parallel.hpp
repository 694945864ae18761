#pragma once

#include <cstddef>

namespace dualgap {

// Number of worker threads for the OpenMP kernels. Resolution order:
// DUALGAP_THREADS environment variable (clamped to [1, hardware]), otherwise
// the OpenMP default. Parallel loops only ever split independent output
// slots, so every kernel is schedule-independent by construction.
int worker_threads();

// Overrides the environment for the current process (used by tests and the
// benchmark to force specific thread counts). count <= 0 restores the default.
void set_worker_threads(int count);

}  // namespace dualgap
