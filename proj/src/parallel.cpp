#include "dualgap/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace dualgap {

namespace {
std::atomic<int> g_override{0};

int env_threads() {
    const char* v = std::getenv("DUALGAP_THREADS");
    if (v == nullptr || *v == '\0') return 0;
    char* end = nullptr;
    long n = std::strtol(v, &end, 10);
    if (end == v || n <= 0) return 0;
    return static_cast<int>(n);
}
}  // namespace

int worker_threads() {
    int n = g_override.load(std::memory_order_relaxed);
    if (n > 0) return n;  // test override may oversubscribe on purpose
    int hw = omp_get_max_threads();
    n = env_threads();
    if (n <= 0) return hw;
    return n < hw ? n : hw;
}

void set_worker_threads(int count) {
    g_override.store(count, std::memory_order_relaxed);
}

}  // namespace dualgap
