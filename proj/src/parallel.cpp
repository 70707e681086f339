#include "rfem/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rfem {

namespace {

int default_threads()
{
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("RFEM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n < 1 ? 1 : n;
}

std::atomic<int> g_override{0};

} // namespace

int thread_count()
{
    const int n = g_override.load(std::memory_order_relaxed);
    if (n > 0) return n;
    static const int def = default_threads();
    return def;
}

void set_thread_count(int n) { g_override.store(n, std::memory_order_relaxed); }

} // namespace rfem
