#pragma once

namespace rfem {

/// Number of threads the OpenMP kernels may use. Reads RFEM_THREADS once
/// (capping the OpenMP default); always 1 when built without OpenMP.
int thread_count();

/// Override the thread count for this process (0 restores the default).
/// Used by the benchmark driver to compare serial and parallel runs.
void set_thread_count(int n);

} // namespace rfem
