#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace m2d::kernels {

// Worker cap for all OpenMP loops. 0 means "use the OpenMP default".
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n) with OpenMP. fn must only write state owned
// by index i; results are then independent of the thread count.
template <class F>
void parallel_batch(std::size_t n, F&& fn) {
#ifdef _OPENMP
    const int cap = max_threads();
#pragma omp parallel for schedule(static) num_threads(cap > 0 ? cap : omp_get_max_threads())
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        fn(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

// Serial reference for parallel_batch; kept for equality tests and the
// kernel benchmark.
template <class F>
void serial_batch(std::size_t n, F&& fn) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

// Sums per-item buffers into out in index order. The fixed order keeps
// accumulated gradients bit-identical across thread counts.
template <class T>
void reduce_rows(const std::vector<T>& parts, std::size_t rows, std::size_t cols, T* out) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = T(0);
    for (std::size_t i = 0; i < rows; ++i) {
        const T* row = parts.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
    }
}

// Symmetric-FIR convolution of every channel with reflection padding of
// half the kernel length at both ends; output length equals input length.
// data and out are channel-major C x T. OpenMP over channels.
void fir_filter_channels(const double* data, std::size_t channels, std::size_t samples,
                         const std::vector<double>& taps, double* out);

namespace serial {
// Plain-loop reference implementation of fir_filter_channels.
void fir_filter_channels(const double* data, std::size_t channels, std::size_t samples,
                         const std::vector<double>& taps, double* out);
}  // namespace serial

}  // namespace m2d::kernels
