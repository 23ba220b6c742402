#include "m2d/kernels.hpp"

#include <atomic>

namespace m2d::kernels {

namespace {
std::atomic<int> g_max_threads{0};

// Reflected index for positions outside [0, n).
inline std::size_t reflect(long long i, long long n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return static_cast<std::size_t>(i);
}

inline void fir_one_channel(const double* x, std::size_t samples,
                            const std::vector<double>& taps, double* y) {
    const long long n = static_cast<long long>(samples);
    const long long k = static_cast<long long>(taps.size());
    const long long half = k / 2;
    for (long long t = 0; t < n; ++t) {
        double acc = 0.0;
        const long long base = t - half;
        if (base >= 0 && base + k <= n) {
            const double* xp = x + base;
            for (long long j = 0; j < k; ++j) acc += taps[static_cast<std::size_t>(j)] * xp[j];
        } else {
            for (long long j = 0; j < k; ++j)
                acc += taps[static_cast<std::size_t>(j)] * x[reflect(base + j, n)];
        }
        y[t] = acc;
    }
}
}  // namespace

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }
int max_threads() { return g_max_threads.load(); }

void fir_filter_channels(const double* data, std::size_t channels, std::size_t samples,
                         const std::vector<double>& taps, double* out) {
    parallel_batch(channels, [&](std::size_t c) {
        fir_one_channel(data + c * samples, samples, taps, out + c * samples);
    });
}

namespace serial {
// Naive reference: always goes through reflected indexing, no interior
// fast path. Must produce the same result as the parallel version to the
// last bit (same per-tap accumulation order).
void fir_filter_channels(const double* data, std::size_t channels, std::size_t samples,
                         const std::vector<double>& taps, double* out) {
    const long long n = static_cast<long long>(samples);
    const long long k = static_cast<long long>(taps.size());
    const long long half = k / 2;
    for (std::size_t c = 0; c < channels; ++c) {
        const double* x = data + c * samples;
        double* y = out + c * samples;
        for (long long t = 0; t < n; ++t) {
            double acc = 0.0;
            for (long long j = 0; j < k; ++j)
                acc += taps[static_cast<std::size_t>(j)] * x[reflect(t - half + j, n)];
            y[t] = acc;
        }
    }
}
}  // namespace serial

}  // namespace m2d::kernels
