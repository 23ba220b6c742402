// Timing comparison between the OpenMP kernels and their serial reference
// implementations: FIR filtering, CompactConv and RecurrentNet batch
// forward/backward.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "m2d/kernels.hpp"
#include "m2d/model.hpp"
#include "m2d/rng.hpp"
#include "m2d/sigprep.hpp"

using m2d::Parallelism;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double, std::milli>(dt).count();
}

template <class Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e30;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

void row(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s %10.2f %10.2f %9.2fx\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

void bench_fir() {
    const std::size_t channels = 16;
    const std::size_t samples = 75000;
    m2d::Rng rng(7);
    std::vector<double> data(channels * samples);
    for (double& v : data) v = rng.normal();
    const auto taps = m2d::design_bandpass_taps(1.0, 40.0, 125.0);
    std::vector<double> out(data.size());

    const double s = time_best_of(3, [&] {
        m2d::kernels::serial::fir_filter_channels(data.data(), channels, samples, taps,
                                                  out.data());
    });
    const double p = time_best_of(3, [&] {
        m2d::kernels::fir_filter_channels(data.data(), channels, samples, taps, out.data());
    });
    row("fir_filter (16x75000)", s, p);
}

void bench_network(m2d::Architecture arch, const char* fwd_name, const char* bwd_name) {
    m2d::ModelSpec spec;
    spec.arch = arch;
    spec.channels = 16;
    spec.window = 125;
    m2d::Network<float> net(spec);
    net.init_params(11);

    const std::size_t n = 128;
    m2d::Batch<float> batch;
    batch.n = n;
    batch.x.resize(n * 16 * 125);
    batch.labels.resize(n);
    m2d::Rng rng(13);
    for (float& v : batch.x) v = static_cast<float>(rng.normal());
    for (std::size_t i = 0; i < n; ++i) batch.labels[i] = static_cast<int>(rng.below(3));

    std::vector<float> logits(n * 3);
    const double fs = time_best_of(3, [&] { net.logits(batch, logits.data(), Parallelism::Serial); });
    const double fp = time_best_of(3, [&] { net.logits(batch, logits.data(), Parallelism::Parallel); });
    row(fwd_name, fs, fp);

    const std::vector<float> weights(3, 1.0f);
    std::vector<float> grad(net.param_count());
    const double bs = time_best_of(3, [&] {
        net.loss_and_grad(batch, weights, grad.data(), Parallelism::Serial);
    });
    const double bp = time_best_of(3, [&] {
        net.loss_and_grad(batch, weights, grad.data(), Parallelism::Parallel);
    });
    row(bwd_name, bs, bp);
}

}  // namespace

int main() {
    if (const char* env = std::getenv("M2D_THREADS"); env != nullptr && std::atoi(env) > 0)
        m2d::kernels::set_max_threads(std::atoi(env));
    std::printf("%-28s %10s %10s %10s\n", "kernel", "serial_ms", "omp_ms", "speedup");
    bench_fir();
    bench_network(m2d::Architecture::CompactConv, "compact_conv fwd (n=128)",
                  "compact_conv fwd+bwd");
    bench_network(m2d::Architecture::RecurrentNet, "recurrent fwd (n=128)",
                  "recurrent fwd+bwd");
    return 0;
}
