#include <cstring>

#include <doctest.h>

#include "m2d/kernels.hpp"
#include "m2d/model.hpp"
#include "m2d/rng.hpp"
#include "m2d/sigprep.hpp"

using namespace m2d;

TEST_SUITE_BEGIN("kernels");

TEST_CASE("fir kernels agree bit for bit with the serial reference") {
    Rng rng(44);
    const std::size_t channels = 7;
    const std::size_t samples = 2000;
    std::vector<double> data(channels * samples);
    for (double& v : data) v = rng.normal();
    const auto taps = design_bandpass_taps(1.0, 40.0, 125.0);
    REQUIRE(taps.size() <= samples);

    std::vector<double> a(data.size());
    std::vector<double> b(data.size());
    kernels::fir_filter_channels(data.data(), channels, samples, taps, a.data());
    kernels::serial::fir_filter_channels(data.data(), channels, samples, taps, b.data());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("fir result does not depend on the thread cap") {
    Rng rng(45);
    const std::size_t channels = 5;
    const std::size_t samples = 1500;
    std::vector<double> data(channels * samples);
    for (double& v : data) v = rng.normal();
    const auto taps = design_bandpass_taps(2.0, 30.0, 125.0);

    std::vector<double> a(data.size());
    std::vector<double> b(data.size());
    kernels::set_max_threads(1);
    kernels::fir_filter_channels(data.data(), channels, samples, taps, a.data());
    kernels::set_max_threads(0);
    kernels::fir_filter_channels(data.data(), channels, samples, taps, b.data());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("network batch passes agree between parallel and serial paths") {
    for (const Architecture arch : {Architecture::CompactConv, Architecture::RecurrentNet}) {
        CAPTURE(architecture_name(arch));
        ModelSpec spec;
        spec.arch = arch;
        spec.channels = 6;
        spec.window = 64;
        spec.hidden = 16;
        Network<float> net(spec);
        net.init_params(7);

        Rng rng(46);
        Batch<float> batch;
        batch.n = 17;  // deliberately not a multiple of the thread count
        batch.x.resize(batch.n * 6 * 64);
        batch.labels.resize(batch.n);
        for (float& v : batch.x) v = static_cast<float>(rng.normal());
        for (auto& l : batch.labels) l = static_cast<int>(rng.below(3));

        std::vector<float> logits_p(batch.n * 3);
        std::vector<float> logits_s(batch.n * 3);
        net.logits(batch, logits_p.data(), Parallelism::Parallel);
        net.logits(batch, logits_s.data(), Parallelism::Serial);
        CHECK(std::memcmp(logits_p.data(), logits_s.data(),
                          logits_p.size() * sizeof(float)) == 0);

        const std::vector<float> weights(3, 1.0f);
        std::vector<float> grad_p(net.param_count());
        std::vector<float> grad_s(net.param_count());
        const float loss_p = net.loss_and_grad(batch, weights, grad_p.data(), Parallelism::Parallel);
        const float loss_s = net.loss_and_grad(batch, weights, grad_s.data(), Parallelism::Serial);
        CHECK(loss_p == loss_s);
        CHECK(std::memcmp(grad_p.data(), grad_s.data(), grad_p.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("reduce_rows sums in index order") {
    std::vector<double> parts = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};  // 3 rows x 2 cols
    std::vector<double> out(2);
    kernels::reduce_rows(parts, 3, 2, out.data());
    CHECK(out[0] == 9.0);
    CHECK(out[1] == 12.0);
}

TEST_SUITE_END();
