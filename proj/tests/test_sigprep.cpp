#include <cmath>

#include <doctest.h>

#include "m2d/errors.hpp"
#include "m2d/rng.hpp"
#include "m2d/sigprep.hpp"

using namespace m2d;

namespace {
constexpr double kPi = 3.14159265358979323846;

EegRecording make_recording(std::size_t channels, std::size_t samples, double fs = 125.0) {
    EegRecording rec;
    rec.fs = fs;
    for (std::size_t c = 0; c < channels; ++c) rec.channel_names.push_back("ch" + std::to_string(c));
    rec.timestamps.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) rec.timestamps[i] = static_cast<double>(i) / fs;
    rec.data.assign(channels * samples, 0.0);
    return rec;
}

double rms(const double* x, std::size_t n, std::size_t skip = 0) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = skip; i + skip < n; ++i) {
        acc += x[i] * x[i];
        ++count;
    }
    return std::sqrt(acc / static_cast<double>(count));
}

KinematicTrack ramp_track() {
    KinematicTrack t;
    for (int i = 0; i <= 100; ++i) {
        t.timestamps.push_back(i * 0.01);
        t.vx.push_back(2.0 + 0.02 * i);  // v from 2 to 4
        t.vy.push_back(0.0);
        t.psi.push_back(0.0);
        t.psi_dot.push_back(0.1);
    }
    return t;
}
}  // namespace

TEST_SUITE_BEGIN("sigprep");

TEST_CASE("resampling hits track samples exactly and interpolates midpoints") {
    const KinematicTrack track = ramp_track();
    const auto at_sample = resample_to_eeg(track, {0.5});
    CHECK(at_sample.v[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(at_sample.psi_dot[0] == doctest::Approx(0.1));

    // midpoint between v=2 (t=0) and v=2.02 (t=0.01) -> 2.01; and a
    // two-sample v=2..4 midpoint via a coarse track
    KinematicTrack coarse;
    coarse.timestamps = {0.0, 1.0};
    coarse.vx = {2.0, 4.0};
    coarse.vy = {0.0, 0.0};
    coarse.psi = {0.0, 0.0};
    coarse.psi_dot = {0.0, 0.0};
    const auto mid = resample_to_eeg(coarse, {0.5});
    CHECK(mid.v[0] == doctest::Approx(3.0));
}

TEST_CASE("psi interpolates across the +-pi seam") {
    KinematicTrack t;
    t.timestamps = {0.0, 1.0};
    t.vx = {1.0, 1.0};
    t.vy = {0.0, 0.0};
    t.psi = {3.1, -3.1};
    t.psi_dot = {0.0, 0.0};
    const auto mid = resample_to_eeg(t, {0.5});
    // the short arc passes through pi, not through 0
    CHECK(std::abs(mid.psi[0]) > 3.1);
}

TEST_CASE("resampling is exact on affine signals") {
    KinematicTrack t;
    for (int i = 0; i <= 200; ++i) {
        t.timestamps.push_back(i * 0.01);
        t.vx.push_back(0.7 * (i * 0.01) + 0.3);
        t.vy.push_back(0.0);
        t.psi.push_back(0.0);
        t.psi_dot.push_back(-0.2 * (i * 0.01) + 0.05);
    }
    Rng rng(9);
    std::vector<double> queries;
    for (int i = 0; i < 100; ++i) queries.push_back(rng.uniform(0.0, 2.0));
    std::sort(queries.begin(), queries.end());
    const auto out = resample_to_eeg(t, queries);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        CHECK(out.v[i] == doctest::Approx(0.7 * queries[i] + 0.3).epsilon(1e-9));
        CHECK(out.psi_dot[i] == doctest::Approx(-0.2 * queries[i] + 0.05).epsilon(1e-9));
    }
}

TEST_CASE("coverage error beyond one second of the track") {
    const KinematicTrack track = ramp_track();  // covers [0, 1]
    CHECK_THROWS_AS(resample_to_eeg(track, {2.5}), Error);
    CHECK_NOTHROW(resample_to_eeg(track, {1.5}));  // clamped edge
}

TEST_CASE("zscore values, idempotence and degenerate channel") {
    EegRecording rec = make_recording(1, 3);
    rec.data = {1.0, 2.0, 3.0};
    const auto z = zscore(rec);
    CHECK(z.data[0] == doctest::Approx(-1.2247448714).epsilon(1e-9));
    CHECK(z.data[1] == doctest::Approx(0.0));
    CHECK(z.data[2] == doctest::Approx(1.2247448714).epsilon(1e-9));

    const auto zz = zscore(z);
    for (std::size_t i = 0; i < z.data.size(); ++i)
        CHECK(zz.data[i] == doctest::Approx(z.data[i]).epsilon(1e-9));

    EegRecording flat = make_recording(2, 16);
    for (std::size_t i = 0; i < 16; ++i) flat.channel(0)[i] = std::sin(0.3 * i);
    // channel 1 stays constant
    CHECK_THROWS_WITH_AS(zscore(flat), doctest::Contains("ch1"), Error);
}

TEST_CASE("zscore normalises every channel to mean 0 and sd 1") {
    Rng rng(10);
    EegRecording rec = make_recording(4, 500);
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < 500; ++i)
            rec.channel(c)[i] = rng.normal(3.0 * static_cast<double>(c), 2.0 + static_cast<double>(c));
    const auto z = zscore(rec);
    for (std::size_t c = 0; c < 4; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 500; ++i) mean += z.channel(c)[i];
        mean /= 500.0;
        double var = 0.0;
        for (std::size_t i = 0; i < 500; ++i)
            var += (z.channel(c)[i] - mean) * (z.channel(c)[i] - mean);
        var /= 500.0;
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("bandpass keeps 10 Hz, rejects 50 Hz and DC") {
    const std::size_t n = 1250;  // 10 s
    const std::size_t kernel_half = design_bandpass_taps(1.0, 40.0, 125.0).size() / 2;

    EegRecording rec = make_recording(3, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rec.timestamps[i];
        rec.channel(0)[i] = std::sin(2.0 * kPi * 10.0 * t);
        rec.channel(1)[i] = std::sin(2.0 * kPi * 50.0 * t);
        rec.channel(2)[i] = 1.0;
    }
    const auto out = bandpass(rec, 1.0, 40.0);
    // Skip the edge-transient region when measuring.
    const double in_rms = rms(rec.channel(0), n, kernel_half);
    CHECK(rms(out.channel(0), n, kernel_half) == doctest::Approx(in_rms).epsilon(0.10));
    CHECK(rms(out.channel(1), n, kernel_half) <= 0.10 * rms(rec.channel(1), n, kernel_half));
    CHECK(rms(out.channel(2), n, kernel_half) <= 0.01);
}

TEST_CASE("bandpass is linear") {
    Rng rng(11);
    const std::size_t n = 1000;
    EegRecording x = make_recording(1, n);
    EegRecording y = make_recording(1, n);
    EegRecording mix = make_recording(1, n);
    const double alpha = 0.7;
    const double beta = -1.3;
    for (std::size_t i = 0; i < n; ++i) {
        x.data[i] = rng.normal();
        y.data[i] = rng.normal();
        mix.data[i] = alpha * x.data[i] + beta * y.data[i];
    }
    const auto fx = bandpass(x, 1.0, 40.0);
    const auto fy = bandpass(y, 1.0, 40.0);
    const auto fmix = bandpass(mix, 1.0, 40.0);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = fmix.data[i] - (alpha * fx.data[i] + beta * fy.data[i]);
        err += d * d;
    }
    CHECK(std::sqrt(err / static_cast<double>(n)) <= 1e-6);
}

TEST_CASE("bandpass rejects too-short recordings and bad bands") {
    EegRecording rec = make_recording(1, 100);
    CHECK_THROWS_AS(bandpass(rec, 1.0, 40.0), Error);  // kernel is 501 taps
    EegRecording ok = make_recording(1, 1000);
    CHECK_THROWS_AS(bandpass(ok, 40.0, 1.0), Error);
    CHECK_THROWS_AS(bandpass(ok, 1.0, 70.0), Error);  // above Nyquist
}

TEST_CASE("preprocess applies the pipeline order filter-then-normalise") {
    Rng rng(12);
    EegRecording rec = make_recording(2, 2000);
    for (double& v : rec.data) v = rng.normal(5.0, 3.0);
    PrepConfig cfg;
    cfg.pipeline = PrepPipeline::BandpassZscore;
    const auto out = preprocess(rec, cfg);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 2000; ++i) mean += out.channel(c)[i];
        CHECK(mean / 2000.0 == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("unimplemented pipelines raise NotSupported") {
    EegRecording rec = make_recording(1, 100);
    for (double& v : rec.data) v = 1.0;
    rec.data[0] = 2.0;
    for (PrepPipeline p : {PrepPipeline::Pyprep, PrepPipeline::PyprepRansac,
                           PrepPipeline::IcaOnly, PrepPipeline::AsrOnly,
                           PrepPipeline::AutoRejectOnly}) {
        PrepConfig cfg;
        cfg.pipeline = p;
        CHECK_THROWS_AS(preprocess(rec, cfg), Error);
    }
}

TEST_SUITE_END();
