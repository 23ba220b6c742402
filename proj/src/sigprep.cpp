#include "m2d/sigprep.hpp"

#include <algorithm>
#include <cmath>

#include "m2d/errors.hpp"
#include "m2d/kernels.hpp"
#include "m2d/kinematics.hpp"

namespace m2d {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Interpolation weights for one query time against a sorted grid, edges
// clamped.
struct Bracket {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

Bracket bracket(const std::vector<double>& ts, double t) {
    if (t <= ts.front()) return {0, 0, 0.0};
    if (t >= ts.back()) return {ts.size() - 1, ts.size() - 1, 0.0};
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::size_t lo = hi - 1;
    const double span = ts[hi] - ts[lo];
    return {lo, hi, span > 0.0 ? (t - ts[lo]) / span : 0.0};
}

double lerp(const std::vector<double>& y, const Bracket& b) {
    return y[b.lo] + (y[b.hi] - y[b.lo]) * b.frac;
}

// Circular interpolation: step to the neighbour along the shorter arc,
// then wrap.
double lerp_angle(double a0, double a1, double frac) {
    const double d = wrap_angle(a1 - a0);
    return wrap_angle(a0 + d * frac);
}
}  // namespace

const char* prep_pipeline_name(PrepPipeline p) {
    switch (p) {
        case PrepPipeline::ZscoreOnly: return "zscore";
        case PrepPipeline::BandpassZscore: return "bandpass_zscore";
        case PrepPipeline::Pyprep: return "pyprep";
        case PrepPipeline::PyprepRansac: return "pyprep_ransac";
        case PrepPipeline::IcaOnly: return "ica";
        case PrepPipeline::AsrOnly: return "asr";
        case PrepPipeline::AutoRejectOnly: return "autoreject";
    }
    return "?";
}

void PrepConfig::validate(double fs) const {
    if (pipeline == PrepPipeline::BandpassZscore) {
        if (!(band_lo > 0.0) || !(band_lo < band_hi) || !(band_hi < fs / 2.0))
            raise(ErrorKind::Config, "prep band must satisfy 0 < lo < hi < fs/2");
    }
}

AlignedKinematics resample_to_eeg(const KinematicTrack& track,
                                  const std::vector<double>& eeg_timestamps) {
    track.validate();
    if (eeg_timestamps.empty()) raise(ErrorKind::InvalidInput, "resample: empty EEG timeline");

    const double t0 = track.timestamps.front();
    const double t1 = track.timestamps.back();
    if (eeg_timestamps.front() < t0 - 1.0 || eeg_timestamps.back() > t1 + 1.0)
        raise(ErrorKind::Coverage,
              "EEG timeline extends more than 1 s beyond kinematic coverage");

    // Precompute the travel direction at every track sample; undefined
    // directions (exact standstill) borrow the previous heading so the
    // interpolated series stays continuous. Those samples classify as
    // Stopped anyway.
    const std::size_t n = track.size();
    std::vector<double> theta_v(n);
    double last_theta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (track.vx[i] == 0.0 && track.vy[i] == 0.0) {
            theta_v[i] = last_theta;
        } else {
            theta_v[i] = motion_direction(track.vx[i], track.vy[i]);
            last_theta = theta_v[i];
        }
    }

    AlignedKinematics out;
    out.timestamps = eeg_timestamps;
    const std::size_t m = eeg_timestamps.size();
    out.v.resize(m);
    out.psi.resize(m);
    out.psi_dot.resize(m);
    out.delta_theta.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Bracket b = bracket(track.timestamps, eeg_timestamps[i]);
        const double vx = lerp(track.vx, b);
        const double vy = lerp(track.vy, b);
        out.v[i] = std::sqrt(vx * vx + vy * vy);
        out.psi[i] = lerp_angle(track.psi[b.lo], track.psi[b.hi], b.frac);
        out.psi_dot[i] = lerp(track.psi_dot, b);
        const double th = lerp_angle(theta_v[b.lo], theta_v[b.hi], b.frac);
        out.delta_theta[i] = wrap_angle(th - out.psi[i]);
    }
    return out;
}

EegRecording zscore(const EegRecording& rec) {
    rec.validate();
    EegRecording out = rec;
    const std::size_t t = rec.samples();
    for (std::size_t c = 0; c < rec.channels(); ++c) {
        const double* x = rec.channel(c);
        double mean = 0.0;
        for (std::size_t i = 0; i < t; ++i) mean += x[i];
        mean /= static_cast<double>(t);
        double var = 0.0;
        for (std::size_t i = 0; i < t; ++i) var += (x[i] - mean) * (x[i] - mean);
        var /= static_cast<double>(t);
        if (var <= 1e-24)
            raise(ErrorKind::InvalidInput,
                  "zscore: channel " + rec.channel_names[c] + " has zero variance");
        const double inv_sd = 1.0 / std::sqrt(var);
        double* y = out.channel(c);
        for (std::size_t i = 0; i < t; ++i) y[i] = (x[i] - mean) * inv_sd;
    }
    return out;
}

std::vector<double> design_bandpass_taps(double lo_hz, double hi_hz, double fs) {
    if (!(lo_hz > 0.0) || !(lo_hz < hi_hz) || !(hi_hz < fs / 2.0))
        raise(ErrorKind::Config, "bandpass: need 0 < lo < hi < fs/2");

    std::size_t order = static_cast<std::size_t>(std::ceil(4.0 * fs / lo_hz));
    if (order % 2 == 0) ++order;
    const long long mid = static_cast<long long>(order / 2);

    const double f_lo = lo_hz / fs;
    const double f_hi = hi_hz / fs;
    auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); };

    std::vector<double> taps(order);
    for (std::size_t i = 0; i < order; ++i) {
        const double nrel = static_cast<double>(static_cast<long long>(i) - mid);
        const double ideal =
            2.0 * f_hi * sinc(2.0 * f_hi * nrel) - 2.0 * f_lo * sinc(2.0 * f_lo * nrel);
        const double hamming =
            0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                   static_cast<double>(order - 1));
        taps[i] = ideal * hamming;
    }
    // Normalise to unit gain at the band centre (geometric mean frequency).
    const double fc = std::sqrt(f_lo * f_hi);
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < order; ++i) {
        const double phase = 2.0 * kPi * fc * static_cast<double>(i);
        re += taps[i] * std::cos(phase);
        im -= taps[i] * std::sin(phase);
    }
    const double gain = std::sqrt(re * re + im * im);
    if (gain > 0.0)
        for (double& t : taps) t /= gain;
    return taps;
}

EegRecording bandpass(const EegRecording& rec, double lo_hz, double hi_hz) {
    rec.validate();
    const auto taps = design_bandpass_taps(lo_hz, hi_hz, rec.fs);
    if (rec.samples() < taps.size())
        raise(ErrorKind::InvalidInput,
              "bandpass: recording shorter than the filter kernel (" +
                  std::to_string(taps.size()) + " taps)");
    EegRecording out = rec;
    kernels::fir_filter_channels(rec.data.data(), rec.channels(), rec.samples(), taps,
                                 out.data.data());
    return out;
}

EegRecording preprocess(const EegRecording& rec, const PrepConfig& cfg) {
    cfg.validate(rec.fs);
    switch (cfg.pipeline) {
        case PrepPipeline::ZscoreOnly:
            return zscore(rec);
        case PrepPipeline::BandpassZscore:
            return zscore(bandpass(rec, cfg.band_lo, cfg.band_hi));
        default:
            raise(ErrorKind::NotSupported,
                  std::string("preprocessing pipeline '") + prep_pipeline_name(cfg.pipeline) +
                      "' is not implemented in this artifact");
    }
}

}  // namespace m2d
