#pragma once

#include <vector>

#include "m2d/types.hpp"

namespace m2d {

enum class PrepPipeline {
    ZscoreOnly,
    BandpassZscore,
    // The remaining variants exist so configs naming them fail loudly;
    // they consistently degraded performance and are deliberately not
    // implemented.
    Pyprep,
    PyprepRansac,
    IcaOnly,
    AsrOnly,
    AutoRejectOnly,
};

struct PrepConfig {
    PrepPipeline pipeline = PrepPipeline::ZscoreOnly;
    double band_lo = 1.0;   // Hz
    double band_hi = 40.0;  // Hz

    void validate(double fs) const;
};

// Kinematic quantities aligned to the EEG timeline.
struct AlignedKinematics {
    std::vector<double> timestamps;
    std::vector<double> v;
    std::vector<double> psi;
    std::vector<double> psi_dot;
    std::vector<double> delta_theta;

    std::size_t size() const { return timestamps.size(); }
};

// Linear interpolation of track quantities onto the EEG timestamps.
// Angles are interpolated on the circle (unwrap, interpolate, re-wrap).
// Queries outside the track clamp to the edge samples; EEG extending more
// than 1 s beyond track coverage is a coverage error.
AlignedKinematics resample_to_eeg(const KinematicTrack& track,
                                  const std::vector<double>& eeg_timestamps);

// Per-channel standardisation over the whole session, population (divisor
// T) convention. A zero-variance channel is an error naming the channel.
EegRecording zscore(const EegRecording& rec);

// Zero-phase windowed-sinc band-pass (Hamming window), reflection-padded
// edges. Kernel order is 4 * fs / lo rounded up to odd.
EegRecording bandpass(const EegRecording& rec, double lo_hz, double hi_hz);

// Applies the configured pipeline. Unsupported variants raise NotSupported.
EegRecording preprocess(const EegRecording& rec, const PrepConfig& cfg);

const char* prep_pipeline_name(PrepPipeline p);

// Band-pass taps, exposed for tests and the kernel benchmark.
std::vector<double> design_bandpass_taps(double lo_hz, double hi_hz, double fs);

}  // namespace m2d
