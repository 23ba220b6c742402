#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m2d/types.hpp"

namespace m2d {

struct ScheduleSegment {
    ActionLabel action;
    double start;  // s
    double end;    // s
};

// Contiguous, non-overlapping segments covering [0, duration].
struct ManoeuvreSchedule {
    std::vector<ScheduleSegment> segments;
    double duration = 0.0;

    ActionLabel action_at(double t) const;
    double turning_share() const;
    void validate() const;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    double duration_s = 600.0;
    double eeg_fs = 125.0;
    double kin_fs = 100.0;
    std::vector<std::string> channels;  // empty -> default 16-channel montage
    double lead_time_ms = 800.0;        // signature onset before manoeuvre start
    double snr_db = 0.0;                // peak signature amplitude vs background RMS
    double turn_fraction = 0.2;         // target share of turning time
    double line_noise_hz = 50.0;

    void validate() const;
};

// The standard 16-channel montage.
const std::vector<std::string>& default_channels();

// Pseudorandom alternation of Forward segments with turn and occasional
// stop segments; a feedback rule steers the realized turning share toward
// cfg.turn_fraction. Deterministic given cfg.seed.
ManoeuvreSchedule gen_schedule(const SynthConfig& cfg);

// Piecewise kinematic profiles with 0.5 s cosine transitions centred on
// segment boundaries, plus Gaussian measurement noise.
KinematicTrack gen_kinematics(const ManoeuvreSchedule& schedule, const SynthConfig& cfg);

// Per-channel 1/f background plus line noise plus a lateralized
// pre-movement signature for every turn: a negative-going linear ramp over
// the lead time that holds through the manoeuvre and releases near its
// end. TurnLeft weights right-hemisphere channels 3x left, TurnRight
// mirrored; Forward and Stopped carry no signature.
EegRecording gen_eeg(const ManoeuvreSchedule& schedule, const SynthConfig& cfg,
                     std::vector<std::string>* warnings = nullptr);

struct SynthSession {
    ManoeuvreSchedule schedule;
    KinematicTrack track;
    EegRecording eeg;
    std::vector<std::string> warnings;
};

SynthSession make_session(const SynthConfig& cfg);

// Ground-truth labels: the schedule sampled on an arbitrary timeline.
LabelSeries sample_schedule_labels(const ManoeuvreSchedule& schedule,
                                   const std::vector<double>& timestamps);

// Writes kinematics.csv, eeg.csv and schedule.csv into directory (created
// if missing). Formats round-trip losslessly through the loaders in io.
void export_session(const ManoeuvreSchedule& schedule, const KinematicTrack& track,
                    const EegRecording& eeg, const std::string& directory);

}  // namespace m2d
