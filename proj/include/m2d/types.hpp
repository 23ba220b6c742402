#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace m2d {

// Discrete driving action. Wire value (dataset cache, files) is the enum
// value, so the order here is part of the on-disk format.
enum class ActionLabel : std::uint8_t {
    Stopped = 0,
    TurnLeft = 1,
    TurnRight = 2,
    Forward = 3,
    Reverse = 4,
};

constexpr int kNumClasses = 3;  // modelling action set {Forward, TurnLeft, TurnRight}

const char* action_name(ActionLabel a);
std::optional<ActionLabel> action_from_name(const std::string& name);

// Class index used by models and metrics: Forward=0, TurnLeft=1, TurnRight=2.
std::optional<int> class_index(ActionLabel a);
ActionLabel class_action(int index);

// Timestamped planar vehicle state. Units: seconds, m/s, rad, rad/s.
struct KinematicTrack {
    std::vector<double> timestamps;
    std::vector<double> vx;
    std::vector<double> vy;
    std::vector<double> psi;
    std::vector<double> psi_dot;

    std::size_t size() const { return timestamps.size(); }
    void validate() const;  // throws InvalidInput on any broken invariant
};

struct Thresholds {
    double v_th = 0.5;        // m/s, stationary/moving boundary
    double omega_th = 0.05;   // rad/s, straight/turning boundary

    void validate() const;
};

// Per-sample action labels on some timeline (usually the EEG timeline).
struct LabelSeries {
    std::vector<double> timestamps;
    std::vector<ActionLabel> labels;

    std::size_t size() const { return labels.size(); }
};

// Multichannel EEG, row-major C x T.
struct EegRecording {
    std::vector<double> timestamps;           // length T
    std::vector<std::string> channel_names;   // length C
    std::vector<double> data;                 // C * T, channel-major
    double fs = 125.0;

    std::size_t channels() const { return channel_names.size(); }
    std::size_t samples() const { return timestamps.size(); }

    double* channel(std::size_t c) { return data.data() + c * samples(); }
    const double* channel(std::size_t c) const { return data.data() + c * samples(); }

    void validate() const;
};

}  // namespace m2d
