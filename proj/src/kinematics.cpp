#include "m2d/kinematics.hpp"

#include <cmath>

#include "m2d/errors.hpp"

namespace m2d {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const char* action_name(ActionLabel a) {
    switch (a) {
        case ActionLabel::Stopped: return "stopped";
        case ActionLabel::TurnLeft: return "turn_left";
        case ActionLabel::TurnRight: return "turn_right";
        case ActionLabel::Forward: return "forward";
        case ActionLabel::Reverse: return "reverse";
    }
    return "?";
}

std::optional<ActionLabel> action_from_name(const std::string& name) {
    if (name == "stopped") return ActionLabel::Stopped;
    if (name == "turn_left") return ActionLabel::TurnLeft;
    if (name == "turn_right") return ActionLabel::TurnRight;
    if (name == "forward") return ActionLabel::Forward;
    if (name == "reverse") return ActionLabel::Reverse;
    return std::nullopt;
}

std::optional<int> class_index(ActionLabel a) {
    switch (a) {
        case ActionLabel::Forward: return 0;
        case ActionLabel::TurnLeft: return 1;
        case ActionLabel::TurnRight: return 2;
        default: return std::nullopt;
    }
}

ActionLabel class_action(int index) {
    switch (index) {
        case 0: return ActionLabel::Forward;
        case 1: return ActionLabel::TurnLeft;
        case 2: return ActionLabel::TurnRight;
    }
    raise(ErrorKind::InvalidInput, "class index out of range: " + std::to_string(index));
}

void KinematicTrack::validate() const {
    const std::size_t n = timestamps.size();
    if (n < 2) raise(ErrorKind::InvalidInput, "kinematic track needs >= 2 samples");
    if (vx.size() != n || vy.size() != n || psi.size() != n || psi_dot.size() != n)
        raise(ErrorKind::InvalidInput, "kinematic track arrays have unequal lengths");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(timestamps[i]) || !std::isfinite(vx[i]) || !std::isfinite(vy[i]) ||
            !std::isfinite(psi[i]) || !std::isfinite(psi_dot[i]))
            raise(ErrorKind::InvalidInput, "kinematic track contains non-finite values");
        if (i > 0 && timestamps[i] <= timestamps[i - 1])
            raise(ErrorKind::InvalidInput, "kinematic timestamps must be strictly increasing");
        if (psi[i] <= -kPi || psi[i] > kPi)
            raise(ErrorKind::InvalidInput, "psi outside (-pi, pi]");
    }
}

void Thresholds::validate() const {
    if (!(v_th > 0.0) || !(omega_th > 0.0))
        raise(ErrorKind::Config, "thresholds must be positive");
}

void EegRecording::validate() const {
    const std::size_t c = channel_names.size();
    const std::size_t t = timestamps.size();
    if (c == 0 || t == 0) raise(ErrorKind::InvalidInput, "empty EEG recording");
    if (data.size() != c * t)
        raise(ErrorKind::InvalidInput, "EEG data size does not match C x T");
    for (std::size_t i = 1; i < t; ++i)
        if (timestamps[i] <= timestamps[i - 1])
            raise(ErrorKind::InvalidInput, "EEG timestamps must be strictly increasing");
}

double speed(double vx, double vy) {
    if (!std::isfinite(vx) || !std::isfinite(vy))
        raise(ErrorKind::InvalidInput, "speed: non-finite velocity component");
    return std::sqrt(vx * vx + vy * vy);
}

double motion_direction(double vx, double vy) {
    if (!std::isfinite(vx) || !std::isfinite(vy))
        raise(ErrorKind::InvalidInput, "motion_direction: non-finite velocity component");
    if (vx == 0.0 && vy == 0.0)
        raise(ErrorKind::InvalidInput,
              "motion_direction undefined at zero velocity; apply the Stopped rule first");
    double theta = std::atan2(vy, vx);
    if (theta <= -kPi) theta = kPi;  // atan2 can return -pi for (-x, -0.0)
    return theta;
}

double wrap_angle(double a) {
    if (!std::isfinite(a)) raise(ErrorKind::InvalidInput, "wrap_angle: non-finite input");
    double r = std::remainder(a, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;  // boundary maps to +pi
    return r;
}

double heading_deviation(double theta_v, double psi) {
    return wrap_angle(theta_v - psi);
}

ActionLabel classify_sample(double v, double psi_dot, double delta_theta,
                            const Thresholds& th) {
    th.validate();
    if (v < th.v_th) return ActionLabel::Stopped;
    if (std::abs(delta_theta) > kPi / 2.0) return ActionLabel::Reverse;
    if (psi_dot > th.omega_th) return ActionLabel::TurnLeft;
    if (psi_dot < -th.omega_th) return ActionLabel::TurnRight;
    return ActionLabel::Forward;
}

LabelSeries label_track(const KinematicTrack& track, const Thresholds& th) {
    track.validate();
    th.validate();
    LabelSeries out;
    out.timestamps = track.timestamps;
    out.labels.resize(track.size());
    for (std::size_t i = 0; i < track.size(); ++i) {
        const double v = speed(track.vx[i], track.vy[i]);
        if (v == 0.0 || v < th.v_th) {
            out.labels[i] = ActionLabel::Stopped;
            continue;
        }
        const double theta_v = motion_direction(track.vx[i], track.vy[i]);
        const double dtheta = heading_deviation(theta_v, track.psi[i]);
        out.labels[i] = classify_sample(v, track.psi_dot[i], dtheta, th);
    }
    return out;
}

}  // namespace m2d
