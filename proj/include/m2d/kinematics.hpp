#pragma once

#include "m2d/types.hpp"

namespace m2d {

// Motion quantities and threshold labelling rules. All functions are pure.

// v = sqrt(vx^2 + vy^2).
double speed(double vx, double vy);

// Direction of travel, atan2(vy, vx) in (-pi, pi]. Both components zero is
// an error; callers decide Stopped before asking for a direction.
double motion_direction(double vx, double vy);

// Reduce an angle to (-pi, pi]; the boundary maps to +pi.
double wrap_angle(double a);

// wrap(theta_v - psi).
double heading_deviation(double theta_v, double psi);

// One label per rule block, precedence Stopped -> Reverse -> TurnLeft ->
// TurnRight -> Forward. A reversing vehicle is Reverse regardless of yaw.
ActionLabel classify_sample(double v, double psi_dot, double delta_theta,
                            const Thresholds& th);

// Label every sample of a track on its own timeline. v == 0 exactly is
// Stopped without evaluating the direction.
LabelSeries label_track(const KinematicTrack& track, const Thresholds& th);

}  // namespace m2d
