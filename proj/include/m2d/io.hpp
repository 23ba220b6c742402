#pragma once

#include <string>
#include <vector>

#include "m2d/synth.hpp"
#include "m2d/types.hpp"

namespace m2d::io {

// Delimited text formats. All files are UTF-8, '.' decimal separator,
// '\n' line endings, values printed with 9 fixed decimals so a write/read
// round trip stays within 1e-9.

// header: t,vx,vy,psi,psi_dot
void write_kinematics_csv(const std::string& path, const KinematicTrack& track);
KinematicTrack read_kinematics_csv(const std::string& path);

// header: t,<ch1>,...,<chC>
void write_eeg_csv(const std::string& path, const EegRecording& rec);
EegRecording read_eeg_csv(const std::string& path);

// header: action,start,end
void write_schedule_csv(const std::string& path, const ManoeuvreSchedule& schedule);
ManoeuvreSchedule read_schedule_csv(const std::string& path);

// header: t,label
void write_labels_csv(const std::string& path, const LabelSeries& labels);
LabelSeries read_labels_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace m2d::io
