#pragma once

#include <string>
#include <vector>

#include "m2d/dataset.hpp"
#include "m2d/model.hpp"
#include "m2d/sigprep.hpp"
#include "m2d/synth.hpp"
#include "m2d/types.hpp"

namespace m2d {

// Full experiment description. Parsed from a line-oriented
// `section.key = value` text file; unknown keys are rejected and every
// field has a default.
struct ExperimentConfig {
    SynthConfig synth;
    int sessions = 2;

    bool estimate_thresholds = false;
    Thresholds thresholds;

    PrepConfig prep;
    WindowSpec window;
    SplitConfig split;

    std::vector<int> horizons_ms = {0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};

    // "all16", "frontal8" or an explicit comma list in the config file.
    std::vector<std::string> channel_subset;  // empty means all channels

    Architecture arch = Architecture::CompactConv;
    int recurrent_hidden = 64;

    TrainConfig train;

    std::string output_dir = "m2d_out";

    void validate() const;

    // Canonical key=value rendering of every resolved field; echoed into
    // the output directory for reproducibility.
    std::string resolved_text() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

// The 8-channel frontal/central/parietal subset.
const std::vector<std::string>& frontal8_channels();

}  // namespace m2d
