#pragma once

#include <string>
#include <vector>

#include "m2d/config.hpp"
#include "m2d/metrics.hpp"

namespace m2d {

// Pipeline stages. Each stage consumes the previous stage's files under
// cfg.output_dir and writes its own subtree, so rerunning a later stage
// from cached files equals a fresh full run. On failure a stage's partial
// outputs are removed.
//
//   synth -> sessions/sNNN/{kinematics,eeg,schedule}.csv
//   label -> labels/sNNN.csv, labels/thresholds.txt
//   build -> build/hNNNN/{train,val,test}.m2d, build/build_log.txt
//   train -> train/hNNNN/{checkpoint.m2dc, train_log.csv}
//   eval  -> eval/hNNNN/{metrics.json, confusion.csv}, horizons.csv
//   report-> summary.txt

struct HorizonResult {
    int horizon_ms = 0;
    MetricsReport test;
};

void stage_synth(const ExperimentConfig& cfg, bool verbose = false);
void stage_label(const ExperimentConfig& cfg, bool verbose = false);
void stage_build(const ExperimentConfig& cfg, bool verbose = false);
void stage_train(const ExperimentConfig& cfg, bool verbose = false);
std::vector<HorizonResult> stage_eval(const ExperimentConfig& cfg, bool verbose = false);
std::string stage_report(const ExperimentConfig& cfg, bool verbose = false);

// Full pipeline: synth -> label -> build -> train -> eval. Returns the
// per-horizon test metrics (also written to horizons.csv).
std::vector<HorizonResult> run_experiment(const ExperimentConfig& cfg, bool verbose = false);

// Per-horizon training seed derived from the master train seed.
std::uint64_t horizon_seed(const ExperimentConfig& cfg, int horizon_ms);

std::string session_dir(const ExperimentConfig& cfg, int session);
std::string horizons_csv_path(const ExperimentConfig& cfg);

}  // namespace m2d
