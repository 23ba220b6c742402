#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m2d/types.hpp"

namespace m2d {

enum class Aggregation { Majority, Reject };
enum class SplitStrategy { TemporalPlain, LabelStratifiedTemporal };
enum class Sampler { NoSampling, RandomOversample };

struct WindowSpec {
    double length_s = 1.0;   // one of {0.5, 1.0, 2.0, 5.0}
    double overlap = 0.5;    // one of {0, 0.5}
    Aggregation aggregation = Aggregation::Reject;

    void validate(double fs) const;
    std::size_t window_samples(double fs) const;
    std::size_t step_samples(double fs) const;
};

struct SplitConfig {
    SplitStrategy strategy = SplitStrategy::LabelStratifiedTemporal;
    double train_frac = 0.7;
    double val_frac_of_train = 0.15;
    Sampler sampler = Sampler::RandomOversample;
    std::uint64_t sampler_seed = 1;

    void validate() const;
};

// One supervised example: a preprocessed EEG window and its aggregated
// future-intention label.
struct Example {
    std::vector<float> window;  // C x W, row-major by channel
    ActionLabel label = ActionLabel::Forward;
    int horizon_ms = 0;
    std::uint32_t session_id = 0;
    double start_time = 0.0;  // s
};

struct Dataset {
    std::uint32_t channels = 0;
    std::uint32_t window = 0;
    std::vector<std::string> channel_names;  // empty after a cache read
    std::vector<Example> examples;
};

// Horizon-shifted labels: labels[i] = source[i + shift]; only the first
// `usable` entries exist, the final `shift` source positions are
// out-of-range and excluded from windowing.
struct ShiftedLabels {
    std::vector<ActionLabel> labels;
    std::size_t usable = 0;
    std::size_t shift = 0;
};

// shift = round(horizon_ms * fs / 1000), ties away from zero.
std::size_t horizon_shift_samples(int horizon_ms, double fs);
ShiftedLabels shift_horizon(const LabelSeries& series, int horizon_ms, double fs);

// Window start indices over [0, t_usable): 0, step, 2*step, ...; count is
// floor((t_usable - W) / step) + 1.
std::vector<std::size_t> segment_starts(std::size_t t_usable, std::size_t window,
                                        std::size_t step);

struct SegmentedWindow {
    std::size_t start = 0;
    double start_time = 0.0;
    std::span<const ActionLabel> labels;  // view into the shifted series
};

std::vector<SegmentedWindow> segment(const EegRecording& eeg, const ShiftedLabels& labels,
                                     const WindowSpec& spec);
// The windows view the labels argument; a temporary would dangle.
std::vector<SegmentedWindow> segment(const EegRecording&, ShiftedLabels&&,
                                     const WindowSpec&) = delete;

// nullopt means the window was rejected (Reject rule, mixed labels).
// Majority ties resolve to the tied label occurring latest in the window.
std::optional<ActionLabel> aggregate(std::span<const ActionLabel> window_labels,
                                     Aggregation rule);

// Drops Stopped/Reverse examples, preserving order. Errors when nothing
// remains.
std::vector<Example> restrict_actions(std::vector<Example> examples);

struct IndexInterval {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

struct SplitIntervals {
    std::vector<IndexInterval> train;
    std::vector<IndexInterval> val;
    std::vector<IndexInterval> test;
    std::vector<std::string> warnings;
};

// Temporal-chunk split. Stratified: per class, maximal same-class runs are
// assigned chronologically to train until the class's cumulative duration
// first reaches train_frac (a straddling chunk goes wholly to train); the
// chronologically last val_frac_of_train of each class's train duration
// (whole chunks) becomes validation. Plain: leading train_frac of the full
// timeline.
SplitIntervals stratified_temporal_split(const LabelSeries& labels, const SplitConfig& cfg);

// Duplicates minority-class examples uniformly at random (seeded, with
// replacement) until all class counts match the majority. Originals are
// retained and precede the duplicates.
std::vector<Example> oversample(std::vector<Example> train_examples, std::uint64_t seed);

// Reduces every window to the named channel rows, in subset order.
Dataset select_channels(const Dataset& ds, const std::vector<std::string>& subset);

// Per-session dataset build: windows are generated strictly inside each
// split interval, aggregated on the horizon-shifted labels, then
// restricted to the modelling action set.
struct BuildStats {
    std::size_t windows_total = 0;
    std::size_t windows_rejected = 0;
    std::size_t dropped_out_of_set = 0;  // Stopped/Reverse after aggregation
    std::size_t per_class[kNumClasses] = {0, 0, 0};
};

struct SessionExamples {
    std::vector<Example> train;
    std::vector<Example> val;
    std::vector<Example> test;
    BuildStats stats;
};

SessionExamples build_session_examples(const EegRecording& preprocessed,
                                       const LabelSeries& labels, int horizon_ms,
                                       const WindowSpec& spec, const SplitIntervals& split,
                                       std::uint32_t session_id);

// Binary dataset cache, magic M2D1, little-endian.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

}  // namespace m2d
