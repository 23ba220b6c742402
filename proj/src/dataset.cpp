#include "m2d/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "m2d/errors.hpp"
#include "m2d/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset cache assumes a little-endian host");

namespace m2d {

void WindowSpec::validate(double fs) const {
    const bool length_ok = length_s == 0.5 || length_s == 1.0 || length_s == 2.0 || length_s == 5.0;
    if (!length_ok) raise(ErrorKind::Config, "window.length_s must be one of 0.5, 1.0, 2.0, 5.0");
    if (overlap != 0.0 && overlap != 0.5)
        raise(ErrorKind::Config, "window.overlap must be 0 or 0.5");
    if (static_cast<double>(window_samples(fs)) < 16.0)
        raise(ErrorKind::Config, "window shorter than 16 samples");
}

std::size_t WindowSpec::window_samples(double fs) const {
    return static_cast<std::size_t>(std::llround(length_s * fs));
}

std::size_t WindowSpec::step_samples(double fs) const {
    const auto w = window_samples(fs);
    const auto step = static_cast<std::size_t>(
        std::floor(static_cast<double>(w) * (1.0 - overlap)));
    return std::max<std::size_t>(1, step);
}

void SplitConfig::validate() const {
    if (!(train_frac > 0.0) || !(train_frac < 1.0))
        raise(ErrorKind::Config, "split.train_frac must be in (0, 1)");
    if (val_frac_of_train < 0.0 || val_frac_of_train > 0.5)
        raise(ErrorKind::Config, "split.val_frac_of_train must be in [0, 0.5]");
}

std::size_t horizon_shift_samples(int horizon_ms, double fs) {
    if (horizon_ms < 0) raise(ErrorKind::InvalidInput, "horizon must be >= 0 ms");
    return static_cast<std::size_t>(
        std::llround(static_cast<double>(horizon_ms) * fs / 1000.0));
}

ShiftedLabels shift_horizon(const LabelSeries& series, int horizon_ms, double fs) {
    const std::size_t n = horizon_shift_samples(horizon_ms, fs);
    if (n >= series.size())
        raise(ErrorKind::EmptyResult, "horizon shift of " + std::to_string(n) +
                                          " samples leaves no labels");
    ShiftedLabels out;
    out.shift = n;
    out.usable = series.size() - n;
    out.labels.assign(series.labels.begin() + static_cast<std::ptrdiff_t>(n),
                      series.labels.end());
    return out;
}

std::vector<std::size_t> segment_starts(std::size_t t_usable, std::size_t window,
                                        std::size_t step) {
    if (t_usable < window)
        raise(ErrorKind::EmptyResult, "usable series shorter than one window");
    std::vector<std::size_t> starts;
    starts.reserve((t_usable - window) / step + 1);
    for (std::size_t s = 0; s + window <= t_usable; s += step) starts.push_back(s);
    return starts;
}

std::vector<SegmentedWindow> segment(const EegRecording& eeg, const ShiftedLabels& labels,
                                     const WindowSpec& spec) {
    spec.validate(eeg.fs);
    if (labels.usable + labels.shift != eeg.samples())
        raise(ErrorKind::InvalidInput, "labels are not aligned to the EEG timeline");
    const std::size_t w = spec.window_samples(eeg.fs);
    const std::size_t step = spec.step_samples(eeg.fs);
    std::vector<SegmentedWindow> out;
    for (std::size_t s : segment_starts(labels.usable, w, step)) {
        out.push_back({s, eeg.timestamps[s],
                       std::span<const ActionLabel>(labels.labels.data() + s, w)});
    }
    return out;
}

std::optional<ActionLabel> aggregate(std::span<const ActionLabel> window_labels,
                                     Aggregation rule) {
    if (window_labels.empty()) raise(ErrorKind::InvalidInput, "aggregate: empty window");
    if (rule == Aggregation::Reject) {
        const ActionLabel first = window_labels.front();
        for (ActionLabel l : window_labels)
            if (l != first) return std::nullopt;
        return first;
    }
    // Majority; ties go to the tied label seen latest in the window.
    std::array<std::size_t, 5> count{};
    std::array<std::size_t, 5> last_pos{};
    for (std::size_t i = 0; i < window_labels.size(); ++i) {
        const auto k = static_cast<std::size_t>(window_labels[i]);
        ++count[k];
        last_pos[k] = i;
    }
    std::size_t best = 0;
    bool found = false;
    for (std::size_t k = 0; k < count.size(); ++k) {
        if (count[k] == 0) continue;
        if (!found || count[k] > count[best] ||
            (count[k] == count[best] && last_pos[k] > last_pos[best])) {
            best = k;
            found = true;
        }
    }
    return static_cast<ActionLabel>(best);
}

std::vector<Example> restrict_actions(std::vector<Example> examples) {
    std::erase_if(examples, [](const Example& e) { return !class_index(e.label); });
    if (examples.empty())
        raise(ErrorKind::EmptyResult, "restrict_actions removed every example");
    return examples;
}

namespace {

struct Run {
    ActionLabel action;
    std::size_t begin;
    std::size_t end;
    std::size_t len() const { return end - begin; }
};

std::vector<Run> class_runs(const LabelSeries& labels) {
    std::vector<Run> runs;
    std::size_t i = 0;
    const std::size_t n = labels.size();
    while (i < n) {
        if (!class_index(labels.labels[i])) {  // gap
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n && labels.labels[j] == labels.labels[i]) ++j;
        runs.push_back({labels.labels[i], i, j});
        i = j;
    }
    return runs;
}

void sort_intervals(std::vector<IndexInterval>& v) {
    std::sort(v.begin(), v.end(),
              [](const IndexInterval& a, const IndexInterval& b) { return a.begin < b.begin; });
}

}  // namespace

SplitIntervals stratified_temporal_split(const LabelSeries& labels, const SplitConfig& cfg) {
    cfg.validate();
    if (labels.size() == 0) raise(ErrorKind::InvalidInput, "split: empty label series");

    SplitIntervals out;
    if (cfg.strategy == SplitStrategy::TemporalPlain) {
        const auto n = labels.size();
        const auto train_end = static_cast<std::size_t>(
            std::floor(cfg.train_frac * static_cast<double>(n)));
        if (train_end == 0 || train_end >= n)
            raise(ErrorKind::InvalidInput, "split: series too short for the plain split");
        const auto val_begin = static_cast<std::size_t>(std::floor(
            static_cast<double>(train_end) * (1.0 - cfg.val_frac_of_train)));
        if (val_begin > 0) out.train.push_back({0, val_begin});
        if (val_begin < train_end) out.val.push_back({val_begin, train_end});
        out.test.push_back({train_end, n});
        return out;
    }

    const auto runs = class_runs(labels);
    if (runs.empty())
        raise(ErrorKind::InvalidInput, "split: no Forward/TurnLeft/TurnRight samples");

    for (int cls = 0; cls < kNumClasses; ++cls) {
        const ActionLabel action = class_action(cls);
        std::vector<Run> mine;
        for (const auto& r : runs)
            if (r.action == action) mine.push_back(r);
        if (mine.empty()) continue;
        if (mine.size() < 3)
            out.warnings.push_back(std::string("stratification: class ") + action_name(action) +
                                   " has only " + std::to_string(mine.size()) +
                                   " temporal chunk(s); split proceeds at chunk granularity");

        std::size_t total = 0;
        for (const auto& r : mine) total += r.len();
        const double train_target = cfg.train_frac * static_cast<double>(total);

        // Chronological chunks to train until the cumulative duration first
        // reaches the target; the straddling chunk goes wholly to train.
        std::size_t n_train = 0;
        std::size_t train_len = 0;
        while (n_train < mine.size() &&
               static_cast<double>(train_len) < train_target) {
            train_len += mine[n_train].len();
            ++n_train;
        }

        // Validation: minimal suffix of train chunks reaching the target,
        // never consuming the whole train.
        const double val_target =
            cfg.val_frac_of_train * static_cast<double>(train_len);
        std::size_t n_val = 0;
        std::size_t val_len = 0;
        while (val_target > 0.0 && n_val + 1 < n_train &&
               static_cast<double>(val_len) < val_target) {
            val_len += mine[n_train - 1 - n_val].len();
            ++n_val;
        }

        for (std::size_t i = 0; i < n_train - n_val; ++i)
            out.train.push_back({mine[i].begin, mine[i].end});
        for (std::size_t i = n_train - n_val; i < n_train; ++i)
            out.val.push_back({mine[i].begin, mine[i].end});
        for (std::size_t i = n_train; i < mine.size(); ++i)
            out.test.push_back({mine[i].begin, mine[i].end});
    }

    sort_intervals(out.train);
    sort_intervals(out.val);
    sort_intervals(out.test);
    return out;
}

std::vector<Example> oversample(std::vector<Example> train_examples, std::uint64_t seed) {
    if (train_examples.empty()) raise(ErrorKind::EmptyResult, "oversample: empty input");
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < train_examples.size(); ++i) {
        const auto cls = class_index(train_examples[i].label);
        if (!cls)
            raise(ErrorKind::InvalidInput, "oversample: example outside the 3-class action set");
        by_class[static_cast<std::size_t>(*cls)].push_back(i);
    }
    std::size_t majority = 0;
    for (const auto& v : by_class) majority = std::max(majority, v.size());

    Rng rng = Rng(seed).fork("oversample");
    for (int cls = 0; cls < kNumClasses; ++cls) {
        const auto& pool = by_class[static_cast<std::size_t>(cls)];
        if (pool.empty()) continue;
        Rng class_rng = rng.fork("class", static_cast<std::uint64_t>(cls));
        for (std::size_t need = majority - pool.size(); need > 0; --need) {
            const std::size_t pick = pool[class_rng.below(pool.size())];
            train_examples.push_back(train_examples[pick]);
        }
    }
    return train_examples;
}

Dataset select_channels(const Dataset& ds, const std::vector<std::string>& subset) {
    if (ds.channel_names.empty())
        raise(ErrorKind::Config, "select_channels: dataset carries no channel names");
    std::vector<std::size_t> rows;
    rows.reserve(subset.size());
    for (const auto& name : subset) {
        const auto it = std::find(ds.channel_names.begin(), ds.channel_names.end(), name);
        if (it == ds.channel_names.end())
            raise(ErrorKind::Config, "select_channels: unknown channel '" + name + "'");
        rows.push_back(static_cast<std::size_t>(it - ds.channel_names.begin()));
    }
    Dataset out;
    out.channels = static_cast<std::uint32_t>(subset.size());
    out.window = ds.window;
    out.channel_names = subset;
    out.examples.reserve(ds.examples.size());
    const std::size_t w = ds.window;
    for (const auto& e : ds.examples) {
        Example ne = e;
        ne.window.resize(rows.size() * w);
        for (std::size_t r = 0; r < rows.size(); ++r)
            std::copy_n(e.window.data() + rows[r] * w, w, ne.window.data() + r * w);
        out.examples.push_back(std::move(ne));
    }
    return out;
}

namespace {

// Window labelling per aggregation rule. Reject: the window must contain a
// single consistent manoeuvre (its own per-sample labels are uniform) and
// the target is the future action at the window end plus the horizon,
// y(t + delta) evaluated pointwise. Majority: the most frequent label of
// the horizon-shifted span, ties to the label nearest execution.
std::vector<Example> windows_in_intervals(const EegRecording& eeg, const LabelSeries& current,
                                          const ShiftedLabels& labels, const WindowSpec& spec,
                                          const std::vector<IndexInterval>& intervals,
                                          int horizon_ms, std::uint32_t session_id,
                                          BuildStats& stats) {
    const std::size_t w = spec.window_samples(eeg.fs);
    const std::size_t step = spec.step_samples(eeg.fs);
    const std::size_t c = eeg.channels();
    std::vector<Example> out;
    for (const auto& iv : intervals) {
        const std::size_t hi = std::min(iv.end, labels.usable);
        for (std::size_t s = iv.begin; s + w <= hi; s += step) {
            ++stats.windows_total;
            std::optional<ActionLabel> label;
            if (spec.aggregation == Aggregation::Reject) {
                const auto pure =
                    aggregate({current.labels.data() + s, w}, Aggregation::Reject);
                if (pure) label = labels.labels[s + w - 1];
            } else {
                label = aggregate({labels.labels.data() + s, w}, Aggregation::Majority);
            }
            if (!label) {
                ++stats.windows_rejected;
                continue;
            }
            const auto cls = class_index(*label);
            if (!cls) {
                ++stats.dropped_out_of_set;
                continue;
            }
            ++stats.per_class[static_cast<std::size_t>(*cls)];
            Example e;
            e.label = *label;
            e.horizon_ms = horizon_ms;
            e.session_id = session_id;
            e.start_time = eeg.timestamps[s];
            e.window.resize(c * w);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double* src = eeg.channel(ch) + s;
                float* dst = e.window.data() + ch * w;
                for (std::size_t i = 0; i < w; ++i) dst[i] = static_cast<float>(src[i]);
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace

SessionExamples build_session_examples(const EegRecording& preprocessed,
                                       const LabelSeries& labels, int horizon_ms,
                                       const WindowSpec& spec, const SplitIntervals& split,
                                       std::uint32_t session_id) {
    spec.validate(preprocessed.fs);
    if (labels.size() != preprocessed.samples())
        raise(ErrorKind::InvalidInput, "labels are not aligned to the EEG timeline");
    const ShiftedLabels shifted = shift_horizon(labels, horizon_ms, preprocessed.fs);

    SessionExamples out;
    out.train = windows_in_intervals(preprocessed, labels, shifted, spec, split.train,
                                     horizon_ms, session_id, out.stats);
    out.val = windows_in_intervals(preprocessed, labels, shifted, spec, split.val, horizon_ms,
                                   session_id, out.stats);
    out.test = windows_in_intervals(preprocessed, labels, shifted, spec, split.test,
                                    horizon_ms, session_id, out.stats);
    return out;
}

void write_dataset(const std::string& path, const Dataset& ds) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) raise(ErrorKind::Data, "cannot open for writing: " + path);
    auto put = [&](const void* data, std::size_t size) {
        if (std::fwrite(data, 1, size, f) != size) {
            std::fclose(f);
            raise(ErrorKind::Data, "write failed: " + path);
        }
    };
    put("M2D1", 4);
    const std::uint32_t c = ds.channels;
    const std::uint32_t w = ds.window;
    const std::uint32_t n = static_cast<std::uint32_t>(ds.examples.size());
    put(&c, 4);
    put(&w, 4);
    put(&n, 4);
    for (const auto& e : ds.examples) {
        const std::uint8_t label = static_cast<std::uint8_t>(e.label);
        const std::uint16_t horizon = static_cast<std::uint16_t>(e.horizon_ms);
        put(&label, 1);
        put(&horizon, 2);
        put(&e.session_id, 4);
        put(&e.start_time, 8);
        put(e.window.data(), e.window.size() * sizeof(float));
    }
    if (std::fclose(f) != 0) raise(ErrorKind::Data, "write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) raise(ErrorKind::Data, "cannot open: " + path);
    auto get = [&](void* data, std::size_t size) {
        if (std::fread(data, 1, size, f) != size) {
            std::fclose(f);
            raise(ErrorKind::Data, "truncated dataset cache: " + path);
        }
    };
    char magic[4];
    get(magic, 4);
    if (std::memcmp(magic, "M2D1", 4) != 0) {
        std::fclose(f);
        raise(ErrorKind::Data, path + ": not a dataset cache (bad magic)");
    }
    Dataset ds;
    std::uint32_t n = 0;
    get(&ds.channels, 4);
    get(&ds.window, 4);
    get(&n, 4);
    ds.examples.resize(n);
    const std::size_t values = static_cast<std::size_t>(ds.channels) * ds.window;
    for (auto& e : ds.examples) {
        std::uint8_t label = 0;
        std::uint16_t horizon = 0;
        get(&label, 1);
        get(&horizon, 2);
        get(&e.session_id, 4);
        get(&e.start_time, 8);
        if (label > static_cast<std::uint8_t>(ActionLabel::Reverse)) {
            std::fclose(f);
            raise(ErrorKind::Data, path + ": invalid label byte");
        }
        e.label = static_cast<ActionLabel>(label);
        e.horizon_ms = horizon;
        e.window.resize(values);
        get(e.window.data(), values * sizeof(float));
    }
    std::fclose(f);
    return ds;
}

}  // namespace m2d
