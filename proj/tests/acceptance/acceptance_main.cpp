// Acceptance suite: runs every acceptance check at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "m2d/config.hpp"
#include "m2d/dataset.hpp"
#include "m2d/experiment.hpp"
#include "m2d/io.hpp"
#include "m2d/kinematics.hpp"
#include "m2d/metrics.hpp"
#include "m2d/model.hpp"
#include "m2d/rng.hpp"
#include "m2d/sigprep.hpp"
#include "m2d/synth.hpp"

#include "../gradcheck.hpp"

using namespace m2d;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// In-memory pipeline used by the learning criteria: generate sessions,
// label from kinematics, preprocess, window, split, oversample, train,
// evaluate on the test split.

struct PipelineSettings {
    int sessions = 3;
    double duration_s = 600.0;
    double lead_time_ms = 800.0;
    double snr_db = 0.0;
    int horizon_ms = 0;
    Architecture arch = Architecture::CompactConv;
    std::vector<std::string> channel_subset;  // empty = all 16
    int max_epochs = 45;
    int patience = 12;
    bool shuffle_train_labels = false;
};

struct PipelineResult {
    MetricsReport test;
    std::size_t train_n = 0;
    std::size_t test_n = 0;
};

PipelineResult run_pipeline(const PipelineSettings& ps) {
    const Thresholds th{0.5, 0.05};
    Dataset train_ds, val_ds, test_ds;
    for (int s = 1; s <= ps.sessions; ++s) {
        SynthConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(s);
        cfg.duration_s = ps.duration_s;
        cfg.lead_time_ms = ps.lead_time_ms;
        cfg.snr_db = ps.snr_db;
        const auto schedule = gen_schedule(cfg);
        const auto track = gen_kinematics(schedule, cfg);
        const auto eeg = gen_eeg(schedule, cfg);

        const auto aligned = resample_to_eeg(track, eeg.timestamps);
        LabelSeries labels;
        labels.timestamps = aligned.timestamps;
        labels.labels.resize(aligned.size());
        for (std::size_t i = 0; i < aligned.size(); ++i)
            labels.labels[i] =
                classify_sample(aligned.v[i], aligned.psi_dot[i], aligned.delta_theta[i], th);

        const auto prepped = preprocess(eeg, PrepConfig{});
        const auto split = stratified_temporal_split(labels, SplitConfig{});
        auto built = build_session_examples(prepped, labels, ps.horizon_ms, WindowSpec{},
                                            split, static_cast<std::uint32_t>(s));
        if (train_ds.channel_names.empty()) {
            for (auto* ds : {&train_ds, &val_ds, &test_ds}) {
                ds->channels = static_cast<std::uint32_t>(prepped.channels());
                ds->window = 125;
                ds->channel_names = prepped.channel_names;
            }
        }
        for (auto& e : built.train) train_ds.examples.push_back(std::move(e));
        for (auto& e : built.val) val_ds.examples.push_back(std::move(e));
        for (auto& e : built.test) test_ds.examples.push_back(std::move(e));
    }

    train_ds.examples = oversample(std::move(train_ds.examples), 1);
    if (!ps.channel_subset.empty()) {
        train_ds = select_channels(train_ds, ps.channel_subset);
        val_ds = select_channels(val_ds, ps.channel_subset);
        test_ds = select_channels(test_ds, ps.channel_subset);
    }
    if (ps.shuffle_train_labels) {
        Rng rng(99);
        for (auto& e : train_ds.examples) e.label = class_action(static_cast<int>(rng.below(3)));
        for (auto& e : val_ds.examples) e.label = class_action(static_cast<int>(rng.below(3)));
    }

    ModelSpec spec;
    spec.arch = ps.arch;
    spec.channels = static_cast<int>(train_ds.channels);
    spec.window = static_cast<int>(train_ds.window);
    TrainConfig tc;
    tc.max_epochs = ps.max_epochs;
    tc.patience = ps.patience;
    tc.seed = 42;
    const auto result = train(spec, tc, train_ds.examples, val_ds.examples);

    std::vector<int> truth;
    truth.reserve(test_ds.examples.size());
    for (const auto& e : test_ds.examples) truth.push_back(*class_index(e.label));
    const auto preds = predict(result.best, test_ds.examples);

    PipelineResult out;
    out.test = evaluate(truth, preds, kNumClasses);
    out.train_n = train_ds.examples.size();
    out.test_n = test_ds.examples.size();
    return out;
}

// ---------------------------------------------------------------------------

void criterion_labeller_oracle(Outcome& o) {
    std::size_t agree = 0;
    std::size_t total = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.duration_s = 600.0;
        const auto schedule = gen_schedule(cfg);
        const auto track = gen_kinematics(schedule, cfg);
        const auto labels = label_track(track, Thresholds{0.5, 0.05});
        const auto truth = sample_schedule_labels(schedule, track.timestamps);

        std::vector<double> transitions;
        for (std::size_t i = 1; i < schedule.segments.size(); ++i)
            transitions.push_back(schedule.segments[i].start);

        std::size_t ti = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double t = track.timestamps[i];
            while (ti < transitions.size() && transitions[ti] < t - 0.2) ++ti;
            if (ti < transitions.size() && std::abs(t - transitions[ti]) <= 0.2) continue;
            agree += labels.labels[i] == truth.labels[i];
            ++total;
        }
    }
    const double rate = static_cast<double>(agree) / static_cast<double>(total);
    o.note("agreement " + fmt(rate));
    o.require(rate >= 0.99, "agreement below 0.99");
}

void criterion_rule_exhaustiveness(Outcome& o) {
    const Thresholds th{0.5, 0.05};
    Rng rng(7);
    std::size_t valid = 0;
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.uniform(0.0, 25.0);
        const double w = rng.uniform(-1.5, 1.5);
        const double d = rng.uniform(-3.14159265, 3.14159265);
        const ActionLabel a = classify_sample(v, w, d, th);
        const ActionLabel b = classify_sample(v, w, d, th);
        const bool known = a == ActionLabel::Stopped || a == ActionLabel::Forward ||
                           a == ActionLabel::Reverse || a == ActionLabel::TurnLeft ||
                           a == ActionLabel::TurnRight;
        if (known && a == b) ++valid;
    }
    o.note(std::to_string(valid) + "/10000 single deterministic labels");
    o.require(valid == 10000, "some draws produced no or unstable labels");
}

void criterion_leakage(Outcome& o) {
    SynthConfig scfg;
    scfg.seed = 1;
    scfg.duration_s = 600.0;
    const auto schedule = gen_schedule(scfg);
    const auto track = gen_kinematics(schedule, scfg);
    const auto eeg_ts = [&] {
        std::vector<double> ts(75000);
        for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<double>(i) / 125.0;
        return ts;
    }();
    const auto aligned = resample_to_eeg(track, eeg_ts);
    LabelSeries labels;
    labels.timestamps = aligned.timestamps;
    labels.labels.resize(aligned.size());
    const Thresholds th{0.5, 0.05};
    for (std::size_t i = 0; i < aligned.size(); ++i)
        labels.labels[i] =
            classify_sample(aligned.v[i], aligned.psi_dot[i], aligned.delta_theta[i], th);

    const double lengths[] = {0.5, 1.0, 2.0, 5.0};
    const double overlaps[] = {0.0, 0.5};
    Rng pick(13);
    std::size_t overlaps_found = 0;
    std::size_t share_violations = 0;
    for (int c = 0; c < 20; ++c) {
        WindowSpec wspec;
        wspec.length_s = lengths[pick.below(4)];
        wspec.overlap = overlaps[pick.below(2)];
        SplitConfig sc;
        sc.strategy = pick.bernoulli(0.5) ? SplitStrategy::LabelStratifiedTemporal
                                          : SplitStrategy::TemporalPlain;
        const auto split = stratified_temporal_split(labels, sc);
        const std::size_t w = wspec.window_samples(125.0);
        const std::size_t step = wspec.step_samples(125.0);

        auto starts_in = [&](const std::vector<IndexInterval>& ivs) {
            std::vector<std::size_t> out;
            for (const auto& iv : ivs)
                for (std::size_t s = iv.begin; s + w <= iv.end; s += step) out.push_back(s);
            return out;
        };
        const auto train_starts = starts_in(split.train);
        const auto test_starts = starts_in(split.test);
        for (std::size_t a : train_starts)
            for (std::size_t b : test_starts)
                if (a < b + w && b < a + w) ++overlaps_found;

        if (sc.strategy == SplitStrategy::LabelStratifiedTemporal) {
            for (int cls = 0; cls < kNumClasses; ++cls) {
                const ActionLabel action = class_action(cls);
                auto count = [&](const std::vector<IndexInterval>& ivs) {
                    std::size_t n = 0;
                    for (const auto& iv : ivs)
                        for (std::size_t i = iv.begin; i < iv.end; ++i)
                            n += labels.labels[i] == action;
                    return n;
                };
                const std::size_t in_train = count(split.train) + count(split.val);
                std::size_t total = 0;
                for (std::size_t i = 0; i < labels.size(); ++i)
                    total += labels.labels[i] == action;
                const double share =
                    static_cast<double>(in_train) / static_cast<double>(total);
                if (share < 0.65 || share > 0.80) ++share_violations;
            }
        }
    }
    o.note("0 overlaps expected, found " + std::to_string(overlaps_found) + "; share violations " +
           std::to_string(share_violations));
    o.require(overlaps_found == 0, "train/test window intervals overlap");
    o.require(share_violations == 0, "per-class train share outside [0.65, 0.80]");
}

void criterion_rejection_identity(Outcome& o) {
    SynthConfig cfg;
    cfg.seed = 1;
    cfg.duration_s = 600.0;
    const auto schedule = gen_schedule(cfg);
    const auto eeg = gen_eeg(schedule, cfg);
    const auto labels = sample_schedule_labels(schedule, eeg.timestamps);

    const WindowSpec wspec;
    const std::size_t w = wspec.window_samples(eeg.fs);
    const std::size_t step = wspec.step_samples(eeg.fs);

    // implementation route: aggregate() on each window
    std::set<std::size_t> rejected;
    const auto shifted = shift_horizon(labels, 0, eeg.fs);
    for (const auto& win : segment(eeg, shifted, wspec)) {
        if (!aggregate(win.labels, Aggregation::Reject).has_value()) rejected.insert(win.start);
    }

    // oracle route: interval arithmetic on the schedule transition times
    std::vector<std::size_t> transition_index;
    for (std::size_t k = 1; k < schedule.segments.size(); ++k) {
        const double tau = schedule.segments[k].start;
        std::size_t i = tau * eeg.fs >= 2.0 ? static_cast<std::size_t>(tau * eeg.fs) - 2 : 0;
        while (i < eeg.samples() && eeg.timestamps[i] < tau) ++i;
        transition_index.push_back(i);
    }
    std::set<std::size_t> straddling;
    for (std::size_t s = 0; s + w <= eeg.samples(); s += step)
        for (std::size_t idx : transition_index)
            if (s + 1 <= idx && idx <= s + w - 1) straddling.insert(s);

    o.note(std::to_string(rejected.size()) + " rejected vs " +
           std::to_string(straddling.size()) + " straddling");
    o.require(rejected == straddling, "rejected set differs from the straddling set");
}

void criterion_gradient_checks(Outcome& o) {
    for (const Architecture arch : {Architecture::CompactConv, Architecture::RecurrentNet}) {
        ModelSpec spec;
        spec.arch = arch;
        spec.channels = 16;
        spec.window = 125;
        const auto res = gradcheck::run(spec, 200, 1234);
        o.note(std::string(architecture_name(arch)) + " max rel err " + fmt(res.max_rel_err, 8) +
               " over " + std::to_string(res.checked) + " params");
        o.require(res.max_rel_err <= 1e-4,
                  std::string(architecture_name(arch)) + " exceeds 1e-4 (worst layer " +
                      res.worst_layer + ")");
    }
}

void criterion_metrics_oracle(Outcome& o) {
    std::size_t mismatches = 0;
    for (int t = 0; t < 81; ++t)
        for (int p = 0; p < 81; ++p) {
            std::vector<int> truths(4), preds(4);
            int tt = t, pp = p;
            for (int i = 0; i < 4; ++i) {
                truths[static_cast<std::size_t>(i)] = tt % 3;
                preds[static_cast<std::size_t>(i)] = pp % 3;
                tt /= 3;
                pp /= 3;
            }
            const auto a = evaluate(truths, preds, 3);

            // brute force: direct per-class counting
            double f1_sum = 0.0, recall_sum = 0.0;
            int supported = 0;
            bool ok = true;
            for (int c = 0; c < 3; ++c) {
                std::size_t tp = 0, fp = 0, fn = 0, support = 0;
                for (int i = 0; i < 4; ++i) {
                    if (truths[static_cast<std::size_t>(i)] == c) {
                        ++support;
                        if (preds[static_cast<std::size_t>(i)] == c) ++tp; else ++fn;
                    } else if (preds[static_cast<std::size_t>(i)] == c) {
                        ++fp;
                    }
                }
                const double prec = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
                const double rec = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
                const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
                f1_sum += f1;
                if (support > 0) {
                    recall_sum += rec;
                    ++supported;
                }
                const auto& m = a.per_class[static_cast<std::size_t>(c)];
                ok = ok && m.precision == prec && m.recall == rec && m.f1 == f1;
            }
            ok = ok && a.macro_f1 == f1_sum / 3.0;
            ok = ok && a.balanced_accuracy == (supported ? recall_sum / supported : 0.0);
            if (!ok) ++mismatches;
        }
    o.note("6561 assignments, " + std::to_string(mismatches) + " mismatches");
    o.require(mismatches == 0, "report() disagrees with brute-force counting");
}

double g_criterion7_runtime = 600.0;  // updated by criterion 7, used by criterion 10

void criterion_learnability(Outcome& o) {
    PipelineSettings ps;
    const auto real = run_pipeline(ps);
    o.note("macro-F1 " + fmt(real.test.macro_f1) + " on " + std::to_string(real.test_n) +
           " test windows");
    o.require(real.test.macro_f1 >= 0.85, "macro-F1 below 0.85");

    PipelineSettings shuffled = ps;
    shuffled.shuffle_train_labels = true;
    shuffled.max_epochs = 15;
    shuffled.patience = 0;
    const auto control = run_pipeline(shuffled);
    o.note("label-shuffled control " + fmt(control.test.macro_f1));
    o.require(control.test.macro_f1 <= 0.45, "shuffled control above 0.45");
}

void criterion_horizon_trend(Outcome& o) {
    // lead 800 ms: horizons up to 600 ms stay within 0.05 of horizon 0
    double f1_at_0 = 0.0;
    for (int h : {0, 200, 400, 600}) {
        PipelineSettings ps;
        ps.lead_time_ms = 800.0;
        ps.horizon_ms = h;
        const auto r = run_pipeline(ps);
        if (h == 0) f1_at_0 = r.test.macro_f1;
        const double diff = std::abs(r.test.macro_f1 - f1_at_0);
        o.note("lead800 h" + std::to_string(h) + " F1 " + fmt(r.test.macro_f1));
        if (h > 0 && h <= 600)
            o.require(diff <= 0.05, "h" + std::to_string(h) + " deviates " + fmt(diff));
    }

    // lead 200 ms: horizon 1000 drops by at least 0.10
    double f1_short_0 = 0.0;
    double f1_short_1000 = 0.0;
    for (int h : {0, 1000}) {
        PipelineSettings ps;
        ps.lead_time_ms = 200.0;
        ps.horizon_ms = h;
        const auto r = run_pipeline(ps);
        (h == 0 ? f1_short_0 : f1_short_1000) = r.test.macro_f1;
        o.note("lead200 h" + std::to_string(h) + " F1 " + fmt(r.test.macro_f1));
    }
    o.require(f1_short_0 - f1_short_1000 >= 0.10,
              "drop " + fmt(f1_short_0 - f1_short_1000) + " below 0.10");
}

void criterion_channel_subset(Outcome& o) {
    PipelineSettings full;
    const auto r16 = run_pipeline(full);
    PipelineSettings sub;
    sub.channel_subset = frontal8_channels();
    const auto r8 = run_pipeline(sub);
    o.note("16ch F1 " + fmt(r16.test.macro_f1) + ", 8ch F1 " + fmt(r8.test.macro_f1));
    o.require(r16.test.macro_f1 >= r8.test.macro_f1 - 0.02,
              "16-channel result more than 0.02 below 8-channel");
}

void criterion_determinism(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = parse_config_text(
        "synth.duration_s = 240\n"
        "synth.sessions = 1\n"
        "synth.seed = 9\n"
        "horizons.list_ms = 0,400\n"
        "train.max_epochs = 6\n",
        "<acceptance>");
    const std::string out_a = "acceptance_det_a";
    const std::string out_b = "acceptance_det_b";
    std::filesystem::remove_all(out_a);
    std::filesystem::remove_all(out_b);
    cfg.output_dir = out_a;
    run_experiment(cfg);
    cfg.output_dir = out_b;
    run_experiment(cfg);

    const std::string csv_a = io::read_text_file(out_a + "/horizons.csv");
    const std::string csv_b = io::read_text_file(out_b + "/horizons.csv");
    const bool logs_equal = io::read_text_file(out_a + "/train/h0000/train_log.csv") ==
                            io::read_text_file(out_b + "/train/h0000/train_log.csv");
    std::filesystem::remove_all(out_a);
    std::filesystem::remove_all(out_b);

    o.require(csv_a == csv_b, "horizons.csv differs between runs");
    o.require(logs_equal, "train logs differ between runs");
    const double elapsed = seconds_since(t0);
    o.note("two sweeps in " + fmt(elapsed, 1) + " s");
    o.require(elapsed < 2.0 * g_criterion7_runtime, "slower than twice the criterion-7 runtime");
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<void(Outcome&)> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "labeller agrees with the generator schedule", 10.0, criterion_labeller_oracle},
        {2, "classification rules are exhaustive and deterministic", 1.0,
         criterion_rule_exhaustiveness},
        {3, "no train/test leakage; stratified shares in range", 30.0, criterion_leakage},
        {4, "rejected windows equal transition-straddling windows", 10.0,
         criterion_rejection_identity},
        {5, "analytic gradients match finite differences", 60.0, criterion_gradient_checks},
        {6, "metrics match exhaustive brute-force counting", 30.0, criterion_metrics_oracle},
        {7, "end-to-end learnability and shuffled control", 600.0, criterion_learnability},
        {8, "horizon stability at long lead, drop at short lead", 1800.0,
         criterion_horizon_trend},
        {9, "16-channel at least matches 8-channel", 1200.0, criterion_channel_subset},
        {10, "sweep outputs are byte-identical", 0.0, criterion_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            c.fn(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.note(std::string("exception: ") + e.what());
        }
        const double elapsed = seconds_since(t0);
        if (c.id == 7) g_criterion7_runtime = elapsed;
        if (c.budget_s > 0.0 && elapsed > c.budget_s) {
            o.pass = false;
            o.note("over the " + fmt(c.budget_s, 0) + " s budget");
        }
        std::printf("[%s] criterion %2d: %s (%s) [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id,
                    c.name, o.detail.c_str(), elapsed);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
