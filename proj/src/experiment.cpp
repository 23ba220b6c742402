#include "m2d/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "m2d/errors.hpp"
#include "m2d/io.hpp"
#include "m2d/kde.hpp"
#include "m2d/kinematics.hpp"
#include "m2d/sigprep.hpp"

namespace m2d {

namespace fs = std::filesystem;

namespace {

std::string two_dec(double v, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string horizon_dir(int horizon_ms) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "h%04d", horizon_ms);
    return buf;
}

void echo_config(const ExperimentConfig& cfg) {
    io::write_text_file(cfg.output_dir + "/config.resolved.txt", cfg.resolved_text());
}

// Removes a stage's subtree when the stage throws, then rethrows.
template <class Fn>
void with_cleanup(const std::vector<std::string>& stage_paths, Fn&& fn) {
    try {
        fn();
    } catch (...) {
        for (const auto& p : stage_paths) {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
        throw;
    }
}

SynthConfig session_synth_config(const ExperimentConfig& cfg, int session) {
    SynthConfig s = cfg.synth;
    s.seed = cfg.synth.seed + static_cast<std::uint64_t>(session - 1);
    return s;
}

Thresholds resolve_thresholds(const ExperimentConfig& cfg,
                              const std::vector<KinematicTrack>& tracks) {
    if (!cfg.estimate_thresholds) return cfg.thresholds;
    return estimate_thresholds(tracks);
}

std::string labels_path(const ExperimentConfig& cfg, int session) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%03d", session);
    return cfg.output_dir + "/labels/" + buf + ".csv";
}

struct HorizonDataset {
    Dataset train;
    Dataset val;
    Dataset test;
    BuildStats stats;
};

}  // namespace

std::string session_dir(const ExperimentConfig& cfg, int session) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%03d", session);
    return cfg.output_dir + "/sessions/" + buf;
}

std::string horizons_csv_path(const ExperimentConfig& cfg) {
    return cfg.output_dir + "/horizons.csv";
}

std::uint64_t horizon_seed(const ExperimentConfig& cfg, int horizon_ms) {
    return Rng(cfg.train.seed).fork("horizon", static_cast<std::uint64_t>(horizon_ms)).next_u64();
}

void stage_synth(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate();
    echo_config(cfg);
    with_cleanup({cfg.output_dir + "/sessions"}, [&] {
        for (int s = 1; s <= cfg.sessions; ++s) {
            const SynthSession session = make_session(session_synth_config(cfg, s));
            export_session(session.schedule, session.track, session.eeg, session_dir(cfg, s));
            if (verbose) {
                std::fprintf(stderr, "[synth] session %d: %zu segments, turn share %.3f\n", s,
                             session.schedule.segments.size(),
                             session.schedule.turning_share());
                for (const auto& w : session.warnings)
                    std::fprintf(stderr, "[synth] warning: %s\n", w.c_str());
            }
        }
    });
}

void stage_label(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate();
    echo_config(cfg);
    with_cleanup({cfg.output_dir + "/labels"}, [&] {
        std::vector<KinematicTrack> tracks;
        tracks.reserve(static_cast<std::size_t>(cfg.sessions));
        for (int s = 1; s <= cfg.sessions; ++s) {
            const std::string dir = session_dir(cfg, s);
            if (!fs::exists(dir + "/kinematics.csv"))
                raise(ErrorKind::Data,
                      "label: missing " + dir + "/kinematics.csv (run the synth stage first)");
            tracks.push_back(io::read_kinematics_csv(dir + "/kinematics.csv"));
        }
        const Thresholds th = resolve_thresholds(cfg, tracks);
        io::write_text_file(cfg.output_dir + "/labels/thresholds.txt",
                            "v_th = " + two_dec(th.v_th) +
                                "\nomega_th = " + two_dec(th.omega_th) + "\n");
        for (int s = 1; s <= cfg.sessions; ++s) {
            const std::string dir = session_dir(cfg, s);
            const EegRecording eeg = io::read_eeg_csv(dir + "/eeg.csv");
            const AlignedKinematics aligned =
                resample_to_eeg(tracks[static_cast<std::size_t>(s - 1)], eeg.timestamps);
            LabelSeries labels;
            labels.timestamps = aligned.timestamps;
            labels.labels.resize(aligned.size());
            for (std::size_t i = 0; i < aligned.size(); ++i)
                labels.labels[i] = classify_sample(aligned.v[i], aligned.psi_dot[i],
                                                   aligned.delta_theta[i], th);
            io::write_labels_csv(labels_path(cfg, s), labels);
            if (verbose)
                std::fprintf(stderr, "[label] session %d: %zu labels (v_th=%.3f omega_th=%.3f)\n",
                             s, labels.size(), th.v_th, th.omega_th);
        }
    });
}

void stage_build(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate();
    echo_config(cfg);
    with_cleanup({cfg.output_dir + "/build"}, [&] {
        // Per-session preprocessing and split intervals are shared by all
        // horizons; the split is computed on the unshifted labels.
        std::vector<EegRecording> prepped;
        std::vector<LabelSeries> labels;
        std::vector<SplitIntervals> splits;
        for (int s = 1; s <= cfg.sessions; ++s) {
            const std::string dir = session_dir(cfg, s);
            if (!fs::exists(labels_path(cfg, s)))
                raise(ErrorKind::Data, "build: missing " + labels_path(cfg, s) +
                                           " (run the label stage first)");
            EegRecording eeg = io::read_eeg_csv(dir + "/eeg.csv");
            LabelSeries lab = io::read_labels_csv(labels_path(cfg, s));
            if (lab.size() != eeg.samples())
                raise(ErrorKind::Data, "build: label/EEG length mismatch in session " +
                                           std::to_string(s));
            prepped.push_back(preprocess(eeg, cfg.prep));
            splits.push_back(stratified_temporal_split(lab, cfg.split));
            labels.push_back(std::move(lab));
            if (verbose)
                for (const auto& w : splits.back().warnings)
                    std::fprintf(stderr, "[build] session %d: %s\n", s, w.c_str());
        }

        std::ostringstream log;
        for (int h : cfg.horizons_ms) {
            Dataset train_ds, val_ds, test_ds;
            BuildStats stats;
            const auto& names = prepped.front().channel_names;
            for (auto* ds : {&train_ds, &val_ds, &test_ds}) {
                ds->channels = static_cast<std::uint32_t>(prepped.front().channels());
                ds->window = static_cast<std::uint32_t>(cfg.window.window_samples(cfg.synth.eeg_fs));
                ds->channel_names = names;
            }
            for (int s = 1; s <= cfg.sessions; ++s) {
                const auto& eeg = prepped[static_cast<std::size_t>(s - 1)];
                SessionExamples se = build_session_examples(
                    eeg, labels[static_cast<std::size_t>(s - 1)], h, cfg.window,
                    splits[static_cast<std::size_t>(s - 1)], static_cast<std::uint32_t>(s));
                auto append = [](std::vector<Example>& dst, std::vector<Example>& src) {
                    for (auto& e : src) dst.push_back(std::move(e));
                };
                append(train_ds.examples, se.train);
                append(val_ds.examples, se.val);
                append(test_ds.examples, se.test);
                stats.windows_total += se.stats.windows_total;
                stats.windows_rejected += se.stats.windows_rejected;
                stats.dropped_out_of_set += se.stats.dropped_out_of_set;
                for (int k = 0; k < kNumClasses; ++k) stats.per_class[k] += se.stats.per_class[k];
            }
            if (train_ds.examples.empty() || test_ds.examples.empty())
                raise(ErrorKind::Data, "build: empty train or test set at horizon " +
                                           std::to_string(h) + " ms");

            const std::size_t train_before = train_ds.examples.size();
            if (cfg.split.sampler == Sampler::RandomOversample)
                train_ds.examples = oversample(std::move(train_ds.examples),
                                               cfg.split.sampler_seed);

            if (!cfg.channel_subset.empty()) {
                train_ds = select_channels(train_ds, cfg.channel_subset);
                val_ds = select_channels(val_ds, cfg.channel_subset);
                test_ds = select_channels(test_ds, cfg.channel_subset);
            }

            const std::string dir = cfg.output_dir + "/build/" + horizon_dir(h);
            write_dataset(dir + "/train.m2d", train_ds);
            write_dataset(dir + "/val.m2d", val_ds);
            write_dataset(dir + "/test.m2d", test_ds);

            log << "horizon_ms=" << h << "\n";
            log << "windows_total=" << stats.windows_total << "\n";
            log << "windows_rejected=" << stats.windows_rejected << "\n";
            log << "rejected_fraction="
                << two_dec(stats.windows_total > 0
                               ? static_cast<double>(stats.windows_rejected) /
                                     static_cast<double>(stats.windows_total)
                               : 0.0)
                << "\n";
            log << "dropped_out_of_set=" << stats.dropped_out_of_set << "\n";
            log << "count_forward=" << stats.per_class[0] << "\n";
            log << "count_turn_left=" << stats.per_class[1] << "\n";
            log << "count_turn_right=" << stats.per_class[2] << "\n";
            log << "train_examples=" << train_before << "\n";
            log << "train_after_sampling=" << train_ds.examples.size() << "\n";
            log << "val_examples=" << val_ds.examples.size() << "\n";
            log << "test_examples=" << test_ds.examples.size() << "\n";
            log << "\n";
            if (verbose)
                std::fprintf(stderr, "[build] horizon %d: %zu train / %zu val / %zu test\n", h,
                             train_ds.examples.size(), val_ds.examples.size(),
                             test_ds.examples.size());
        }
        io::write_text_file(cfg.output_dir + "/build/build_log.txt", log.str());
    });
}

namespace {

ModelSpec model_spec_for(const ExperimentConfig& cfg, const Dataset& ds) {
    ModelSpec spec;
    spec.arch = cfg.arch;
    spec.channels = static_cast<int>(ds.channels);
    spec.window = static_cast<int>(ds.window);
    spec.hidden = cfg.recurrent_hidden;
    spec.validate();
    return spec;
}

}  // namespace

void stage_train(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate();
    echo_config(cfg);
    with_cleanup({cfg.output_dir + "/train"}, [&] {
        for (int h : cfg.horizons_ms) {
            const std::string build_dir = cfg.output_dir + "/build/" + horizon_dir(h);
            if (!fs::exists(build_dir + "/train.m2d"))
                raise(ErrorKind::Data, "train: missing " + build_dir +
                                           "/train.m2d (run the build stage first)");
            const Dataset train_ds = read_dataset(build_dir + "/train.m2d");
            const Dataset val_ds = read_dataset(build_dir + "/val.m2d");
            const ModelSpec spec = model_spec_for(cfg, train_ds);

            TrainConfig tc = cfg.train;
            tc.seed = horizon_seed(cfg, h);
            const TrainResult result = train(spec, tc, train_ds.examples, val_ds.examples);

            const std::string dir = cfg.output_dir + "/train/" + horizon_dir(h);
            write_checkpoint(dir + "/checkpoint.m2dc", result.best);
            std::ostringstream log;
            log << "epoch,train_loss,val_macro_f1,val_balanced_accuracy\n";
            for (const auto& e : result.log)
                log << e.epoch << "," << two_dec(e.train_loss) << "," << two_dec(e.val_macro_f1)
                    << "," << two_dec(e.val_balanced_accuracy) << "\n";
            io::write_text_file(dir + "/train_log.csv", log.str());
            if (verbose)
                std::fprintf(stderr,
                             "[train] horizon %d: best val macro-F1 %.4f at epoch %d (%zu params)\n",
                             h, result.best.val_macro_f1, result.best.epoch,
                             result.best.params.size());
        }
    });
}

std::vector<HorizonResult> stage_eval(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate();
    echo_config(cfg);
    std::vector<HorizonResult> results;
    with_cleanup({cfg.output_dir + "/eval", horizons_csv_path(cfg)}, [&] {
        for (int h : cfg.horizons_ms) {
            const std::string build_dir = cfg.output_dir + "/build/" + horizon_dir(h);
            const std::string ckpt_path =
                cfg.output_dir + "/train/" + horizon_dir(h) + "/checkpoint.m2dc";
            if (!fs::exists(ckpt_path))
                raise(ErrorKind::Data,
                      "eval: missing " + ckpt_path + " (run the train stage first)");
            const Dataset test_ds = read_dataset(build_dir + "/test.m2d");
            const Checkpoint ckpt = read_checkpoint(ckpt_path);

            std::vector<int> truth;
            truth.reserve(test_ds.examples.size());
            for (const auto& e : test_ds.examples) truth.push_back(*class_index(e.label));
            const auto preds = predict(ckpt, test_ds.examples);
            HorizonResult r;
            r.horizon_ms = h;
            r.test = evaluate(truth, preds, kNumClasses);
            results.push_back(r);

            const std::string dir = cfg.output_dir + "/eval/" + horizon_dir(h);
            io::write_text_file(dir + "/metrics.json", report_to_json(r.test));
            std::ostringstream cm;
            for (int i = 0; i < kNumClasses; ++i) {
                for (int j = 0; j < kNumClasses; ++j)
                    cm << (j ? "," : "") << r.test.confusion[i][j];
                cm << "\n";
            }
            io::write_text_file(dir + "/confusion.csv", cm.str());
            if (verbose)
                std::fprintf(stderr, "[eval] horizon %d: test macro-F1 %.4f\n", h,
                             r.test.macro_f1);
        }

        std::ostringstream csv;
        csv << "horizon_ms,macro_f1,balanced_accuracy,accuracy,"
               "recall_forward,recall_turn_left,recall_turn_right\n";
        for (const auto& r : results) {
            csv << r.horizon_ms << "," << two_dec(r.test.macro_f1) << ","
                << two_dec(r.test.balanced_accuracy) << "," << two_dec(r.test.accuracy);
            for (int k = 0; k < kNumClasses; ++k)
                csv << "," << two_dec(r.test.per_class[static_cast<std::size_t>(k)].recall);
            csv << "\n";
        }
        io::write_text_file(horizons_csv_path(cfg), csv.str());
    });
    return results;
}

std::string stage_report(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate();
    const std::string path = horizons_csv_path(cfg);
    if (!fs::exists(path))
        raise(ErrorKind::Data, "report: missing " + path + " (run the sweep or eval stage first)");
    const std::string csv = io::read_text_file(path);

    // Parse the horizons table back; argmax macro-F1, ties to the earliest
    // horizon.
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    int best_h = -1;
    double best_f1 = -1.0;
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(line);
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        const int h = std::stoi(line.substr(0, c1));
        const double f1 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        if (f1 > best_f1) {
            best_f1 = f1;
            best_h = h;
        }
    }
    if (best_h < 0) raise(ErrorKind::Data, "report: horizons.csv has no rows");

    std::ostringstream out;
    out << "horizon sweep over " << rows.size() << " horizon(s)\n\n";
    out << "horizon_ms  macro_f1  balanced_accuracy  accuracy\n";
    for (const auto& r : rows) {
        std::istringstream rs(r);
        std::string h, f1, ba, acc;
        std::getline(rs, h, ',');
        std::getline(rs, f1, ',');
        std::getline(rs, ba, ',');
        std::getline(rs, acc, ',');
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%10s  %8s  %17s  %8s\n", h.c_str(), f1.c_str(),
                      ba.c_str(), acc.c_str());
        out << buf;
    }
    out << "\noptimal_horizon_ms = " << best_h << "\n";
    out << "optimal_macro_f1 = " << two_dec(best_f1) << "\n";
    const std::string text = out.str();
    with_cleanup({cfg.output_dir + "/summary.txt"},
                 [&] { io::write_text_file(cfg.output_dir + "/summary.txt", text); });
    if (verbose) std::fputs(text.c_str(), stderr);
    return text;
}

std::vector<HorizonResult> run_experiment(const ExperimentConfig& cfg, bool verbose) {
    stage_synth(cfg, verbose);
    stage_label(cfg, verbose);
    stage_build(cfg, verbose);
    stage_train(cfg, verbose);
    auto results = stage_eval(cfg, verbose);
    stage_report(cfg, verbose);
    return results;
}

}  // namespace m2d
