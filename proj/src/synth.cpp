#include "m2d/synth.hpp"

#include <algorithm>
#include <cmath>

#include "m2d/errors.hpp"
#include "m2d/io.hpp"
#include "m2d/rng.hpp"

namespace m2d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kRampSeconds = 0.5;      // kinematic transition, centred on boundaries
constexpr double kBackgroundRms = 10.0;   // uV
// Voss rows span octaves down to fs/2^rows; 7 rows give a -1 slope across
// the 1-62 Hz EEG band with the spectrum flattening below ~1 Hz, matching
// how scalp 1/f activity levels off at very low frequencies.
constexpr int kPinkRows = 7;

double cosine_ramp(double u) {  // 0 -> 1 over u in [0, 1]
    return 0.5 * (1.0 - std::cos(kPi * std::clamp(u, 0.0, 1.0)));
}
}  // namespace

const std::vector<std::string>& default_channels() {
    static const std::vector<std::string> names = {
        "Fp1", "Fp2", "C3", "C4", "T3", "T4", "O1", "O2",
        "F7",  "F8",  "F3", "F4", "T5", "T6", "P3", "P4"};
    return names;
}

void SynthConfig::validate() const {
    if (!(eeg_fs > 0.0) || !(kin_fs > 0.0))
        raise(ErrorKind::Config, "synth: sampling rates must be positive");
    if (lead_time_ms < 0.0) raise(ErrorKind::Config, "synth: lead_time_ms must be >= 0");
    if (duration_s < 60.0) raise(ErrorKind::Config, "synth: duration must be >= 60 s");
    if (turn_fraction > 0.5)
        raise(ErrorKind::Config, "synth: turn_fraction > 0.5 is infeasible");
    if (!(turn_fraction > 0.0)) raise(ErrorKind::Config, "synth: turn_fraction must be > 0");
}

ActionLabel ManoeuvreSchedule::action_at(double t) const {
    for (const auto& s : segments)
        if (t >= s.start && t < s.end) return s.action;
    return segments.empty() ? ActionLabel::Stopped : segments.back().action;
}

double ManoeuvreSchedule::turning_share() const {
    double turning = 0.0;
    for (const auto& s : segments)
        if (s.action == ActionLabel::TurnLeft || s.action == ActionLabel::TurnRight)
            turning += s.end - s.start;
    return duration > 0.0 ? turning / duration : 0.0;
}

void ManoeuvreSchedule::validate() const {
    if (segments.empty()) raise(ErrorKind::InvalidInput, "schedule: no segments");
    if (segments.front().start != 0.0)
        raise(ErrorKind::InvalidInput, "schedule: first segment must start at 0");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.end - s.start >= 1.0 - 1e-9))
            raise(ErrorKind::InvalidInput, "schedule: segment shorter than 1 s");
        if (s.action == ActionLabel::Reverse)
            raise(ErrorKind::InvalidInput, "schedule: reverse segments are not generated");
        if (i > 0 && std::abs(s.start - segments[i - 1].end) > 1e-9)
            raise(ErrorKind::InvalidInput, "schedule: segments must be contiguous");
    }
    if (std::abs(segments.back().end - duration) > 1e-9)
        raise(ErrorKind::InvalidInput, "schedule: segments must cover [0, duration]");
}

ManoeuvreSchedule gen_schedule(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng = Rng(cfg.seed).fork("schedule");

    ManoeuvreSchedule out;
    out.duration = cfg.duration_s;

    double total = 0.0;
    double turning = 0.0;
    const double target = cfg.turn_fraction;

    while (total < cfg.duration_s) {
        // Event for this cycle: mostly a turn, occasionally a stop.
        const bool stop_event = rng.bernoulli(0.15);
        const bool left = rng.bernoulli(0.5);
        double event_dur;
        if (stop_event) {
            event_dur = rng.uniform(2.0, 6.0);
        } else {
            // Short-biased turn durations in [2, 5); brisk junction turns
            // dominate a route.
            const double u = rng.uniform();
            event_dur = 2.0 + 3.0 * u * u;
        }

        // Forward duration that lands the cumulative turning share on
        // target after this cycle, clamped to the 5-30 s range. When the
        // clamp binds, turn durations steer instead.
        const double event_turn = stop_event ? 0.0 : event_dur;
        double ideal = (turning + event_turn) / target - (total + event_dur);
        if (!stop_event) {
            if (ideal < 5.0)
                event_dur = rng.uniform(3.5, 5.0);
            else if (ideal > 30.0)
                event_dur = rng.uniform(2.0, 2.8);
            ideal = (turning + event_dur) / target - (total + event_dur);
        }
        const double forward_dur = std::clamp(ideal, 5.0, 30.0);

        out.segments.push_back({ActionLabel::Forward, total, total + forward_dur});
        total += forward_dur;
        if (total >= cfg.duration_s) break;

        const ActionLabel event_action =
            stop_event ? ActionLabel::Stopped
                       : (left ? ActionLabel::TurnLeft : ActionLabel::TurnRight);
        out.segments.push_back({event_action, total, total + event_dur});
        total += event_dur;
        if (!stop_event) turning += event_dur;
    }

    // Truncate to the requested duration; a sub-second leftover merges
    // into the previous segment.
    while (!out.segments.empty() && out.segments.back().start >= cfg.duration_s - 1.0)
        out.segments.pop_back();
    if (out.segments.empty())
        raise(ErrorKind::InvalidInput, "schedule: duration too short to place segments");
    out.segments.back().end = cfg.duration_s;

    out.validate();
    return out;
}

namespace {

// Piecewise-constant set-points with 0.5 s cosine transitions at the
// segment boundaries. A per-boundary offset shifts where the transition
// is centred: turn onsets start ramping at the boundary itself (the
// vehicle begins yawing as the manoeuvre starts), other transitions are
// centred. Boundaries are at least 1 s apart so ramps never overlap.
class SetPointCurve {
public:
    SetPointCurve(std::vector<double> boundaries, std::vector<double> offsets,
                  std::vector<double> values)
        : boundaries_(std::move(boundaries)),
          offsets_(std::move(offsets)),
          values_(std::move(values)) {}

    double at(double t) const {
        std::size_t seg = 0;
        while (seg + 1 < values_.size() && t >= boundaries_[seg]) ++seg;
        // boundaries_[i] separates values_[i] and values_[i+1]
        double v = values_[seg];
        if (seg > 0) {
            const double start = ramp_start(seg - 1);
            if (t < start + kRampSeconds) {
                const double u = (t - start) / kRampSeconds;
                v = values_[seg - 1] + (values_[seg] - values_[seg - 1]) * cosine_ramp(u);
            }
        }
        if (seg + 1 < values_.size()) {
            const double start = ramp_start(seg);
            if (t > start) {
                const double u = (t - start) / kRampSeconds;
                v = values_[seg] + (values_[seg + 1] - values_[seg]) * cosine_ramp(u);
            }
        }
        return v;
    }

private:
    double ramp_start(std::size_t boundary) const {
        return boundaries_[boundary] + offsets_[boundary] - kRampSeconds / 2.0;
    }

    std::vector<double> boundaries_;
    std::vector<double> offsets_;
    std::vector<double> values_;
};

}  // namespace

KinematicTrack gen_kinematics(const ManoeuvreSchedule& schedule, const SynthConfig& cfg) {
    cfg.validate();
    schedule.validate();
    Rng rng = Rng(cfg.seed).fork("kinematics");

    // Per-segment set-points. Turns inherit the speed of the preceding
    // moving segment so speed stays flat through a turn. A slow wander is
    // added on top so driving speeds form one broad distribution mode.
    std::vector<double> v_set;
    std::vector<double> w_set;
    double last_speed = rng.uniform(6.2, 10.8);
    for (const auto& seg : schedule.segments) {
        switch (seg.action) {
            case ActionLabel::Forward:
                last_speed = rng.uniform(6.2, 10.8);
                v_set.push_back(last_speed);
                w_set.push_back(0.0);
                break;
            case ActionLabel::TurnLeft:
            case ActionLabel::TurnRight: {
                const double mag = rng.uniform(0.15, 0.4);
                v_set.push_back(last_speed);
                w_set.push_back(seg.action == ActionLabel::TurnLeft ? mag : -mag);
                break;
            }
            default:
                v_set.push_back(0.02);
                w_set.push_back(0.0);
                break;
        }
    }
    std::vector<double> boundaries;
    std::vector<double> offsets;
    for (std::size_t i = 0; i + 1 < schedule.segments.size(); ++i) {
        boundaries.push_back(schedule.segments[i].end);
        const ActionLabel next = schedule.segments[i + 1].action;
        const bool turn_onset =
            next == ActionLabel::TurnLeft || next == ActionLabel::TurnRight;
        offsets.push_back(turn_onset ? 0.25 : 0.0);
    }
    const SetPointCurve v_curve(boundaries, offsets, v_set);
    const SetPointCurve w_curve(boundaries, offsets, w_set);

    const std::size_t n =
        static_cast<std::size_t>(std::llround(schedule.duration * cfg.kin_fs));
    const double dt = 1.0 / cfg.kin_fs;
    const double slip_phase = rng.uniform(0.0, 2.0 * kPi);
    const double wander_f1 = rng.uniform(0.015, 0.03);
    const double wander_f2 = rng.uniform(0.05, 0.09);
    const double wander_p1 = rng.uniform(0.0, 2.0 * kPi);
    const double wander_p2 = rng.uniform(0.0, 2.0 * kPi);

    KinematicTrack track;
    track.timestamps.resize(n);
    track.vx.resize(n);
    track.vy.resize(n);
    track.psi.resize(n);
    track.psi_dot.resize(n);

    double psi = rng.uniform(-kPi, kPi);
    double prev_w = w_curve.at(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double v_base = v_curve.at(t);
        // Wander fades out near stops so stopped segments stay below 0.1.
        const double wander = 0.8 * std::sin(2.0 * kPi * wander_f1 * t + wander_p1) +
                              0.4 * std::sin(2.0 * kPi * wander_f2 * t + wander_p2);
        const double v = v_base + wander * std::clamp(v_base / 5.0, 0.0, 1.0);
        const double w = w_curve.at(t);
        if (i > 0) {
            psi += 0.5 * (prev_w + w) * dt;  // trapezoidal heading integration
            psi = std::remainder(psi, 2.0 * kPi);
            if (psi <= -kPi) psi += 2.0 * kPi;
        }
        prev_w = w;

        // Small smooth slip keeps |delta_theta| < 0.1 while avoiding an
        // exactly-zero heading deviation.
        const double slip = 0.05 * std::sin(2.0 * kPi * 0.02 * t + slip_phase);
        const double course = psi + slip;

        track.timestamps[i] = t;
        track.vx[i] = v * std::cos(course) + rng.normal(0.0, 0.05);
        track.vy[i] = v * std::sin(course) + rng.normal(0.0, 0.05);
        track.psi[i] = psi;
        track.psi_dot[i] = w + rng.normal(0.0, 0.005);
    }
    return track;
}

namespace {

// Voss-McCartney pink noise: one white row per octave, each held and
// refreshed at its own rate, plus a per-sample white term.
class PinkNoise {
public:
    explicit PinkNoise(Rng rng) : rng_(rng) {
        for (double& r : rows_) r = rng_.normal();
    }

    double next() {
        ++counter_;
        int row = 0;
        std::uint64_t c = counter_;
        while ((c & 1) == 0 && row < kPinkRows - 1) {
            c >>= 1;
            ++row;
        }
        rows_[static_cast<std::size_t>(row)] = rng_.normal();
        double sum = rng_.normal();  // white row
        for (double r : rows_) sum += r;
        return sum / std::sqrt(static_cast<double>(kPinkRows + 1));
    }

private:
    Rng rng_;
    double rows_[kPinkRows] = {};
    std::uint64_t counter_ = 0;
};

// Signature envelopes for one turn segment. Every transition is preceded
// by a readiness ramp of lead-time duration peaking at the transition:
// the entry ramp (lateralized toward the turn) peaks at onset, then motor
// activity holds at a lower level through execution; the exit ramp (the
// steering-return preparation, weighted symmetrically) peaks at the
// segment end. ramp_start > onset - lead means the entry ramp was
// truncated at the preceding segment; its slope stays anchored to the
// full lead time.
constexpr double kOnsetPeakGain = 8.0;  // ramp peak relative to the hold level

struct TurnEnvelope {
    double onset;
    double end;
    double lead;
    double ramp_start;

    // entry ramp + execution hold, released over the final 0.1 s
    double hold_at(double t) const {
        if (t < ramp_start || t >= end) return 0.0;
        if (t < onset) return kOnsetPeakGain * (1.0 - (onset - t) / lead);
        const double release_start = std::max(onset, end - 0.1);
        if (t < release_start) return 1.0;
        return 0.5 * (1.0 + std::cos(kPi * (t - release_start) / (end - release_start)));
    }

    // exit-preparation ramp, clamped inside the segment
    double exit_at(double t) const {
        const double start = std::max(onset, end - lead);
        if (t < start || t >= end) return 0.0;
        return kOnsetPeakGain * (1.0 - (end - t) / lead);
    }
};

double hemisphere_weight(const std::string& name, ActionLabel turn) {
    static const std::vector<std::string> right = {"C4", "F4", "F8", "P4", "T4", "T6"};
    static const std::vector<std::string> left = {"C3", "F3", "F7", "P3", "T3", "T5"};
    const bool is_right = std::find(right.begin(), right.end(), name) != right.end();
    const bool is_left = std::find(left.begin(), left.end(), name) != left.end();
    if (!is_right && !is_left) return 0.0;
    const bool contralateral = (turn == ActionLabel::TurnLeft) ? is_right : is_left;
    return contralateral ? 1.0 : 1.0 / 3.0;
}

// The exit preparation engages both hemispheres equally; it marks an
// imminent transition without carrying direction.
double exit_weight(const std::string& name) {
    return hemisphere_weight(name, ActionLabel::TurnLeft) > 0.0 ? 1.0 : 0.0;
}

}  // namespace

EegRecording gen_eeg(const ManoeuvreSchedule& schedule, const SynthConfig& cfg,
                     std::vector<std::string>* warnings) {
    cfg.validate();
    schedule.validate();
    const Rng base = Rng(cfg.seed).fork("eeg");

    EegRecording rec;
    rec.fs = cfg.eeg_fs;
    rec.channel_names = cfg.channels.empty() ? default_channels() : cfg.channels;
    const std::size_t n_samples =
        static_cast<std::size_t>(std::llround(schedule.duration * cfg.eeg_fs));
    rec.timestamps.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        rec.timestamps[i] = static_cast<double>(i) / cfg.eeg_fs;
    rec.data.assign(rec.channel_names.size() * n_samples, 0.0);

    const double line_amp = 0.1 * kBackgroundRms;
    const double line_phase = base.fork("line").uniform(0.0, 2.0 * kPi);

    // Turn envelopes, with ramps truncated at the preceding segment start.
    const double lead = cfg.lead_time_ms / 1000.0;
    std::vector<TurnEnvelope> left_turns;
    std::vector<TurnEnvelope> right_turns;
    std::size_t truncated = 0;
    for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
        const auto& seg = schedule.segments[i];
        if (seg.action != ActionLabel::TurnLeft && seg.action != ActionLabel::TurnRight)
            continue;
        const double prev_start = i > 0 ? schedule.segments[i - 1].start : 0.0;
        TurnEnvelope env{seg.start, seg.end, std::max(lead, 1e-9),
                         std::max(seg.start - lead, prev_start)};
        if (env.ramp_start > seg.start - lead + 1e-12) ++truncated;
        (seg.action == ActionLabel::TurnLeft ? left_turns : right_turns).push_back(env);
    }
    if (truncated > 0 && warnings != nullptr)
        warnings->push_back("gen_eeg: lead time exceeds the preceding segment for " +
                            std::to_string(truncated) + " turn(s); ramp truncated");

    const double amp = kBackgroundRms * std::pow(10.0, cfg.snr_db / 20.0);

    for (std::size_t c = 0; c < rec.channel_names.size(); ++c) {
        PinkNoise pink(base.fork("ch", c));
        const double w_left_turn = hemisphere_weight(rec.channel_names[c], ActionLabel::TurnLeft);
        const double w_right_turn = hemisphere_weight(rec.channel_names[c], ActionLabel::TurnRight);
        const double w_exit = exit_weight(rec.channel_names[c]);
        double* x = rec.channel(c);

        for (std::size_t i = 0; i < n_samples; ++i) {
            const double t = rec.timestamps[i];
            double v = kBackgroundRms * pink.next();
            v += line_amp * std::sin(2.0 * kPi * cfg.line_noise_hz * t + line_phase);
            if (amp > 0.0) {
                for (const auto& env : left_turns) {
                    if (t >= env.ramp_start && t < env.end)
                        v -= amp * (w_left_turn * env.hold_at(t) +
                                    w_exit * env.exit_at(t));
                }
                for (const auto& env : right_turns) {
                    if (t >= env.ramp_start && t < env.end)
                        v -= amp * (w_right_turn * env.hold_at(t) +
                                    w_exit * env.exit_at(t));
                }
            }
            x[i] = v;
        }
    }
    return rec;
}

SynthSession make_session(const SynthConfig& cfg) {
    SynthSession s;
    s.schedule = gen_schedule(cfg);
    s.track = gen_kinematics(s.schedule, cfg);
    s.eeg = gen_eeg(s.schedule, cfg, &s.warnings);
    return s;
}

LabelSeries sample_schedule_labels(const ManoeuvreSchedule& schedule,
                                   const std::vector<double>& timestamps) {
    LabelSeries out;
    out.timestamps = timestamps;
    out.labels.resize(timestamps.size());
    std::size_t seg = 0;
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        while (seg + 1 < schedule.segments.size() && timestamps[i] >= schedule.segments[seg].end)
            ++seg;
        out.labels[i] = schedule.segments[seg].action;
    }
    return out;
}

void export_session(const ManoeuvreSchedule& schedule, const KinematicTrack& track,
                    const EegRecording& eeg, const std::string& directory) {
    if (std::abs(track.timestamps.back() - eeg.timestamps.back()) >
        std::max(1.0 / 100.0, eeg.timestamps.size() > 1
                                  ? eeg.timestamps[1] - eeg.timestamps[0]
                                  : 0.01))
        raise(ErrorKind::InvalidInput, "export_session: track and EEG durations disagree");
    io::write_kinematics_csv(directory + "/kinematics.csv", track);
    io::write_eeg_csv(directory + "/eeg.csv", eeg);
    io::write_schedule_csv(directory + "/schedule.csv", schedule);
}

}  // namespace m2d
