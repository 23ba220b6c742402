#include "m2d/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "m2d/errors.hpp"
#include "m2d/io.hpp"

namespace m2d {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_number(const std::string& value, const std::string& where) {
    if (value == "-inf") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        raise(ErrorKind::Config, where + ": expected a number, got '" + value + "'");
    return v;
}

long long parse_int(const std::string& value, const std::string& where) {
    const double v = parse_number(value, where);
    if (v != std::floor(v))
        raise(ErrorKind::Config, where + ": expected an integer, got '" + value + "'");
    return static_cast<long long>(v);
}

std::string fmt(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

const std::vector<std::string>& frontal8_channels() {
    static const std::vector<std::string> names = {"F3", "F4", "F7", "F8",
                                                   "C3", "C4", "P3", "P4"};
    return names;
}

void ExperimentConfig::validate() const {
    synth.validate();
    if (sessions < 1) raise(ErrorKind::Config, "synth.sessions must be >= 1");
    if (!estimate_thresholds) thresholds.validate();
    prep.validate(synth.eeg_fs);
    window.validate(synth.eeg_fs);
    split.validate();
    if (horizons_ms.empty()) raise(ErrorKind::Config, "horizons.list_ms must not be empty");
    for (std::size_t i = 0; i < horizons_ms.size(); ++i) {
        if (horizons_ms[i] < 0) raise(ErrorKind::Config, "horizons must be >= 0");
        if (i > 0 && horizons_ms[i] <= horizons_ms[i - 1])
            raise(ErrorKind::Config, "horizons must be sorted ascending and unique");
    }
    const auto& names = synth.channels.empty() ? default_channels() : synth.channels;
    for (const auto& ch : channel_subset)
        if (std::find(names.begin(), names.end(), ch) == names.end())
            raise(ErrorKind::Config, "channels.subset names unknown channel '" + ch + "'");
    train.validate();
    if (recurrent_hidden < 1) raise(ErrorKind::Config, "model.hidden must be >= 1");
    if (output_dir.empty()) raise(ErrorKind::Config, "output.dir must not be empty");
}

std::string ExperimentConfig::resolved_text() const {
    std::ostringstream o;
    o << "synth.seed = " << synth.seed << "\n";
    o << "synth.sessions = " << sessions << "\n";
    o << "synth.duration_s = " << fmt(synth.duration_s) << "\n";
    o << "synth.eeg_fs = " << fmt(synth.eeg_fs) << "\n";
    o << "synth.kin_fs = " << fmt(synth.kin_fs) << "\n";
    o << "synth.channels = ";
    const auto& names = synth.channels.empty() ? default_channels() : synth.channels;
    for (std::size_t i = 0; i < names.size(); ++i) o << (i ? "," : "") << names[i];
    o << "\n";
    o << "synth.lead_time_ms = " << fmt(synth.lead_time_ms) << "\n";
    o << "synth.snr_db = " << fmt(synth.snr_db) << "\n";
    o << "synth.turn_fraction = " << fmt(synth.turn_fraction) << "\n";
    o << "synth.line_noise_hz = " << fmt(synth.line_noise_hz) << "\n";
    o << "thresholds.mode = " << (estimate_thresholds ? "estimate" : "fixed") << "\n";
    o << "thresholds.v_th = " << fmt(thresholds.v_th) << "\n";
    o << "thresholds.omega_th = " << fmt(thresholds.omega_th) << "\n";
    o << "prep.pipeline = " << prep_pipeline_name(prep.pipeline) << "\n";
    o << "prep.band_lo = " << fmt(prep.band_lo) << "\n";
    o << "prep.band_hi = " << fmt(prep.band_hi) << "\n";
    o << "window.length_s = " << fmt(window.length_s) << "\n";
    o << "window.overlap = " << fmt(window.overlap) << "\n";
    o << "window.aggregation = "
      << (window.aggregation == Aggregation::Reject ? "reject" : "majority") << "\n";
    o << "split.strategy = "
      << (split.strategy == SplitStrategy::LabelStratifiedTemporal ? "stratified" : "plain")
      << "\n";
    o << "split.train_frac = " << fmt(split.train_frac) << "\n";
    o << "split.val_frac_of_train = " << fmt(split.val_frac_of_train) << "\n";
    o << "split.sampler = "
      << (split.sampler == Sampler::RandomOversample ? "oversample" : "none") << "\n";
    o << "split.sampler_seed = " << split.sampler_seed << "\n";
    o << "horizons.list_ms = ";
    for (std::size_t i = 0; i < horizons_ms.size(); ++i) o << (i ? "," : "") << horizons_ms[i];
    o << "\n";
    o << "channels.subset = ";
    if (channel_subset.empty()) {
        o << "all16";
    } else if (channel_subset == frontal8_channels()) {
        o << "frontal8";
    } else {
        for (std::size_t i = 0; i < channel_subset.size(); ++i)
            o << (i ? "," : "") << channel_subset[i];
    }
    o << "\n";
    o << "model.arch = " << architecture_name(arch) << "\n";
    o << "model.hidden = " << recurrent_hidden << "\n";
    o << "train.batch_size = " << train.batch_size << "\n";
    o << "train.max_epochs = " << train.max_epochs << "\n";
    o << "train.lr = " << fmt(train.lr) << "\n";
    o << "train.beta1 = " << fmt(train.beta1) << "\n";
    o << "train.beta2 = " << fmt(train.beta2) << "\n";
    o << "train.eps = " << fmt(train.eps) << "\n";
    o << "train.class_weights = "
      << (train.weighting == ClassWeighting::InverseFrequency ? "inverse_frequency" : "uniform")
      << "\n";
    o << "train.seed = " << train.seed << "\n";
    o << "train.patience = " << train.patience << "\n";
    o << "output.dir = " << output_dir << "\n";
    return o.str();
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::Config,
                  origin + ":" + std::to_string(lineno) + ": expected 'section.key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string where = origin + ":" + std::to_string(lineno) + ": " + key;
        if (key.empty() || value.empty())
            raise(ErrorKind::Config, where + ": empty key or value");

        if (key == "synth.seed") {
            cfg.synth.seed = static_cast<std::uint64_t>(parse_int(value, where));
        } else if (key == "synth.sessions") {
            cfg.sessions = static_cast<int>(parse_int(value, where));
        } else if (key == "synth.duration_s") {
            cfg.synth.duration_s = parse_number(value, where);
        } else if (key == "synth.eeg_fs") {
            cfg.synth.eeg_fs = parse_number(value, where);
        } else if (key == "synth.kin_fs") {
            cfg.synth.kin_fs = parse_number(value, where);
        } else if (key == "synth.channels") {
            if (value == "default16")
                cfg.synth.channels.clear();
            else
                cfg.synth.channels = split_list(value);
        } else if (key == "synth.lead_time_ms") {
            cfg.synth.lead_time_ms = parse_number(value, where);
        } else if (key == "synth.snr_db") {
            cfg.synth.snr_db = parse_number(value, where);
        } else if (key == "synth.turn_fraction") {
            cfg.synth.turn_fraction = parse_number(value, where);
        } else if (key == "synth.line_noise_hz") {
            cfg.synth.line_noise_hz = parse_number(value, where);
        } else if (key == "thresholds.mode") {
            if (value == "estimate")
                cfg.estimate_thresholds = true;
            else if (value == "fixed")
                cfg.estimate_thresholds = false;
            else
                raise(ErrorKind::Config, where + ": expected 'fixed' or 'estimate'");
        } else if (key == "thresholds.v_th") {
            cfg.thresholds.v_th = parse_number(value, where);
        } else if (key == "thresholds.omega_th") {
            cfg.thresholds.omega_th = parse_number(value, where);
        } else if (key == "prep.pipeline") {
            if (value == "zscore") cfg.prep.pipeline = PrepPipeline::ZscoreOnly;
            else if (value == "bandpass_zscore") cfg.prep.pipeline = PrepPipeline::BandpassZscore;
            else if (value == "pyprep") cfg.prep.pipeline = PrepPipeline::Pyprep;
            else if (value == "pyprep_ransac") cfg.prep.pipeline = PrepPipeline::PyprepRansac;
            else if (value == "ica") cfg.prep.pipeline = PrepPipeline::IcaOnly;
            else if (value == "asr") cfg.prep.pipeline = PrepPipeline::AsrOnly;
            else if (value == "autoreject") cfg.prep.pipeline = PrepPipeline::AutoRejectOnly;
            else raise(ErrorKind::Config, where + ": unknown pipeline '" + value + "'");
        } else if (key == "prep.band_lo") {
            cfg.prep.band_lo = parse_number(value, where);
        } else if (key == "prep.band_hi") {
            cfg.prep.band_hi = parse_number(value, where);
        } else if (key == "window.length_s") {
            cfg.window.length_s = parse_number(value, where);
        } else if (key == "window.overlap") {
            cfg.window.overlap = parse_number(value, where);
        } else if (key == "window.aggregation") {
            if (value == "reject") cfg.window.aggregation = Aggregation::Reject;
            else if (value == "majority") cfg.window.aggregation = Aggregation::Majority;
            else raise(ErrorKind::Config, where + ": expected 'reject' or 'majority'");
        } else if (key == "split.strategy") {
            if (value == "stratified")
                cfg.split.strategy = SplitStrategy::LabelStratifiedTemporal;
            else if (value == "plain")
                cfg.split.strategy = SplitStrategy::TemporalPlain;
            else
                raise(ErrorKind::Config, where + ": expected 'stratified' or 'plain'");
        } else if (key == "split.train_frac") {
            cfg.split.train_frac = parse_number(value, where);
        } else if (key == "split.val_frac_of_train") {
            cfg.split.val_frac_of_train = parse_number(value, where);
        } else if (key == "split.sampler") {
            if (value == "oversample") cfg.split.sampler = Sampler::RandomOversample;
            else if (value == "none") cfg.split.sampler = Sampler::NoSampling;
            else raise(ErrorKind::Config, where + ": expected 'oversample' or 'none'");
        } else if (key == "split.sampler_seed") {
            cfg.split.sampler_seed = static_cast<std::uint64_t>(parse_int(value, where));
        } else if (key == "horizons.list_ms") {
            cfg.horizons_ms.clear();
            for (const auto& item : split_list(value))
                cfg.horizons_ms.push_back(static_cast<int>(parse_int(item, where)));
        } else if (key == "channels.subset") {
            if (value == "all16") cfg.channel_subset.clear();
            else if (value == "frontal8") cfg.channel_subset = frontal8_channels();
            else cfg.channel_subset = split_list(value);
        } else if (key == "model.arch") {
            if (value == "compact_conv") cfg.arch = Architecture::CompactConv;
            else if (value == "recurrent") cfg.arch = Architecture::RecurrentNet;
            else raise(ErrorKind::Config, where + ": unknown architecture '" + value + "'");
        } else if (key == "model.hidden") {
            cfg.recurrent_hidden = static_cast<int>(parse_int(value, where));
        } else if (key == "train.batch_size") {
            cfg.train.batch_size = static_cast<int>(parse_int(value, where));
        } else if (key == "train.max_epochs") {
            cfg.train.max_epochs = static_cast<int>(parse_int(value, where));
        } else if (key == "train.lr") {
            cfg.train.lr = parse_number(value, where);
        } else if (key == "train.beta1") {
            cfg.train.beta1 = parse_number(value, where);
        } else if (key == "train.beta2") {
            cfg.train.beta2 = parse_number(value, where);
        } else if (key == "train.eps") {
            cfg.train.eps = parse_number(value, where);
        } else if (key == "train.class_weights") {
            if (value == "uniform") cfg.train.weighting = ClassWeighting::Uniform;
            else if (value == "inverse_frequency")
                cfg.train.weighting = ClassWeighting::InverseFrequency;
            else raise(ErrorKind::Config, where + ": expected 'uniform' or 'inverse_frequency'");
        } else if (key == "train.seed") {
            cfg.train.seed = static_cast<std::uint64_t>(parse_int(value, where));
        } else if (key == "train.patience") {
            cfg.train.patience = static_cast<int>(parse_int(value, where));
        } else if (key == "output.dir") {
            cfg.output_dir = value;
        } else {
            raise(ErrorKind::Config,
                  origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config_text(io::read_text_file(path), path);
}

}  // namespace m2d
