#include "m2d/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "m2d/errors.hpp"

namespace m2d::io {

namespace {

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path) {
        std::filesystem::path p(path);
        if (p.has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(p.parent_path(), ec);
        }
        file_ = std::fopen(path.c_str(), "wb");
        if (file_ == nullptr)
            raise(ErrorKind::Data, "cannot open for writing: " + path + " (" +
                                       std::strerror(errno) + ")");
    }
    ~CsvWriter() {
        if (file_ != nullptr) std::fclose(file_);
    }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void raw(const char* s) { std::fputs(s, file_); }
    void raw(const std::string& s) { std::fputs(s.c_str(), file_); }
    void value(double v) { std::fprintf(file_, "%.9f", v); }
    void comma() { std::fputc(',', file_); }
    void newline() { std::fputc('\n', file_); }

    void close() {
        if (std::fclose(file_) != 0) {
            file_ = nullptr;
            raise(ErrorKind::Data, "write failed: " + path_);
        }
        file_ = nullptr;
    }

private:
    std::string path_;
    std::FILE* file_;
};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t lineno) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || (end != nullptr && *end != '\0'))
        raise(ErrorKind::Data,
              path + ":" + std::to_string(lineno) + ": not a number: '" + s + "'");
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::Data, "cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.empty()) raise(ErrorKind::Data, "empty file: " + path);
    return lines;
}

}  // namespace

void write_kinematics_csv(const std::string& path, const KinematicTrack& track) {
    CsvWriter w(path);
    w.raw("t,vx,vy,psi,psi_dot\n");
    for (std::size_t i = 0; i < track.size(); ++i) {
        w.value(track.timestamps[i]); w.comma();
        w.value(track.vx[i]); w.comma();
        w.value(track.vy[i]); w.comma();
        w.value(track.psi[i]); w.comma();
        w.value(track.psi_dot[i]); w.newline();
    }
    w.close();
}

KinematicTrack read_kinematics_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines[0] != "t,vx,vy,psi,psi_dot")
        raise(ErrorKind::Data, path + ": expected header 't,vx,vy,psi,psi_dot'");
    KinematicTrack track;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_line(lines[i]);
        if (f.size() != 5)
            raise(ErrorKind::Data, path + ":" + std::to_string(i + 1) + ": expected 5 fields");
        track.timestamps.push_back(parse_double(f[0], path, i + 1));
        track.vx.push_back(parse_double(f[1], path, i + 1));
        track.vy.push_back(parse_double(f[2], path, i + 1));
        track.psi.push_back(parse_double(f[3], path, i + 1));
        track.psi_dot.push_back(parse_double(f[4], path, i + 1));
    }
    track.validate();
    return track;
}

void write_eeg_csv(const std::string& path, const EegRecording& rec) {
    rec.validate();
    CsvWriter w(path);
    w.raw("t");
    for (const auto& name : rec.channel_names) {
        w.comma();
        w.raw(name);
    }
    w.newline();
    const std::size_t c = rec.channels();
    for (std::size_t i = 0; i < rec.samples(); ++i) {
        w.value(rec.timestamps[i]);
        for (std::size_t ch = 0; ch < c; ++ch) {
            w.comma();
            w.value(rec.channel(ch)[i]);
        }
        w.newline();
    }
    w.close();
}

EegRecording read_eeg_csv(const std::string& path) {
    const auto lines = read_lines(path);
    const auto header = split_line(lines[0]);
    if (header.size() < 2 || header[0] != "t")
        raise(ErrorKind::Data, path + ": expected header 't,<channels...>'");
    EegRecording rec;
    rec.channel_names.assign(header.begin() + 1, header.end());
    const std::size_t c = rec.channels();

    std::size_t n = 0;
    for (std::size_t i = 1; i < lines.size(); ++i)
        if (!lines[i].empty()) ++n;
    rec.timestamps.reserve(n);
    rec.data.assign(c * n, 0.0);

    std::size_t row = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const char* p = lines[i].c_str();
        char* end = nullptr;
        const double t = std::strtod(p, &end);
        if (end == p) raise(ErrorKind::Data, path + ":" + std::to_string(i + 1) + ": bad row");
        rec.timestamps.push_back(t);
        p = end;
        for (std::size_t ch = 0; ch < c; ++ch) {
            if (*p != ',')
                raise(ErrorKind::Data,
                      path + ":" + std::to_string(i + 1) + ": expected " +
                          std::to_string(c + 1) + " fields");
            ++p;
            const double v = std::strtod(p, &end);
            if (end == p)
                raise(ErrorKind::Data, path + ":" + std::to_string(i + 1) + ": bad value");
            rec.data[ch * n + row] = v;
            p = end;
        }
        if (*p != '\0')
            raise(ErrorKind::Data, path + ":" + std::to_string(i + 1) + ": trailing fields");
        ++row;
    }
    if (rec.timestamps.size() > 1) {
        const double dt = rec.timestamps[1] - rec.timestamps[0];
        if (dt > 0.0) rec.fs = 1.0 / dt;
    }
    rec.validate();
    return rec;
}

void write_schedule_csv(const std::string& path, const ManoeuvreSchedule& schedule) {
    CsvWriter w(path);
    w.raw("action,start,end\n");
    for (const auto& s : schedule.segments) {
        w.raw(action_name(s.action)); w.comma();
        w.value(s.start); w.comma();
        w.value(s.end); w.newline();
    }
    w.close();
}

ManoeuvreSchedule read_schedule_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines[0] != "action,start,end")
        raise(ErrorKind::Data, path + ": expected header 'action,start,end'");
    ManoeuvreSchedule sched;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_line(lines[i]);
        if (f.size() != 3)
            raise(ErrorKind::Data, path + ":" + std::to_string(i + 1) + ": expected 3 fields");
        const auto action = action_from_name(f[0]);
        if (!action)
            raise(ErrorKind::Data,
                  path + ":" + std::to_string(i + 1) + ": unknown action '" + f[0] + "'");
        sched.segments.push_back({*action, parse_double(f[1], path, i + 1),
                                  parse_double(f[2], path, i + 1)});
    }
    if (sched.segments.empty()) raise(ErrorKind::Data, path + ": no segments");
    sched.duration = sched.segments.back().end;
    sched.validate();
    return sched;
}

void write_labels_csv(const std::string& path, const LabelSeries& labels) {
    CsvWriter w(path);
    w.raw("t,label\n");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        w.value(labels.timestamps[i]); w.comma();
        w.raw(action_name(labels.labels[i])); w.newline();
    }
    w.close();
}

LabelSeries read_labels_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines[0] != "t,label") raise(ErrorKind::Data, path + ": expected header 't,label'");
    LabelSeries out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_line(lines[i]);
        if (f.size() != 2)
            raise(ErrorKind::Data, path + ":" + std::to_string(i + 1) + ": expected 2 fields");
        const auto action = action_from_name(f[1]);
        if (!action)
            raise(ErrorKind::Data,
                  path + ":" + std::to_string(i + 1) + ": unknown action '" + f[1] + "'");
        out.timestamps.push_back(parse_double(f[0], path, i + 1));
        out.labels.push_back(*action);
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::Data, "cannot open for writing: " + path);
    f << content;
    if (!f) raise(ErrorKind::Data, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::Data, "cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace m2d::io
