#include <cstdlib>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "m2d/io.hpp"

#ifndef M2D_BIN
#define M2D_BIN "m2d"
#endif

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(M2D_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("exit codes: usage, config, data, success") {
    namespace fs = std::filesystem;
    const std::string dir = "cli_smoke_out";
    fs::remove_all(dir);
    fs::create_directories(dir);

    CHECK(run("") == 1);                                   // usage
    CHECK(run("synth") == 1);                              // missing --config
    CHECK(run("synth --config " + dir + "/none.cfg") == 3);  // missing file

    m2d::io::write_text_file(dir + "/bad.cfg", "window.overlap = 0.9\n");
    CHECK(run("synth --config " + dir + "/bad.cfg") == 2);  // constraint error

    m2d::io::write_text_file(dir + "/unknown.cfg", "foo.bar = 1\n");
    CHECK(run("synth --config " + dir + "/unknown.cfg") == 2);  // unknown key

    m2d::io::write_text_file(dir + "/ok.cfg",
                             "synth.duration_s = 60\n"
                             "synth.sessions = 1\n"
                             "output.dir = " + dir + "/out\n");
    CHECK(run("synth --config " + dir + "/ok.cfg") == 0);
    CHECK(fs::exists(dir + "/out/sessions/s001/eeg.csv"));
    CHECK(fs::exists(dir + "/out/config.resolved.txt"));

    CHECK(run("label --config " + dir + "/ok.cfg") == 0);
    CHECK(fs::exists(dir + "/out/labels/s001.csv"));

    // report before any sweep: data error naming the producer
    CHECK(run("report --config " + dir + "/ok.cfg") == 3);

    // --out overrides the output directory
    CHECK(run("synth --config " + dir + "/ok.cfg --out " + dir + "/alt") == 0);
    CHECK(fs::exists(dir + "/alt/sessions/s001/schedule.csv"));

    fs::remove_all(dir);
}

TEST_SUITE_END();
