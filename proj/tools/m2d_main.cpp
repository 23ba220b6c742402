#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "m2d/config.hpp"
#include "m2d/errors.hpp"
#include "m2d/experiment.hpp"
#include "m2d/kernels.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--seed", args.seed, "override synth.seed");
    cmd->add_option("--out", args.out_dir, "override output.dir");
    cmd->add_flag("-v,--verbose", args.verbose, "log progress to stderr");
}

m2d::ExperimentConfig resolve(const CommonArgs& args) {
    m2d::ExperimentConfig cfg = m2d::load_config(args.config_path);
    if (args.seed >= 0) cfg.synth.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    cfg.validate();
    return cfg;
}

void apply_thread_cap() {
    const char* env = std::getenv("M2D_THREADS");
    if (env == nullptr) return;
    const int n = std::atoi(env);
    if (n > 0) m2d::kernels::set_max_threads(n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"m2d: EEG-based driver intention prediction pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    const char* names[] = {"synth", "label", "build", "train", "eval", "sweep", "report"};
    const char* descs[] = {
        "generate synthetic driving sessions",
        "derive per-sample action labels from kinematics",
        "build windowed train/val/test datasets per horizon",
        "train one classifier per horizon",
        "evaluate checkpoints on the test split and write horizons.csv",
        "run the full pipeline: synth, label, build, train, eval, report",
        "summarise horizons.csv and name the optimal horizon"};
    for (int i = 0; i < 7; ++i) add_common(app.add_subcommand(names[i], descs[i]), args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage errors exit 1
    }

    apply_thread_cap();

    try {
        const m2d::ExperimentConfig cfg = resolve(args);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "synth") {
            m2d::stage_synth(cfg, args.verbose);
        } else if (sub == "label") {
            m2d::stage_label(cfg, args.verbose);
        } else if (sub == "build") {
            m2d::stage_build(cfg, args.verbose);
        } else if (sub == "train") {
            m2d::stage_train(cfg, args.verbose);
        } else if (sub == "eval") {
            m2d::stage_eval(cfg, args.verbose);
        } else if (sub == "sweep") {
            m2d::run_experiment(cfg, args.verbose);
        } else if (sub == "report") {
            const std::string text = m2d::stage_report(cfg, args.verbose);
            std::fputs(text.c_str(), stdout);
        }
    } catch (const m2d::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
