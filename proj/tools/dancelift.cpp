// dancelift: batch front end for the lifting and recognition pipeline.
#include <cstdio>
#include <functional>
#include <map>

#include <CLI11.hpp>

#include "../src/cli/run.hpp"
#include "dancelift/error.hpp"

namespace cli = dancelift::cli;

namespace {

struct Command {
    const char* name;
    const char* help;
    int (*fn)(const cli::Options&);
};

constexpr Command kCommands[] = {
    {"synth-gen", "generate a synthetic clip, crossing scene or labeled dataset", cli::synth_gen},
    {"track", "track initial boxes through frames", cli::track},
    {"assign", "assign per-frame 2D pose candidates to tracks", cli::assign},
    {"init3d", "fit the skeleton to each 2D track", cli::init3d},
    {"lift-train", "train the lifting network", cli::lift_train},
    {"lift-infer", "lift 2D tracks with a trained network", cli::lift_infer},
    {"recognize-train", "train movement and genre classifiers", cli::recognize_train},
    {"recognize-run", "label movements and genre of 3D tracks", cli::recognize_run},
    {"metrics", "compare outputs against a reference", cli::metrics},
    {"render", "draw reprojected skeletons as SVG", cli::render},
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dancelift"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    cli::Options opt;
    std::uint64_t seed = 0;
    std::string config, report;
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : kCommands) {
        CLI::App* s = app.add_subcommand(c.name, c.help);
        s->add_option("--config", config, "INI-style config file");
        s->add_option("--seed", seed, "random seed (overrides config key 'seed')");
        s->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
        s->add_option("--input", opt.inputs, "input directory (repeatable)");
        s->add_option("--output", opt.output, "output directory")->required();
        s->add_option("--set", opt.sets, "config override key=value (repeatable)");
        const std::string n = c.name;
        if (n == "synth-gen") s->add_option("--kind", opt.kind, "clip, scene or dataset");
        if (n == "lift-train") s->add_option("--labeled", opt.labeled, "clip directory with ground-truth 3D (repeatable)");
        if (n == "lift-infer" || n == "recognize-run") s->add_option("--model", opt.model, "model directory")->required();
        if (n == "metrics") {
            s->add_option("--reference", opt.reference, "directory with ground truth");
            s->add_option("action", report, "only 'report' is accepted")->check(CLI::IsMember({"report"}));
        }
        if (n == "render") s->add_option("--frame", opt.frame, "frame index to draw");
        subs[n] = s;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (const auto& c : kCommands) {
        CLI::App* s = subs[c.name];
        if (!s->parsed()) continue;
        if (s->count("--seed")) opt.seed = seed;
        if (s->count("--config")) opt.config = config;
        try {
            return c.fn(opt);
        } catch (const dancelift::Error& e) {
            std::fprintf(stderr, "%s: %s\n", c.name, e.what());
            return e.exit_code();
        } catch (const std::exception& e) {
            std::fprintf(stderr, "%s: %s\n", c.name, e.what());
            return 2;
        }
    }
    return 2;
}
