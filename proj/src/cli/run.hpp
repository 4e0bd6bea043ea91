#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dancelift/config.hpp"
#include "dancelift/manifest.hpp"

namespace dancelift::cli {

namespace fs = std::filesystem;

struct Options {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::vector<std::string> inputs;
    std::string output;
    std::vector<std::string> sets;  // key=value overrides
    // command specific
    std::string kind = "clip";
    std::vector<std::string> labeled;
    std::string model;
    std::string reference;
    int frame = 0;
};

/// Per-command context: merged config, seed, input lookup, output
/// registration and the run manifest.
class Run {
public:
    Run(std::string command, const Options& opt);

    const Options& options() const { return opt_; }
    const Config& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    int jobs() const { return opt_.jobs; }
    const fs::path& out_dir() const { return out_; }

    /// First input directory holding `name`; recorded as an input.
    fs::path find(const std::string& name) const;
    std::optional<fs::path> try_find(const std::string& name) const;

    /// Record a file that was read without going through find().
    void used(const fs::path& p) const { manifest_.add_input(p); }

    /// Path for an output file (relative name) that is registered in the manifest.
    fs::path output(const std::string& name);

    /// Writes the manifest. Unknown config keys are rejected here.
    void finish();

    static std::vector<fs::path> input_dirs(const Options& opt);

private:
    std::string command_;
    Options opt_;
    Config cfg_;
    std::uint64_t seed_ = 0;
    fs::path out_;
    mutable io::RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

/// Integer ids of files named `<prefix><id><suffix>` in `dir`, ascending.
std::map<int, fs::path> numbered_files(const fs::path& dir, const std::string& prefix, const std::string& suffix);

int synth_gen(const Options&);
int track(const Options&);
int assign(const Options&);
int init3d(const Options&);
int lift_train(const Options&);
int lift_infer(const Options&);
int recognize_train(const Options&);
int recognize_run(const Options&);
int metrics(const Options&);
int render(const Options&);

} // namespace dancelift::cli
