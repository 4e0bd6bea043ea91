#include "run.hpp"

#include <regex>

namespace dancelift::cli {

namespace {

Config merged_config(const Options& opt) {
    Config c = opt.config ? Config::load(*opt.config) : Config{};
    for (const auto& kv : opt.sets) {
        const auto eq = kv.find('=');
        require(eq != std::string::npos && eq > 0, "--set expects key=value, got '" + kv + "'");
        c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
}

// One config file serves every stage, so keys read by any stage are legal in
// every command; only keys nobody reads are rejected.
void mark_pipeline_keys(const Config& c) {
    (void)tracker_config(c);
    (void)assign_config(c);
    (void)init_config(c, 0, 1);
    (void)lift_config(c, 0);
    (void)recognize_config(c, 0);
    for (const char* k : {"synth.frames", "synth.noise_sigma", "synth.width", "synth.height", "synth.max_step",
                          "synth.amplitude", "synth.actors", "synth.background_noise", "synth.disjoint",
                          "synth.detection_jitter", "synth.clips_per_label", "synth.genre_clips", "synth.genre_frames",
                          "image.width", "image.height", "recognize.all_clips"})
        (void)c.get<std::string>(k, "");
}

} // namespace

Run::Run(std::string command, const Options& opt)
    : command_(std::move(command)), opt_(opt), cfg_(merged_config(opt)),
      manifest_("", 0, "", 1), start_(std::chrono::steady_clock::now()) {
    require(opt.jobs >= 1, "--jobs must be at least 1");
    require(!opt.output.empty(), command_ + ": --output is required");
    seed_ = opt.seed ? *opt.seed : cfg_.get<std::uint64_t>("seed", 0);
    // the seed flag and config key are one setting; hash what is in effect
    Config hashed = cfg_;
    hashed.set("seed", std::to_string(seed_));
    manifest_ = io::RunManifest(command_, seed_, hashed.canonical(), opt.jobs);
    out_ = opt.output;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) fail(ErrorKind::File, "cannot create output directory " + out_.string() + ": " + ec.message());
    for (const auto& d : input_dirs(opt))
        if (!fs::is_directory(d)) fail(ErrorKind::File, "input directory not found: " + d.string());
}

std::vector<fs::path> Run::input_dirs(const Options& opt) {
    std::vector<fs::path> out;
    for (const auto& s : opt.inputs) out.emplace_back(s);
    return out;
}

std::optional<fs::path> Run::try_find(const std::string& name) const {
    for (const auto& d : input_dirs(opt_)) {
        const fs::path p = d / name;
        if (fs::exists(p)) {
            if (fs::is_regular_file(p)) manifest_.add_input(p);
            return p;
        }
    }
    return std::nullopt;
}

fs::path Run::find(const std::string& name) const {
    if (auto p = try_find(name)) return *p;
    std::string where;
    for (const auto& d : input_dirs(opt_)) where += " " + d.string();
    fail(ErrorKind::File, command_ + ": input " + name + " not found in" + (where.empty() ? " (no --input)" : where));
}

fs::path Run::output(const std::string& name) {
    manifest_.add_output(name);
    return out_ / name;
}

void Run::finish() {
    mark_pipeline_keys(cfg_);
    cfg_.check_unused({"seed"});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.finalize(out_, secs);
}

std::map<int, fs::path> numbered_files(const fs::path& dir, const std::string& prefix, const std::string& suffix) {
    std::map<int, fs::path> out;
    if (!fs::is_directory(dir)) return out;
    const std::regex re(std::regex_replace(prefix, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)") + "([0-9]+)" +
                        std::regex_replace(suffix, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)"));
    for (const auto& e : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && std::regex_match(name, m, re)) out[std::stoi(m[1].str())] = e.path();
    }
    return out;
}

} // namespace dancelift::cli
