#pragma once

#include <array>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "io.hpp"

namespace dancelift::io {

inline constexpr const char* kManifestName = "manifest.json";

inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int n = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &n, EVP_sha256(), nullptr) != 1)
        fail(ErrorKind::File, "sha256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < n; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

inline std::string file_sha256(const fs::path& p) { return sha256_hex(read_file(p)); }

/// Record of one command run: what it read (with hashes), the manifests of
/// the directories it read from, its config hash and seed, and what it wrote.
class RunManifest {
public:
    RunManifest(std::string command, std::uint64_t seed, const std::string& canonical_config, int jobs) {
        j_ = header("manifest");
        j_["command"] = std::move(command);
        j_["seed"] = seed;
        j_["jobs"] = jobs;
        j_["config_sha256"] = sha256_hex(canonical_config);
        j_["inputs"] = json::array();
        j_["upstream"] = json::array();
        j_["outputs"] = json::array();
    }

    void add_input(const fs::path& p) {
        const fs::path abs = fs::absolute(p).lexically_normal();
        if (!inputs_.insert(abs.string()).second) return;
        j_["inputs"].push_back({{"path", abs.string()}, {"sha256", file_sha256(abs)}});
        const fs::path up = abs.parent_path() / kManifestName;
        if (fs::exists(up) && upstream_.insert(up.string()).second)
            j_["upstream"].push_back({{"path", up.string()}, {"sha256", file_sha256(up)}});
    }

    /// `name` is relative to the output directory.
    void add_output(const std::string& name) { outputs_.push_back(name); }

    void finalize(const fs::path& out_dir, double wall_seconds) {
        for (const auto& name : outputs_)
            j_["outputs"].push_back({{"path", name}, {"sha256", file_sha256(out_dir / name)}});
        j_["wall_time_s"] = wall_seconds;
        write_json(out_dir / kManifestName, j_);
    }

    const json& data() const { return j_; }

private:
    json j_;
    std::set<std::string> inputs_, upstream_;
    std::vector<std::string> outputs_;
};

/// Re-hashes everything a manifest refers to and walks the upstream chain.
/// Returns one message per mismatch or missing file; empty means intact.
inline std::vector<std::string> verify_manifest_chain(const fs::path& dir) {
    std::vector<std::string> issues;
    std::set<std::string> seen;
    std::vector<fs::path> todo = {fs::absolute(dir / kManifestName).lexically_normal()};
    auto check = [&](const fs::path& p, const std::string& want, const std::string& from) {
        if (!fs::exists(p)) {
            issues.push_back(from + ": missing " + p.string());
            return false;
        }
        if (file_sha256(p) != want) {
            issues.push_back(from + ": " + p.string() + " changed since the run");
            return false;
        }
        return true;
    };
    while (!todo.empty()) {
        const fs::path m = todo.back();
        todo.pop_back();
        if (!seen.insert(m.string()).second) continue;
        if (!fs::exists(m)) {
            issues.push_back("missing manifest " + m.string());
            continue;
        }
        const json j = read_json(m, "manifest");
        for (const auto& o : j.at("outputs"))
            check(m.parent_path() / o.at("path").get<std::string>(), o.at("sha256"), m.string());
        for (const auto& i : j.at("inputs")) check(i.at("path").get<std::string>(), i.at("sha256"), m.string());
        for (const auto& u : j.at("upstream")) {
            const fs::path up = u.at("path").get<std::string>();
            if (check(up, u.at("sha256"), m.string())) todo.push_back(up);
        }
    }
    return issues;
}

} // namespace dancelift::io
