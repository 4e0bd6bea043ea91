#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "assign2d.hpp"
#include "error.hpp"
#include "init3d.hpp"
#include "lift3d.hpp"
#include "recognize.hpp"
#include "synth.hpp"
#include "tracker.hpp"

namespace dancelift {

/// Flat key/value settings read from an INI-style file ("[section]" headers,
/// "key = value" lines, '#' or ';' comments). Keys are addressed as
/// "section.key". Later set() calls override file values.
class Config {
public:
    static Config load(const std::filesystem::path& p) {
        if (!std::filesystem::exists(p)) fail(ErrorKind::File, "config file not found: " + p.string());
        Config c;
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::read_ini(p.string(), tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            fail(ErrorKind::Format, "config " + p.string() + ": " + e.message() + " (line " +
                                        std::to_string(e.line()) + ")");
        }
        for (const auto& [k, v] : tree) {
            if (v.empty()) {
                c.values_[k] = trim(v.data());
            } else {
                for (const auto& [k2, v2] : v) c.values_[k + "." + k2] = trim(v2.data());
            }
        }
        return c;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    template <class T>
    T get(const std::string& key, const T& fallback) const {
        used_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if constexpr (std::is_same_v<T, bool>) {
            if (it->second == "true" || it->second == "1") return true;
            if (it->second == "false" || it->second == "0") return false;
            fail(ErrorKind::InvalidArgument, "config key '" + key + "' expects true/false, got '" + it->second + "'");
        } else {
            try {
                return boost::lexical_cast<T>(it->second);
            } catch (const boost::bad_lexical_cast&) {
                fail(ErrorKind::InvalidArgument, "config key '" + key + "' has malformed value '" + it->second + "'");
            }
        }
    }

    /// "key=value" lines in key order; the basis of the config hash.
    std::string canonical() const {
        std::string s;
        for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
        return s;
    }

    /// Rejects keys that no reader asked for (typos). Call after all get()s.
    void check_unused(const std::set<std::string>& also_allowed = {}) const {
        for (const auto& [k, v] : values_)
            if (!used_.count(k) && !also_allowed.count(k))
                fail(ErrorKind::InvalidArgument, "unknown config key '" + k + "'");
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\"");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\"");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

// ---- stage settings ----------------------------------------------------------------------

inline TrackerConfig tracker_config(const Config& c) {
    TrackerConfig t;
    t.search_factor = c.get("tracker.search_factor", t.search_factor);
    t.ema = c.get("tracker.ema", t.ema);
    t.overlap_iou = c.get("tracker.overlap_iou", t.overlap_iou);
    t.direction_deg = c.get("tracker.direction_deg", t.direction_deg);
    t.stall_ratio = c.get("tracker.stall_ratio", t.stall_ratio);
    t.clear_iou = c.get("tracker.clear_iou", t.clear_iou);
    t.fallback_horizon = c.get("tracker.fallback_horizon", t.fallback_horizon);
    t.min_speed = c.get("tracker.min_speed", t.min_speed);
    t.cone_deg = c.get("tracker.cone_deg", t.cone_deg);
    t.cone_radius_factor = c.get("tracker.cone_radius_factor", t.cone_radius_factor);
    t.candidate_stride = c.get("tracker.candidate_stride", t.candidate_stride);
    t.min_correlation = c.get("tracker.min_correlation", t.min_correlation);
    t.lost_timeout = c.get("tracker.lost_timeout", t.lost_timeout);
    t.mean_shift_iterations = c.get("tracker.mean_shift_iterations", t.mean_shift_iterations);
    t.validate();
    return t;
}

inline AssignConfig assign_config(const Config& c) {
    AssignConfig a;
    a.min_iou = c.get("assign.min_iou", a.min_iou);
    a.gap_decay = c.get("assign.gap_decay", a.gap_decay);
    require(a.min_iou >= 0.0 && a.min_iou < 1.0, "assign: min_iou must lie in [0, 1)");
    require(a.gap_decay >= 0.0 && a.gap_decay <= 1.0, "assign: gap_decay must lie in [0, 1]");
    return a;
}

inline InitConfig init_config(const Config& c, std::uint64_t seed, int jobs) {
    InitConfig i;
    i.window = c.get("init3d.window", i.window);
    i.seeds = c.get("init3d.seeds", i.seeds);
    i.epochs = c.get("init3d.epochs", i.epochs);
    i.steps_per_epoch = c.get("init3d.steps_per_epoch", i.steps_per_epoch);
    i.learning_rate = c.get("init3d.learning_rate", i.learning_rate);
    i.final_lr_fraction = c.get("init3d.final_lr_fraction", i.final_lr_fraction);
    i.min_visible = c.get("init3d.min_visible", i.min_visible);
    i.warm_start = c.get("init3d.warm_start", i.warm_start);
    i.bone_prior_weight = c.get("init3d.bone_prior_weight", i.bone_prior_weight);
    i.min_root_depth = c.get("init3d.min_root_depth", i.min_root_depth);
    i.height = c.get("init3d.height", i.height);
    i.collinear_tolerance = c.get("init3d.collinear_tolerance", i.collinear_tolerance);
    i.seed = seed;
    i.jobs = jobs;
    i.validate();
    return i;
}

inline LiftConfig lift_config(const Config& c, std::uint64_t seed) {
    LiftConfig l;
    l.channels = c.get("lift.channels", l.channels);
    l.kernel = c.get("lift.kernel", l.kernel);
    l.epochs = c.get("lift.epochs", l.epochs);
    l.steps_per_epoch = c.get("lift.steps_per_epoch", l.steps_per_epoch);
    l.learning_rate = c.get("lift.learning_rate", l.learning_rate);
    l.final_lr_fraction = c.get("lift.final_lr_fraction", l.final_lr_fraction);
    l.alpha_scale = c.get("lift.alpha_scale", l.alpha_scale);
    l.window = c.get("lift.window", l.window);
    if (c.has("lift.dilations")) {
        std::istringstream in(c.get<std::string>("lift.dilations", ""));
        l.dilations.clear();
        for (std::string tok; std::getline(in, tok, ',');) {
            try {
                l.dilations.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                fail(ErrorKind::InvalidArgument, "config key 'lift.dilations' expects a comma-separated list");
            }
        }
    }
    l.seed = seed;
    l.validate();
    return l;
}

inline RecognizeConfig recognize_config(const Config& c, std::uint64_t seed) {
    RecognizeConfig r;
    r.hidden = c.get("recognize.hidden", r.hidden);
    r.epochs = c.get("recognize.epochs", r.epochs);
    r.batch_clips = c.get("recognize.batch_clips", r.batch_clips);
    r.learning_rate = c.get("recognize.learning_rate", r.learning_rate);
    r.threshold = c.get("recognize.threshold", r.threshold);
    r.seed = seed;
    r.validate();
    return r;
}

} // namespace dancelift
