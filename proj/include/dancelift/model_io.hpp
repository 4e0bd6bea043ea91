#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "diff/weights.hpp"
#include "io.hpp"
#include "lift3d.hpp"
#include "recognize.hpp"

namespace dancelift::io {

// A model is a JSON description (`<stem>.json`) next to a float64 blob
// (`<stem>.bin`). The JSON embeds the weights manifest.

inline void write_weights(const fs::path& dir, const std::string& stem, json meta,
                          const std::vector<const diff::Parameter*>& params) {
    const diff::WeightsBundle w = diff::pack_weights(params);
    meta["weights"] = w.manifest;
    meta["blob"] = stem + ".bin";
    write_atomic(dir / (stem + ".bin"), std::string_view(w.blob.data(), w.blob.size()));
    write_json(dir / (stem + ".json"), meta);
}

inline diff::WeightsBundle read_weights(const fs::path& dir, const json& meta, const fs::path& from) {
    diff::WeightsBundle w;
    w.manifest = field<json>(meta, "weights", from.string());
    const std::string blob = read_file(dir / field<std::string>(meta, "blob", from.string()));
    w.blob.assign(blob.begin(), blob.end());
    return w;
}

// ---- lifting network ----------------------------------------------------------------------

inline json lift_config_json(const LiftConfig& c) {
    return {{"channels", c.channels}, {"kernel", c.kernel}, {"dilations", c.dilations},
            {"image_width", c.image_width}, {"image_height", c.image_height}};
}

inline void save_lift_net(const fs::path& dir, const std::string& stem, const LiftNet& net) {
    json meta = header("lift_model");
    meta["config"] = lift_config_json(net.config);
    write_weights(dir, stem, meta, net.parameters());
}

inline LiftNet load_lift_net(const fs::path& dir, const std::string& stem) {
    const fs::path p = dir / (stem + ".json");
    const json meta = read_json(p, "lift_model");
    const json c = field<json>(meta, "config", p.string());
    LiftConfig cfg;
    cfg.channels = field<int>(c, "channels", p.string());
    cfg.kernel = field<int>(c, "kernel", p.string());
    cfg.dilations = field<std::vector<int>>(c, "dilations", p.string());
    cfg.image_width = field<double>(c, "image_width", p.string());
    cfg.image_height = field<double>(c, "image_height", p.string());
    cfg.validate();
    LiftNet net = make_lift_net(cfg, std::vector<double>(kLiftOutputs, 0.0));
    auto params = net.parameters();
    diff::unpack_weights(read_weights(dir, meta, p), {params.begin(), params.end()});
    return net;
}

// ---- recognition networks -------------------------------------------------------------------

inline void save_movement_model(const fs::path& dir, const std::string& stem, const MovementModel& m) {
    json meta = header("movement_model");
    meta["part"] = m.part;
    meta["part_name"] = std::string(body_parts()[m.part].name);
    meta["hidden"] = m.net.hidden;
    meta["threshold"] = m.config.threshold;
    meta["feature_mean"] = m.feature_mean;
    meta["feature_scale"] = m.feature_scale;
    write_weights(dir, stem, meta, m.net.parameters());
}

inline MovementModel load_movement_model(const fs::path& dir, const std::string& stem) {
    const fs::path p = dir / (stem + ".json");
    const json meta = read_json(p, "movement_model");
    RecognizeConfig cfg;
    cfg.hidden = field<int>(meta, "hidden", p.string());
    cfg.threshold = field<double>(meta, "threshold", p.string());
    MovementModel m = make_movement_model(field<int>(meta, "part", p.string()), cfg);
    m.feature_mean = field<std::vector<double>>(meta, "feature_mean", p.string());
    m.feature_scale = field<std::vector<double>>(meta, "feature_scale", p.string());
    if (m.feature_mean.size() != static_cast<std::size_t>(m.net.inputs) || m.feature_scale.size() != m.feature_mean.size())
        fail(ErrorKind::Format, p.string() + ": standardization size does not match the part's joints");
    diff::unpack_weights(read_weights(dir, meta, p), m.net.parameters());
    return m;
}

inline void save_genre_model(const fs::path& dir, const std::string& stem, const GenreModel& m) {
    json meta = header("genre_model");
    meta["hidden"] = m.net.hidden;
    meta["genres"] = json::array();
    for (auto n : kGenreNames) meta["genres"].push_back(std::string(n));
    write_weights(dir, stem, meta, m.net.parameters());
}

inline GenreModel load_genre_model(const fs::path& dir, const std::string& stem) {
    const fs::path p = dir / (stem + ".json");
    const json meta = read_json(p, "genre_model");
    RecognizeConfig cfg;
    cfg.hidden = field<int>(meta, "hidden", p.string());
    GenreModel m = make_genre_model(cfg);
    diff::unpack_weights(read_weights(dir, meta, p), m.net.parameters());
    return m;
}

} // namespace dancelift::io
