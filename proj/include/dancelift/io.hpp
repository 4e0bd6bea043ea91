#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "camera.hpp"
#include "error.hpp"
#include "image.hpp"
#include "pose.hpp"
#include "taxonomy.hpp"
#include "tracker.hpp"

namespace dancelift::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---- text and JSON ---------------------------------------------------------------

/// 17 significant digits, so every double survives a write/read cycle.
inline std::string format_number(double v) {
    if (!std::isfinite(v)) fail(ErrorKind::Format, "cannot serialize a non-finite number");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void dump_to(const json& j, std::string& out) {
    switch (j.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            out += json(it.key()).dump();
            out += ':';
            dump_to(it.value(), out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ',';
            dump_to(j[i], out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: out += format_number(j.get<double>()); break;
    default: out += j.dump();
    }
}

/// Compact JSON with sorted keys and %.17g floats.
inline std::string dump(const json& j) {
    std::string s;
    dump_to(j, s);
    return s;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorKind::File, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary sibling and renames it into place.
inline void write_atomic(const fs::path& p, std::string_view content) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) fail(ErrorKind::File, "cannot create directory " + p.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = p;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::File, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorKind::File, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorKind::File, "cannot move " + tmp.string() + " to " + p.string());
    }
}

inline json parse(std::string_view text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Format, where + ": malformed JSON (" + e.what() + ")");
    }
}

inline json header(std::string_view format) {
    return {{"format", "dancelift." + std::string(format)}, {"version", kSchemaVersion}};
}

inline void check_header(const json& h, std::string_view format, const fs::path& p) {
    const std::string want = "dancelift." + std::string(format);
    if (!h.is_object() || !h.contains("format") || !h.contains("version"))
        fail(ErrorKind::Format, p.string() + ": missing format/version header");
    if (h["format"] != want)
        fail(ErrorKind::Format, p.string() + ": expected format " + want + ", found " + h["format"].dump());
    if (h["version"] != kSchemaVersion)
        fail(ErrorKind::Format, p.string() + ": unsupported schema version " + h["version"].dump() +
                                    " (this build reads version " + std::to_string(kSchemaVersion) + ")");
}

inline json read_json(const fs::path& p, std::string_view format) {
    json j = parse(read_file(p), p.string());
    check_header(j, format, p);
    return j;
}

inline void write_json(const fs::path& p, const json& j) { write_atomic(p, dump(j) + "\n"); }

struct Jsonl {
    json header;
    std::vector<json> rows;
};

inline std::string jsonl_text(const Jsonl& f) {
    std::string s = dump(f.header) + "\n";
    for (const auto& r : f.rows) s += dump(r) + "\n";
    return s;
}

inline void write_jsonl(const fs::path& p, const Jsonl& f) { write_atomic(p, jsonl_text(f)); }

/// First line is the header; blank lines are skipped.
inline Jsonl read_jsonl(const fs::path& p, std::string_view format) {
    std::istringstream in(read_file(p));
    Jsonl f;
    std::string line;
    int n = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = parse(line, p.string() + ":" + std::to_string(n));
        if (!have_header) {
            check_header(j, format, p);
            f.header = std::move(j);
            have_header = true;
        } else {
            f.rows.push_back(std::move(j));
        }
    }
    if (!have_header) fail(ErrorKind::Format, p.string() + ": empty file");
    return f;
}

/// Field access with a format error that names the file and row.
template <class T>
T field(const json& row, const char* key, const std::string& where) {
    try {
        return row.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::Format, where + ": missing or malformed field '" + key + "'");
    }
}

// ---- poses ------------------------------------------------------------------------

inline json pose2d_row(const Pose2D& p) {
    json joints = json::array();
    for (int j = 0; j < kNumJoints; ++j) joints.push_back({p.joints[j].x(), p.joints[j].y(), p.confidence[j]});
    return {{"frame", p.frame_index}, {"joints", joints}};
}

inline json pose3d_row(const Pose3D& p) {
    json joints = json::array();
    for (const auto& v : p.joints) joints.push_back({v.x(), v.y(), v.z()});
    return {{"frame", p.frame_index}, {"joints", joints}};
}

inline void write_pose2d(const fs::path& p, const PoseSeq2D& seq, json extra = json::object()) {
    Jsonl f{header("pose2d"), {}};
    f.header.update(extra);
    f.header["joints"] = kNumJoints;
    for (const auto& q : seq) f.rows.push_back(pose2d_row(q));
    write_jsonl(p, f);
}

inline void write_pose3d(const fs::path& p, const PoseSeq3D& seq, json extra = json::object()) {
    Jsonl f{header("pose3d"), {}};
    f.header.update(extra);
    f.header["joints"] = kNumJoints;
    f.header["unit"] = "mm";
    for (const auto& q : seq) f.rows.push_back(pose3d_row(q));
    write_jsonl(p, f);
}

inline std::vector<std::vector<double>> joint_rows(const json& row, std::size_t width, const std::string& where) {
    const auto joints = field<std::vector<std::vector<double>>>(row, "joints", where);
    if (joints.size() != static_cast<std::size_t>(kNumJoints))
        fail(ErrorKind::Format, where + ": expected 25 joints, found " + std::to_string(joints.size()));
    for (const auto& j : joints)
        if (j.size() != width) fail(ErrorKind::Format, where + ": every joint needs " + std::to_string(width) + " values");
    return joints;
}

inline PoseSeq2D read_pose2d(const fs::path& p, json* header_out = nullptr) {
    const Jsonl f = read_jsonl(p, "pose2d");
    if (header_out) *header_out = f.header;
    PoseSeq2D seq;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        const std::string where = p.string() + ":" + std::to_string(i + 2);
        const auto joints = joint_rows(f.rows[i], 3, where);
        Pose2D q;
        q.frame_index = field<int>(f.rows[i], "frame", where);
        for (int j = 0; j < kNumJoints; ++j) {
            q.joints[j] = {joints[j][0], joints[j][1]};
            q.confidence[j] = joints[j][2];
        }
        try {
            q.validate();
        } catch (const Error& e) {
            fail(ErrorKind::Format, where + ": " + e.what());
        }
        seq.push_back(q);
    }
    return seq;
}

inline PoseSeq3D read_pose3d(const fs::path& p, json* header_out = nullptr) {
    const Jsonl f = read_jsonl(p, "pose3d");
    if (header_out) *header_out = f.header;
    PoseSeq3D seq;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        const std::string where = p.string() + ":" + std::to_string(i + 2);
        const auto joints = joint_rows(f.rows[i], 3, where);
        Pose3D q;
        q.frame_index = field<int>(f.rows[i], "frame", where);
        for (int j = 0; j < kNumJoints; ++j) q.joints[j] = {joints[j][0], joints[j][1], joints[j][2]};
        seq.push_back(q);
    }
    return seq;
}

// ---- camera -------------------------------------------------------------------------

struct CameraFile {
    CameraParams camera;
    int width = 256;
    int height = 256;
};

inline void write_camera(const fs::path& p, const CameraFile& c) {
    json j = header("camera");
    j["fx"] = c.camera.fx;
    j["fy"] = c.camera.fy;
    j["cx"] = c.camera.cx;
    j["cy"] = c.camera.cy;
    j["width"] = c.width;
    j["height"] = c.height;
    write_json(p, j);
}

inline CameraFile read_camera(const fs::path& p) {
    const json j = read_json(p, "camera");
    const std::string w = p.string();
    CameraFile c;
    c.camera = {field<double>(j, "fx", w), field<double>(j, "fy", w), field<double>(j, "cx", w),
                field<double>(j, "cy", w)};
    c.width = field<int>(j, "width", w);
    c.height = field<int>(j, "height", w);
    if (!c.camera.valid() || c.width <= 0 || c.height <= 0)
        fail(ErrorKind::Format, w + ": invalid camera parameters");
    return c;
}

// ---- boxes and tracks ---------------------------------------------------------------

inline json box_json(const Box& b) { return {b.x, b.y, b.w, b.l}; }

inline Box box_from(const json& j, const std::string& where) {
    std::vector<double> v;
    try {
        v = j.get<std::vector<double>>();
    } catch (const json::exception&) {
        fail(ErrorKind::Format, where + ": a box is [x, y, w, l]");
    }
    if (v.size() != 4) fail(ErrorKind::Format, where + ": a box is [x, y, w, l]");
    const Box b{v[0], v[1], v[2], v[3]};
    if (!b.valid()) fail(ErrorKind::Format, where + ": box must have positive size");
    return b;
}

/// Initial boxes of the tracks at the first frame.
inline void write_boxes(const fs::path& p, int frame, const std::vector<Box>& boxes) {
    json j = header("boxes");
    j["frame"] = frame;
    j["boxes"] = json::array();
    for (const Box& b : boxes) j["boxes"].push_back(box_json(b));
    write_json(p, j);
}

inline std::vector<Box> read_boxes(const fs::path& p, int* frame = nullptr) {
    const json j = read_json(p, "boxes");
    std::vector<Box> out;
    for (const auto& b : field<json>(j, "boxes", p.string())) out.push_back(box_from(b, p.string()));
    if (out.empty()) fail(ErrorKind::Format, p.string() + ": no boxes");
    if (frame) *frame = field<int>(j, "frame", p.string());
    return out;
}

inline TrackStatus status_from(const std::string& s, const std::string& where) {
    if (s == "tracking") return TrackStatus::Tracking;
    if (s == "occluded") return TrackStatus::Occluded;
    if (s == "lost") return TrackStatus::Lost;
    fail(ErrorKind::Format, where + ": unknown track status '" + s + "'");
}

/// One row per frame with every track's box and status. Occlusion events
/// ride on the frame where they were raised.
inline void write_tracks(const fs::path& p, const std::vector<std::vector<TrackRecord>>& frames,
                         const std::vector<OcclusionEvent>& events, json extra = json::object()) {
    Jsonl f{header("tracks"), {}};
    f.header.update(extra);
    f.header["tracks"] = frames.empty() ? 0 : frames.front().size();
    for (const auto& recs : frames) {
        json row;
        row["frame"] = recs.empty() ? 0 : recs.front().frame;
        row["tracks"] = json::array();
        for (const auto& r : recs)
            row["tracks"].push_back({{"id", r.id}, {"box", box_json(r.box)}, {"status", status_name(r.status)}});
        json ev = json::array();
        for (const auto& e : events)
            if (!recs.empty() && e.frame == recs.front().frame)
                ev.push_back({{"track", e.track}, {"other", e.other}, {"predicted_end", e.end.frame},
                              {"fallback", e.end.fallback}});
        if (!ev.empty()) row["events"] = ev;
        f.rows.push_back(row);
    }
    write_jsonl(p, f);
}

inline std::vector<std::vector<TrackRecord>> read_tracks(const fs::path& p) {
    const Jsonl f = read_jsonl(p, "tracks");
    std::vector<std::vector<TrackRecord>> out;
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        const std::string where = p.string() + ":" + std::to_string(i + 2);
        const int frame = field<int>(f.rows[i], "frame", where);
        std::vector<TrackRecord> recs;
        for (const auto& t : field<json>(f.rows[i], "tracks", where))
            recs.push_back({frame, field<int>(t, "id", where), box_from(field<json>(t, "box", where), where),
                            status_from(field<std::string>(t, "status", where), where)});
        if (!out.empty() && recs.size() != out.front().size())
            fail(ErrorKind::Format, where + ": track count changes between rows");
        out.push_back(std::move(recs));
    }
    return out;
}

// ---- detections ------------------------------------------------------------------------

struct DetectionFrame {
    int frame = 0;
    std::vector<std::vector<std::array<double, 3>>> candidates;  // raw keypoints per candidate
};

struct Detections {
    std::string mapping = "body25-identity";
    std::vector<DetectionFrame> frames;
};

inline void write_detections(const fs::path& p, const Detections& d) {
    Jsonl f{header("detections"), {}};
    f.header["mapping"] = d.mapping;
    for (const auto& fr : d.frames) {
        json cands = json::array();
        for (const auto& c : fr.candidates) {
            json kp = json::array();
            for (const auto& k : c) kp.push_back({k[0], k[1], k[2]});
            cands.push_back({{"keypoints", kp}});
        }
        f.rows.push_back({{"frame", fr.frame}, {"candidates", cands}});
    }
    write_jsonl(p, f);
}

inline Detections read_detections(const fs::path& p) {
    const Jsonl f = read_jsonl(p, "detections");
    Detections d;
    d.mapping = field<std::string>(f.header, "mapping", p.string());
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        const std::string where = p.string() + ":" + std::to_string(i + 2);
        DetectionFrame fr;
        fr.frame = field<int>(f.rows[i], "frame", where);
        for (const auto& c : field<json>(f.rows[i], "candidates", where)) {
            std::vector<std::array<double, 3>> kp;
            for (const auto& k : field<std::vector<std::vector<double>>>(c, "keypoints", where)) {
                if (k.size() != 3) fail(ErrorKind::Format, where + ": keypoints are [u, v, confidence]");
                kp.push_back({k[0], k[1], k[2]});
            }
            fr.candidates.push_back(std::move(kp));
        }
        d.frames.push_back(std::move(fr));
    }
    return d;
}

// ---- movement labels -----------------------------------------------------------------------

/// Rows list the indices of active labels in the 154-wide layout.
inline void write_labels(const fs::path& p, const LabelSeq& s, json extra = json::object()) {
    Jsonl f{header("movements"), {}};
    f.header.update(extra);
    f.header["labels"] = kNumLabels;
    if (s.genre >= 0) {
        f.header["genre"] = s.genre;
        f.header["genre_name"] = std::string(kGenreNames[s.genre]);
    }
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
        json active = json::array();
        for (int l = 0; l < kNumLabels; ++l)
            if (s.frames[t][l]) active.push_back(l);
        f.rows.push_back({{"frame", static_cast<int>(t)}, {"active", active}});
    }
    write_jsonl(p, f);
}

inline LabelSeq read_labels(const fs::path& p) {
    const Jsonl f = read_jsonl(p, "movements");
    if (f.header.value("labels", 0) != kNumLabels)
        fail(ErrorKind::Format, p.string() + ": label files must use the 154-label layout");
    LabelSeq s;
    s.genre = f.header.value("genre", -1);
    if (s.genre < -1 || s.genre >= kNumGenres) fail(ErrorKind::Format, p.string() + ": genre out of range");
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
        const std::string where = p.string() + ":" + std::to_string(i + 2);
        std::vector<std::uint8_t> row(kNumLabels, 0);
        for (int l : field<std::vector<int>>(f.rows[i], "active", where)) {
            if (l < 0 || l >= kNumLabels) fail(ErrorKind::Format, where + ": label index out of range");
            row[l] = 1;
        }
        s.frames.push_back(std::move(row));
    }
    return s;
}

// ---- frames (binary PPM) ----------------------------------------------------------------------

inline void write_ppm(const fs::path& p, const Image& img) {
    std::string s = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    s.reserve(s.size() + img.pixels().size() * 3);
    for (const Rgb& c : img.pixels()) {
        s += static_cast<char>(c.r);
        s += static_cast<char>(c.g);
        s += static_cast<char>(c.b);
    }
    write_atomic(p, s);
}

inline Image read_ppm(const fs::path& p) {
    const std::string data = read_file(p);
    std::istringstream in(data);
    std::string magic;
    int w = 0, h = 0, maxv = 0;
    in >> magic >> w >> h >> maxv;
    if (magic != "P6" || w <= 0 || h <= 0 || maxv != 255)
        fail(ErrorKind::Format, p.string() + ": expected an 8-bit binary PPM (P6)");
    in.get();
    const std::size_t off = static_cast<std::size_t>(in.tellg());
    if (data.size() < off + static_cast<std::size_t>(w) * h * 3)
        fail(ErrorKind::Format, p.string() + ": truncated pixel data");
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = off + (static_cast<std::size_t>(y) * w + x) * 3;
            img.at(x, y) = {static_cast<std::uint8_t>(data[i]), static_cast<std::uint8_t>(data[i + 1]),
                            static_cast<std::uint8_t>(data[i + 2])};
        }
    return img;
}

inline std::string frame_name(int t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06d.ppm", t);
    return buf;
}

} // namespace dancelift::io
