#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tensor.hpp"

namespace dancelift::diff {

inline constexpr const char* kWeightsFormat = "dancelift-weights";
inline constexpr int kWeightsVersion = 1;

/// Flat little-endian float64 blob plus a JSON manifest describing the
/// name, shape, and offset (in values) of every parameter.
struct WeightsBundle {
    nlohmann::json manifest;
    std::vector<char> blob;
};

inline WeightsBundle pack_weights(const std::vector<const Parameter*>& params) {
    static_assert(std::endian::native == std::endian::little, "weights are stored little-endian");
    WeightsBundle out;
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t offset = 0;
    for (const Parameter* p : params) {
        const Shape& s = p->value.shape();
        tensors.push_back({{"name", p->name},
                           {"shape", {s.time, s.channel, s.batch}},
                           {"offset", offset},
                           {"count", p->value.size()}});
        const auto* bytes = reinterpret_cast<const char*>(p->value.values().data());
        out.blob.insert(out.blob.end(), bytes, bytes + p->value.size() * sizeof(double));
        offset += p->value.size();
    }
    out.manifest = {{"format", kWeightsFormat},
                    {"version", kWeightsVersion},
                    {"dtype", "float64-le"},
                    {"total", offset},
                    {"tensors", tensors}};
    return out;
}

/// Restores values into `params`, matching by name and shape.
inline void unpack_weights(const WeightsBundle& in, const std::vector<Parameter*>& params) {
    const auto& m = in.manifest;
    if (m.value("format", "") != kWeightsFormat || m.value("version", 0) != kWeightsVersion)
        fail(ErrorKind::Format, "unsupported weights manifest (format/version mismatch)");
    const std::size_t total = m.at("total").get<std::size_t>();
    if (in.blob.size() != total * sizeof(double))
        fail(ErrorKind::Format, "weights blob size does not match manifest total");
    for (Parameter* p : params) {
        bool found = false;
        for (const auto& t : m.at("tensors")) {
            if (t.at("name").get<std::string>() != p->name) continue;
            const auto shp = t.at("shape").get<std::vector<int>>();
            const Shape s{shp.at(0), shp.at(1), shp.at(2)};
            if (!(s == p->value.shape()))
                fail(ErrorKind::Format, "weights tensor '" + p->name + "' has shape " + s.str() +
                                            ", expected " + p->value.shape().str());
            const std::size_t off = t.at("offset").get<std::size_t>();
            std::memcpy(p->value.values().data(), in.blob.data() + off * sizeof(double),
                        p->value.size() * sizeof(double));
            found = true;
            break;
        }
        if (!found) fail(ErrorKind::Format, "weights manifest lacks tensor '" + p->name + "'");
    }
}

} // namespace dancelift::diff
