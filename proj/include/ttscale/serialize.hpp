#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttscale/errors.hpp"
#include "ttscale/world.hpp"

// Frame/chunk interchange. JSON for humans and goldens, a compact binary form
// for bulk dumps: header of width, height, frame count as little-endian
// uint32, then one byte per cell, frame-major row-major.

namespace ttscale {

inline nlohmann::json frame_to_json(const Frame& f) {
    return {{"width", f.width}, {"height", f.height}, {"cells", f.cells}};
}

inline Frame frame_from_json(const nlohmann::json& j) {
    Frame f;
    f.width = j.at("width").get<int>();
    f.height = j.at("height").get<int>();
    f.cells = j.at("cells").get<std::vector<CellId>>();
    if (f.width < 4 || f.height < 4 ||
        f.cells.size() != static_cast<size_t>(f.width) * static_cast<size_t>(f.height))
        throw IoError("frame JSON carries inconsistent dimensions");
    return f;
}

inline nlohmann::json chunk_to_json(const Chunk& c) {
    nlohmann::json frames = nlohmann::json::array();
    for (const Frame& f : c.frames) frames.push_back(frame_to_json(f));
    return {{"frames", frames}};
}

inline Chunk chunk_from_json(const nlohmann::json& j) {
    Chunk c;
    for (const nlohmann::json& f : j.at("frames")) c.frames.push_back(frame_from_json(f));
    return c;
}

inline void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

inline uint32_t get_u32le(const std::vector<uint8_t>& in, size_t pos) {
    return static_cast<uint32_t>(in[pos]) | static_cast<uint32_t>(in[pos + 1]) << 8 |
           static_cast<uint32_t>(in[pos + 2]) << 16 | static_cast<uint32_t>(in[pos + 3]) << 24;
}

inline std::vector<uint8_t> chunk_to_bytes(const Chunk& c) {
    if (c.frames.empty()) throw ArityError("chunk_to_bytes: empty chunk");
    const Frame& first = c.frames.front();
    std::vector<uint8_t> out;
    out.reserve(12 + c.frames.size() * first.cells.size());
    put_u32le(out, static_cast<uint32_t>(first.width));
    put_u32le(out, static_cast<uint32_t>(first.height));
    put_u32le(out, static_cast<uint32_t>(c.frames.size()));
    for (const Frame& f : c.frames) {
        if (f.width != first.width || f.height != first.height)
            throw IoError("chunk_to_bytes: mixed frame geometries");
        out.insert(out.end(), f.cells.begin(), f.cells.end());
    }
    return out;
}

inline Chunk chunk_from_bytes(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 12) throw IoError("chunk bytes truncated");
    uint32_t width = get_u32le(bytes, 0);
    uint32_t height = get_u32le(bytes, 4);
    uint32_t count = get_u32le(bytes, 8);
    size_t per_frame = static_cast<size_t>(width) * height;
    if (width < 4 || height < 4 || bytes.size() != 12 + per_frame * count)
        throw IoError("chunk bytes carry inconsistent header");
    Chunk c;
    for (uint32_t i = 0; i < count; ++i) {
        Frame f;
        f.width = static_cast<int>(width);
        f.height = static_cast<int>(height);
        auto begin = bytes.begin() + 12 + static_cast<long>(i * per_frame);
        f.cells.assign(begin, begin + static_cast<long>(per_frame));
        c.frames.push_back(std::move(f));
    }
    return c;
}

}  // namespace ttscale
