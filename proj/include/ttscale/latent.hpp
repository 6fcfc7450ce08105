#pragma once

#include <algorithm>
#include <vector>

#include "ttscale/errors.hpp"
#include "ttscale/world.hpp"

// Latent token layout. One LatentChunk is the generator's event trace for one
// step: per frame, the visible object records after corruption, plus any
// flicker speckles. Fixed-width int32 tokens:
//
//   [version=1, width, height, frame_count]
//   per frame:
//     m, then m * (color, x, y, size)      object records, scan order
//     f, then f * (cell_index, color)      flicker records
//
// Object records are canonicalized to scan order (y, x, color, size) so that
// re-encoding a decoded uncorrupted scene reproduces the tokens exactly.
// Decoded frames therefore resolve occlusion in scan order; world-core render
// keeps list order. The two agree whenever objects do not overlap.

namespace ttscale {

constexpr int32_t kLatentVersion = 1;

struct FlickerCell {
    int cell_index = 0;
    int color = 0;

    bool operator==(const FlickerCell&) const = default;
};

// Renderable content of one frame, before rasterization.
struct FrameEvents {
    std::vector<ObjectState> objects;  // only color/x/y/size are encoded
    std::vector<FlickerCell> flicker;
};

struct ChunkEvents {
    int width = 0;
    int height = 0;
    std::vector<FrameEvents> frames;
};

inline bool scan_order_less(const ObjectState& a, const ObjectState& b) {
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    if (a.color != b.color) return a.color < b.color;
    return a.size < b.size;
}

inline LatentChunk encode_events(const ChunkEvents& ev) {
    if (ev.width < 4 || ev.height < 4) throw ConfigError("latent dimensions must be >= 4");
    LatentChunk lat;
    lat.tokens.reserve(4 + ev.frames.size() * 8);
    lat.tokens = {kLatentVersion, ev.width, ev.height, static_cast<int32_t>(ev.frames.size())};
    for (const FrameEvents& fr : ev.frames) {
        std::vector<ObjectState> objs = fr.objects;
        std::sort(objs.begin(), objs.end(), scan_order_less);
        lat.tokens.push_back(static_cast<int32_t>(objs.size()));
        for (const ObjectState& o : objs) {
            lat.tokens.push_back(o.color);
            lat.tokens.push_back(o.x);
            lat.tokens.push_back(o.y);
            lat.tokens.push_back(o.size);
        }
        lat.tokens.push_back(static_cast<int32_t>(fr.flicker.size()));
        for (const FlickerCell& c : fr.flicker) {
            lat.tokens.push_back(c.cell_index);
            lat.tokens.push_back(c.color);
        }
    }
    return lat;
}

// Parse a token stream back into events. Throws DecodeError on anything that
// cannot have come from encode_events.
inline ChunkEvents decode_events(const LatentChunk& lat) {
    const std::vector<int32_t>& t = lat.tokens;
    size_t pos = 0;
    auto take = [&](const char* what) -> int32_t {
        if (pos >= t.size()) throw DecodeError(std::string("latent truncated reading ") + what);
        return t[pos++];
    };
    if (take("version") != kLatentVersion) throw DecodeError("unsupported latent version");
    ChunkEvents ev;
    ev.width = take("width");
    ev.height = take("height");
    if (ev.width < 4 || ev.height < 4) throw DecodeError("latent carries invalid dimensions");
    int frames = take("frame count");
    if (frames < 0) throw DecodeError("negative frame count");
    ev.frames.resize(frames);
    for (FrameEvents& fr : ev.frames) {
        int m = take("object count");
        if (m < 0) throw DecodeError("negative object count");
        fr.objects.resize(m);
        for (ObjectState& o : fr.objects) {
            o.color = take("color");
            o.x = take("x");
            o.y = take("y");
            o.size = take("size");
            if (o.color < 1 || o.color > 255) throw DecodeError("object color out of range");
            if (o.size < 1) throw DecodeError("object size out of range");
            if (o.x < 0 || o.y < 0 || o.x + o.size > ev.width || o.y + o.size > ev.height)
                throw DecodeError("object out of bounds");
        }
        int f = take("flicker count");
        if (f < 0) throw DecodeError("negative flicker count");
        fr.flicker.resize(f);
        for (FlickerCell& c : fr.flicker) {
            c.cell_index = take("flicker cell");
            c.color = take("flicker color");
            if (c.cell_index < 0 || c.cell_index >= ev.width * ev.height)
                throw DecodeError("flicker cell out of range");
            if (c.color < 1 || c.color > 255) throw DecodeError("flicker color out of range");
        }
    }
    if (pos != t.size()) throw DecodeError("trailing tokens after latent payload");
    return ev;
}

// Exact rasterization of an event trace.
inline Chunk render_events(const ChunkEvents& ev) {
    Chunk chunk;
    chunk.frames.reserve(ev.frames.size());
    for (const FrameEvents& fr : ev.frames) {
        Frame f = Frame::blank(ev.width, ev.height);
        for (const ObjectState& o : fr.objects) {
            for (int y = o.y; y < o.y + o.size; ++y)
                for (int x = o.x; x < o.x + o.size; ++x) f.set(x, y, static_cast<CellId>(o.color));
        }
        for (const FlickerCell& c : fr.flicker) f.cells[c.cell_index] = static_cast<CellId>(c.color);
        chunk.frames.push_back(std::move(f));
    }
    return chunk;
}

}  // namespace ttscale
