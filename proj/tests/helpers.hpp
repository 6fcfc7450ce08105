#pragma once

#include <filesystem>
#include <string>

#include "ttscale/world.hpp"

// Shared scaffolding for the test binaries. Everything here builds inputs;
// nothing here re-implements library logic (oracles live in the individual
// suites so they stay independent).

namespace ttscale::testutil {

inline std::filesystem::path source_dir() { return TTSCALE_SOURCE_DIR; }

// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    std::filesystem::path p = std::filesystem::temp_directory_path() / "ttscale_tests" / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline ObjectState object(int id, int color, int x, int y, int vx, int vy, int size) {
    ObjectState o;
    o.id = id;
    o.color = color;
    o.x = x;
    o.y = y;
    o.vx = vx;
    o.vy = vy;
    o.size = size;
    return o;
}

inline WorldState world(int width, int height, std::vector<ObjectState> objects) {
    WorldState w;
    w.width = width;
    w.height = height;
    w.objects = std::move(objects);
    return w;
}

// Conditioning video: clean renders of `frames` consecutive states.
inline Chunk render_video(const WorldState& start, int frames) {
    Chunk v;
    WorldState cur = start;
    for (int f = 0; f < frames; ++f) {
        v.frames.push_back(render(cur));
        if (f + 1 < frames) cur = advance(cur);
    }
    return v;
}

}  // namespace ttscale::testutil
