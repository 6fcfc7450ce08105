#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ttscale/config.hpp"
#include "ttscale/rng.hpp"
#include "ttscale/world.hpp"

// Per-seed problem instances. The instance stream depends only on the base
// seed and the seed index, never on the grid point, so every algorithm/model
// combination at a given seed index sees the same world and prompt.

namespace ttscale {

struct ProblemInstance {
    Prompt prompt;
    Chunk v0;           // input_frames clean renders of the true world
    WorldState world0;  // state at the first v0 frame
};

namespace detail {

inline constexpr uint64_t kInstanceTag = 0x1f57a9ce;

inline bool boxes_overlap(const ObjectState& a, const ObjectState& b) {
    return a.x < b.x + b.size && b.x < a.x + a.size && a.y < b.y + b.size && b.y < a.y + a.size;
}

}  // namespace detail

inline ProblemInstance sample_instance(const WorldConfig& wc, uint64_t base_seed,
                                       long seed_index) {
    RngStream rng{stable_hash(base_seed, detail::kInstanceTag,
                              static_cast<uint64_t>(seed_index))};

    int count = wc.object_count_min +
                static_cast<int>(rng.next_below(
                    static_cast<uint64_t>(wc.object_count_max - wc.object_count_min + 1)));

    // Distinct colors via a partial Fisher-Yates over 1..colors.
    std::vector<int> palette(static_cast<size_t>(wc.colors));
    std::iota(palette.begin(), palette.end(), 1);
    for (int i = 0; i < count; ++i) {
        size_t j = static_cast<size_t>(i) +
                   static_cast<size_t>(rng.next_below(palette.size() - static_cast<size_t>(i)));
        std::swap(palette[static_cast<size_t>(i)], palette[j]);
    }

    WorldState w;
    w.width = wc.width;
    w.height = wc.height;
    for (int i = 0; i < count; ++i) {
        ObjectState obj;
        obj.id = i;
        obj.color = static_cast<CellId>(palette[static_cast<size_t>(i)]);
        obj.size = wc.object_size_min +
                   static_cast<int>(rng.next_below(
                       static_cast<uint64_t>(wc.object_size_max - wc.object_size_min + 1)));
        // Non-overlapping placement when possible; placement stays deterministic
        // even when the rejection loop gives up.
        for (int attempt = 0; attempt < 200; ++attempt) {
            obj.x = static_cast<int>(rng.next_below(static_cast<uint64_t>(wc.width - obj.size + 1)));
            obj.y = static_cast<int>(rng.next_below(static_cast<uint64_t>(wc.height - obj.size + 1)));
            bool clash = false;
            for (const ObjectState& other : w.objects)
                if (detail::boxes_overlap(obj, other)) { clash = true; break; }
            if (!clash) break;
        }
        while (true) {
            obj.vx = -wc.max_speed +
                     static_cast<int>(rng.next_below(static_cast<uint64_t>(2 * wc.max_speed + 1)));
            obj.vy = -wc.max_speed +
                     static_cast<int>(rng.next_below(static_cast<uint64_t>(2 * wc.max_speed + 1)));
            if (obj.vx != 0 || obj.vy != 0) break;
        }
        w.objects.push_back(obj);
    }

    ProblemInstance inst;
    inst.world0 = w;
    WorldState cur = w;
    for (int f = 0; f < wc.input_frames; ++f) {
        inst.v0.frames.push_back(render(cur));
        if (f + 1 < wc.input_frames) cur = advance(cur);
    }

    // The prompt describes what the input frames actually show, so a faithful
    // continuation starts fully aligned.
    inst.prompt.object_count = count;
    long sx = 0, sy = 0;
    for (const ObjectState& o : w.objects) { sx += o.vx; sy += o.vy; }
    if (sx == 0 && sy == 0) {
        inst.prompt.motion_direction = MotionDirection::none;
    } else if (std::abs(sx) >= std::abs(sy)) {
        inst.prompt.motion_direction = sx > 0 ? MotionDirection::right : MotionDirection::left;
    } else {
        inst.prompt.motion_direction = sy > 0 ? MotionDirection::down : MotionDirection::up;
    }
    if (count >= 2) {
        const ObjectState& a = cur.objects[0];
        const ObjectState& b = cur.objects[1];
        double ax = a.x + a.size / 2.0, ay = a.y + a.size / 2.0;
        double bx = b.x + b.size / 2.0, by = b.y + b.size / 2.0;
        if (ax != bx)
            inst.prompt.spatial_constraints.push_back(
                {a.color, ax < bx ? SpatialRelation::left_of : SpatialRelation::right_of, b.color});
        if (ay != by)
            inst.prompt.spatial_constraints.push_back(
                {a.color, ay < by ? SpatialRelation::above : SpatialRelation::below, b.color});
    }
    return inst;
}

}  // namespace ttscale
