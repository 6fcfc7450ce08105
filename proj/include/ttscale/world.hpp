#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ttscale/errors.hpp"

// Grid world primitives. A frame is a row-major grid of color ids, 0 meaning
// background. Objects are filled axis-aligned squares that move with constant
// integer velocity and bounce elastically off the walls. Everything here is a
// value type; advance/render are pure.

namespace ttscale {

using CellId = uint8_t;  // 0 = background, 1..colors = object palette

struct Frame {
    int width = 0;
    int height = 0;
    std::vector<CellId> cells;  // row-major, size == width * height

    static Frame blank(int width, int height) {
        if (width < 4 || height < 4) throw ConfigError("frame dimensions must be >= 4");
        Frame f;
        f.width = width;
        f.height = height;
        f.cells.assign(static_cast<size_t>(width) * height, 0);
        return f;
    }

    CellId at(int x, int y) const { return cells[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, CellId c) { cells[static_cast<size_t>(y) * width + x] = c; }

    bool operator==(const Frame&) const = default;
};

// Ordered frames sharing one geometry. Generated chunks carry exactly
// frames_per_chunk frames; the conditioning video carries input_frames. Length
// is validated where chunks are produced, not baked into the type.
struct Chunk {
    std::vector<Frame> frames;

    bool operator==(const Chunk&) const = default;
};

// Generator-facing token stream for one step. Layout is owned by latent.hpp.
struct LatentChunk {
    std::vector<int32_t> tokens;

    bool operator==(const LatentChunk&) const = default;
};

enum class MotionDirection { none, left, right, up, down };

inline std::string to_string(MotionDirection d) {
    switch (d) {
        case MotionDirection::left: return "left";
        case MotionDirection::right: return "right";
        case MotionDirection::up: return "up";
        case MotionDirection::down: return "down";
        default: return "none";
    }
}

inline MotionDirection direction_from_string(const std::string& s) {
    if (s == "none") return MotionDirection::none;
    if (s == "left") return MotionDirection::left;
    if (s == "right") return MotionDirection::right;
    if (s == "up") return MotionDirection::up;
    if (s == "down") return MotionDirection::down;
    throw ConfigError("unknown motion direction: " + s);
}

// Relation between the centroids of two colors.
enum class SpatialRelation { left_of, right_of, above, below };

inline std::string to_string(SpatialRelation r) {
    switch (r) {
        case SpatialRelation::left_of: return "left_of";
        case SpatialRelation::right_of: return "right_of";
        case SpatialRelation::above: return "above";
        default: return "below";
    }
}

inline SpatialRelation relation_from_string(const std::string& s) {
    if (s == "left_of") return SpatialRelation::left_of;
    if (s == "right_of") return SpatialRelation::right_of;
    if (s == "above") return SpatialRelation::above;
    if (s == "below") return SpatialRelation::below;
    throw ConfigError("unknown spatial relation: " + s);
}

struct SpatialConstraint {
    int subject_color = 0;
    SpatialRelation relation = SpatialRelation::left_of;
    int object_color = 0;

    bool operator==(const SpatialConstraint&) const = default;
};

struct Prompt {
    int object_count = 0;
    MotionDirection motion_direction = MotionDirection::none;
    std::vector<SpatialConstraint> spatial_constraints;

    bool operator==(const Prompt&) const = default;
};

struct ObjectState {
    int id = 0;
    int color = 0;  // 1..colors
    int x = 0;      // top-left cell
    int y = 0;
    int vx = 0;  // cells per frame
    int vy = 0;
    int size = 1;  // square side

    bool operator==(const ObjectState&) const = default;
};

struct WorldState {
    int width = 0;
    int height = 0;
    std::vector<ObjectState> objects;  // later entries overdraw earlier ones
    int step_index = 0;

    bool operator==(const WorldState&) const = default;
};

// Reflect p into [0, limit] (inclusive), flipping the velocity sign per wall
// hit. Velocities are small relative to the grid so the loop rarely runs twice.
inline void bounce_axis(int& p, int& v, int limit) {
    if (limit <= 0) {
        p = 0;
        v = 0;
        return;
    }
    while (p < 0 || p > limit) {
        if (p < 0) {
            p = -p;
            v = -v;
        } else {
            p = 2 * limit - p;
            v = -v;
        }
    }
}

// One tick of the closed-form dynamics: translate, then bounce elastically.
// Pure; preserves object count, colors, sizes and per-axis speed magnitudes.
inline WorldState advance(const WorldState& w) {
    WorldState next = w;
    for (ObjectState& o : next.objects) {
        o.x += o.vx;
        o.y += o.vy;
        bounce_axis(o.x, o.vx, w.width - o.size);
        bounce_axis(o.y, o.vy, w.height - o.size);
    }
    next.step_index = w.step_index + 1;
    return next;
}

// Paint the world into a fresh frame. Objects are clipped at the borders
// (callers keep true positions in-bounds; clipping matters for jittered
// render requests). Later-listed objects overdraw earlier ones.
inline Frame render(const WorldState& w) {
    Frame f = Frame::blank(w.width, w.height);
    for (const ObjectState& o : w.objects) {
        if (o.size <= 0) throw ConfigError("object size must be positive");
        int x0 = std::max(0, o.x);
        int y0 = std::max(0, o.y);
        int x1 = std::min(w.width, o.x + o.size);
        int y1 = std::min(w.height, o.y + o.size);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) f.set(x, y, static_cast<CellId>(o.color));
    }
    return f;
}

// Full trajectory bundle: conditioning video, chosen latents, and (once
// decoded) the frames they expand to.
struct Trajectory {
    Prompt prompt;
    Chunk v0;
    std::vector<LatentChunk> steps;
    std::vector<Chunk> decoded;  // empty until a decoder ran

    bool operator==(const Trajectory&) const = default;
};

}  // namespace ttscale
