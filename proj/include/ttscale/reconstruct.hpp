#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "ttscale/latent.hpp"
#include "ttscale/world.hpp"

// Frame -> object extraction. Used to rebuild a believed world from the
// conditioning video and to re-encode decoded frames in tests. Objects are
// 4-connected same-color components; position is the bounding-box corner and
// size its larger side, which is exact for the rendered squares.

namespace ttscale {

inline std::vector<ObjectState> extract_objects(const Frame& f) {
    std::vector<ObjectState> out;
    std::vector<uint8_t> seen(f.cells.size(), 0);
    std::vector<int> stack;
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            size_t idx = static_cast<size_t>(y) * f.width + x;
            if (seen[idx] || f.cells[idx] == 0) continue;
            CellId color = f.cells[idx];
            int min_x = x, max_x = x, min_y = y, max_y = y;
            stack.assign(1, static_cast<int>(idx));
            seen[idx] = 1;
            while (!stack.empty()) {
                int cur = stack.back();
                stack.pop_back();
                int cx = cur % f.width;
                int cy = cur / f.width;
                min_x = std::min(min_x, cx);
                max_x = std::max(max_x, cx);
                min_y = std::min(min_y, cy);
                max_y = std::max(max_y, cy);
                const int nx[4] = {cx - 1, cx + 1, cx, cx};
                const int ny[4] = {cy, cy, cy - 1, cy + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= f.width || ny[k] < 0 || ny[k] >= f.height) continue;
                    size_t nidx = static_cast<size_t>(ny[k]) * f.width + nx[k];
                    if (!seen[nidx] && f.cells[nidx] == color) {
                        seen[nidx] = 1;
                        stack.push_back(static_cast<int>(nidx));
                    }
                }
            }
            ObjectState o;
            o.id = static_cast<int>(out.size());  // scan order
            o.color = color;
            o.x = min_x;
            o.y = min_y;
            o.size = std::max(max_x - min_x, max_y - min_y) + 1;
            out.push_back(o);
        }
    }
    return out;
}

// Rebuild a world from the last two frames of a conditioning video: objects
// from the final frame, velocities from a same-color nearest match in the
// frame before. Unmatched objects get velocity zero.
inline WorldState reconstruct_world(const Frame& prev, const Frame& last) {
    WorldState w;
    w.width = last.width;
    w.height = last.height;
    w.step_index = 0;
    w.objects = extract_objects(last);
    std::vector<ObjectState> before = extract_objects(prev);
    std::vector<uint8_t> used(before.size(), 0);
    for (ObjectState& o : w.objects) {
        int best = -1;
        long best_d2 = 0;
        for (size_t j = 0; j < before.size(); ++j) {
            if (used[j] || before[j].color != o.color) continue;
            long dx = before[j].x - o.x;
            long dy = before[j].y - o.y;
            long d2 = dx * dx + dy * dy;
            if (best < 0 || d2 < best_d2) {
                best = static_cast<int>(j);
                best_d2 = d2;
            }
        }
        if (best >= 0) {
            used[best] = 1;
            o.vx = o.x - before[best].x;
            o.vy = o.y - before[best].y;
        }
    }
    return w;
}

// Re-encode rendered frames as a latent. Inverse of slow decode on scenes
// whose objects never overlap; flicker speckles are indistinguishable from
// 1x1 objects by design, so corrupted scenes do not round-trip.
inline LatentChunk reencode_chunk(const Chunk& chunk) {
    if (chunk.frames.empty()) throw ArityError("reencode_chunk: empty chunk");
    ChunkEvents ev;
    ev.width = chunk.frames.front().width;
    ev.height = chunk.frames.front().height;
    for (const Frame& f : chunk.frames) {
        FrameEvents fr;
        fr.objects = extract_objects(f);
        ev.frames.push_back(std::move(fr));
    }
    return encode_events(ev);
}

}  // namespace ttscale
