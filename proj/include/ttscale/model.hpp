#pragma once

#include <set>
#include <string>
#include <vector>

#include "ttscale/budget.hpp"
#include "ttscale/latent.hpp"
#include "ttscale/reconstruct.hpp"
#include "ttscale/rng.hpp"
#include "ttscale/world.hpp"

// Toy world model. It knows the true dynamics but corrupts its own rollout in
// capacity-dependent ways: objects vanish for good, positions jitter for a
// frame, colors flip for a frame, background cells flicker. A model with
// capacity 1.0 is a perfect simulator. Latents carry the corrupted event
// trace; the slow decoder rasterizes it exactly, the fast one adds cheap
// per-cell noise. The cost asymmetry between the two decoders is what search
// exploits.

namespace ttscale {

struct ModelSpec {
    std::string name = "custom";
    double capacity = 1.0;       // in (0, 1]
    double params_b = 1.0;       // billions of parameters, drives step cost
    double decoder_noise_p = 0.02;
    int flicker_cells = 1;       // cells recolored per flicker event

    // Corruption profile. Linear in (1 - capacity); a perfect model never
    // corrupts anything.
    double p_disappear() const { return 0.20 * (1.0 - capacity); }
    double jitter_sigma() const { return 1.5 * (1.0 - capacity); }
    double color_flip_p() const { return 0.10 * (1.0 - capacity); }
    double background_flicker_p() const { return 0.15 * (1.0 - capacity); }

    void validate() const {
        if (!(capacity > 0.0 && capacity <= 1.0)) throw ConfigError("capacity must be in (0, 1]");
        if (!(params_b > 0.0)) throw ConfigError("params_b must be positive");
        if (!(decoder_noise_p >= 0.0 && decoder_noise_p < 1.0))
            throw ConfigError("decoder_noise_p must be in [0, 1)");
        if (flicker_cells < 1) throw ConfigError("flicker_cells must be >= 1");
    }
};

// Bundled presets; parameter counts in billions.
inline ModelSpec model_preset(const std::string& name) {
    ModelSpec m;
    m.name = name;
    if (name == "wfm-4b") {
        m.capacity = 0.5;
        m.params_b = 4.0;
    } else if (name == "wfm-5b") {
        m.capacity = 0.55;
        m.params_b = 5.0;
    } else if (name == "wfm-12b") {
        m.capacity = 0.9;
        m.params_b = 12.0;
    } else if (name == "wfm-13b") {
        m.capacity = 0.92;
        m.params_b = 13.0;
    } else {
        throw ConfigError("unknown model preset: " + name);
    }
    return m;
}

// Belief the generator carries between steps.
struct GenState {
    WorldState believed;
    std::vector<int> dropped;  // object ids lost to disappearance, sorted
    int chunk_index = 0;
    uint64_t rng_key = 0;  // seed record from init, for unguided rollouts
    bool degenerate_input = false;
};

struct StepOutcome {
    LatentChunk latent;
    GenState next;
};

class ToyWfm {
  public:
    using State = GenState;
    using Outcome = StepOutcome;

    ToyWfm(ModelSpec model, int colors, int frames_per_chunk, CostModel costs = {})
        : model_(std::move(model)), colors_(colors), frames_per_chunk_(frames_per_chunk),
          costs_(costs) {
        model_.validate();
        if (colors_ < 2) throw ConfigError("world needs at least 2 colors");
        if (frames_per_chunk_ < 1) throw ConfigError("frames_per_chunk must be >= 1");
    }

    const ModelSpec& model() const { return model_; }
    const CostModel& costs() const { return costs_; }
    int frames_per_chunk() const { return frames_per_chunk_; }

    // Condition on an input video: believed world from the last frame,
    // velocities from the one before. Deterministic.
    GenState init_state(const Chunk& v0, const Prompt& prompt, uint64_t seed) const {
        if (v0.frames.empty()) throw ArityError("init_state: empty conditioning video");
        const Frame& last = v0.frames.back();
        const Frame& prev = v0.frames.size() >= 2 ? v0.frames[v0.frames.size() - 2] : last;
        GenState s;
        s.believed = reconstruct_world(prev, last);
        s.rng_key = seed;
        s.degenerate_input = s.believed.objects.empty() && prompt.object_count > 0;
        return s;
    }

    // Advance the believed world one chunk, sampling corruption events along
    // the way. Pure in (state, rng stream): the same stream always yields the
    // same outcome. Draw order is part of the format; do not reorder.
    StepOutcome generate_step(const GenState& state, RngStream& rng) const {
        const int k = frames_per_chunk_;
        WorldState world = state.believed;

        // Disappearance is sampled per object per step; the victim drops out
        // at a uniform frame inside the chunk and never comes back.
        std::vector<int> death_frame(world.objects.size(), -1);
        for (size_t i = 0; i < world.objects.size(); ++i) {
            double u = rng.next_unit();
            if (u < model_.p_disappear())
                death_frame[i] = static_cast<int>(rng.next_below(static_cast<uint32_t>(k)));
        }

        ChunkEvents ev;
        ev.width = world.width;
        ev.height = world.height;
        ev.frames.resize(k);
        std::vector<uint8_t> covered(static_cast<size_t>(world.width) * world.height);

        for (int f = 0; f < k; ++f) {
            world = advance(world);
            FrameEvents& fr = ev.frames[f];
            for (size_t i = 0; i < world.objects.size(); ++i) {
                if (death_frame[i] >= 0 && death_frame[i] <= f) continue;
                ObjectState o = world.objects[i];
                // per-frame render jitter; the believed position is untouched
                int jx = static_cast<int>(std::lround(model_.jitter_sigma() * rng.next_gaussian()));
                int jy = static_cast<int>(std::lround(model_.jitter_sigma() * rng.next_gaussian()));
                o.x = std::clamp(o.x + jx, 0, world.width - o.size);
                o.y = std::clamp(o.y + jy, 0, world.height - o.size);
                fr.objects.push_back(o);
            }
            // one potential color-flip event per frame, hitting one object
            double uf = rng.next_unit();
            if (uf < model_.color_flip_p() && !fr.objects.empty()) {
                ObjectState& victim =
                    fr.objects[rng.next_below(static_cast<uint32_t>(fr.objects.size()))];
                int r = 1 + static_cast<int>(rng.next_below(static_cast<uint32_t>(colors_ - 1)));
                victim.color = r < victim.color ? r : r + 1;
            }
            // one potential background-flicker event per frame
            double ub = rng.next_unit();
            if (ub < model_.background_flicker_p()) {
                std::fill(covered.begin(), covered.end(), 0);
                for (const ObjectState& o : fr.objects)
                    for (int y = o.y; y < o.y + o.size; ++y)
                        for (int x = o.x; x < o.x + o.size; ++x)
                            covered[static_cast<size_t>(y) * world.width + x] = 1;
                for (int c = 0; c < model_.flicker_cells; ++c) {
                    int cell = -1;
                    for (int attempt = 0; attempt < 20; ++attempt) {
                        int cand = static_cast<int>(rng.next_below(
                            static_cast<uint32_t>(world.width * world.height)));
                        if (!covered[cand]) {
                            cell = cand;
                            break;
                        }
                    }
                    if (cell < 0) continue;  // scene nearly full, let it go
                    FlickerCell fc;
                    fc.cell_index = cell;
                    fc.color = 1 + static_cast<int>(rng.next_below(static_cast<uint32_t>(colors_)));
                    fr.flicker.push_back(fc);
                }
            }
        }

        StepOutcome out;
        out.latent = encode_events(ev);
        out.next = state;
        out.next.believed = world;
        out.next.chunk_index = state.chunk_index + 1;
        for (size_t i = world.objects.size(); i-- > 0;) {
            if (death_frame[i] >= 0) {
                out.next.dropped.push_back(out.next.believed.objects[i].id);
                out.next.believed.objects.erase(out.next.believed.objects.begin() + i);
            }
        }
        std::sort(out.next.dropped.begin(), out.next.dropped.end());
        return out;
    }

    // Exact rasterization of the event trace. Expensive by construction.
    Chunk slow_decode(const LatentChunk& latent, CostLedger& ledger) const {
        ledger.charge(CostKind::slow_decode, costs_.slow_decode_rate);
        return render_events(decode_events(latent));
    }

    // Cheap proxy decode: exact render plus i.i.d. per-cell color noise.
    Chunk fast_decode(const LatentChunk& latent, RngStream& rng, CostLedger& ledger) const {
        ledger.charge(CostKind::fast_decode, costs_.fast_decode_rate);
        Chunk chunk = render_events(decode_events(latent));
        const double p = model_.decoder_noise_p;
        for (Frame& f : chunk.frames) {
            for (CellId& cell : f.cells) {
                if (rng.next_unit() < p) {
                    int r = static_cast<int>(rng.next_below(static_cast<uint32_t>(colors_)));
                    cell = static_cast<CellId>(r < cell ? r : r + 1);
                }
            }
        }
        return chunk;
    }

    void charge_step(CostLedger& ledger) const {
        ledger.charge(CostKind::generation, costs_.per_step(model_.params_b));
    }

  private:
    ModelSpec model_;
    int colors_;
    int frames_per_chunk_;
    CostModel costs_;
};

}  // namespace ttscale
