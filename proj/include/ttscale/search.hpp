#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ttscale/budget.hpp"
#include "ttscale/rng.hpp"
#include "ttscale/verifiers.hpp"
#include "ttscale/world.hpp"

// Verifier-guided test-time search over step generators. Three strategies:
//
//   best_of_n    N independent full rollouts, slow-decode and score all,
//                keep the argmax. The outcome-level baseline.
//   greedy_prm   N candidate steps per iteration, fast-decode each window,
//                commit to the per-step argmax. Myopic but cheap.
//   prob_beam    K beams, each spawning M continuations per step; selection
//                samples K of the M*K candidates without replacement via a
//                softmax over step rewards, then picks the best finalist by
//                full slow-decoded score.
//
// Candidate rng streams are derived as stable_hash(seed, step, parent,
// branch). best_of_n and greedy_prm both label their candidates parent 0 /
// branch i, which makes candidate sets independent of N, aligns the first
// candidate across all algorithms under a shared seed, and turns
// prob_beam(K=1, M=N, tau->0) into greedy_prm stream for stream.

namespace ttscale {

enum class Algorithm { best_of_n, greedy_prm, prob_beam };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::best_of_n: return "best_of_n";
        case Algorithm::greedy_prm: return "greedy_prm";
        default: return "prob_beam";
    }
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "best_of_n") return Algorithm::best_of_n;
    if (s == "greedy_prm") return Algorithm::greedy_prm;
    if (s == "prob_beam") return Algorithm::prob_beam;
    throw ConfigError("unknown algorithm: " + s);
}

// Ties always resolve to the lowest index; keeping the knob explicit so the
// choice is visible at call sites and in configs.
enum class TieBreak { lowest_index };

struct SearchConfig {
    Algorithm algorithm = Algorithm::best_of_n;
    int n = 1;          // samples per step (best_of_n: total rollouts)
    int k = 1;          // beam width (prob_beam)
    int m = 1;          // branches per beam member (prob_beam)
    double tau = 0.1;   // softmax temperature
    int steps = 4;      // chunks to generate
    uint64_t seed = 0;
    bool cumulative_rewards = false;  // select on summed step rewards
    TieBreak tie_break = TieBreak::lowest_index;

    // K = M = round(sqrt(N)) is the shipped heuristic for deriving a beam
    // shape from a sample budget.
    static SearchConfig beam_from_n(int n) {
        SearchConfig cfg;
        cfg.algorithm = Algorithm::prob_beam;
        int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
        cfg.n = n;
        cfg.k = std::max(side, 1);
        cfg.m = std::max(side, 1);
        return cfg;
    }

    void validate() const {
        if (steps < 1) throw ConfigError("search needs at least one step");
        if (n < 1) throw ConfigError("n must be >= 1");
        if (!(tau > 0.0)) throw ConfigError("tau must be positive");
        if (algorithm == Algorithm::prob_beam && (k < 1 || m < 1))
            throw ConfigError("prob_beam needs k >= 1 and m >= 1");
    }
};

// Softmax with max-subtraction. Rejects non-finite rewards outright.
inline std::vector<double> softmax_weights(std::span<const double> rewards, double tau) {
    if (rewards.empty()) throw ArityError("softmax_weights: empty rewards");
    if (!(tau > 0.0)) throw ConfigError("softmax_weights: tau must be positive");
    double max_r = rewards[0];
    for (double r : rewards) {
        if (!std::isfinite(r)) throw NumericError("softmax_weights: non-finite reward");
        max_r = std::max(max_r, r);
    }
    std::vector<double> w(rewards.size());
    double sum = 0.0;
    for (size_t i = 0; i < rewards.size(); ++i) {
        w[i] = std::exp((rewards[i] - max_r) / tau);
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return w;
}

// Sample k distinct indices without replacement, proportionally to the given
// probabilities at every draw (Plackett-Luce). Implemented with the Gumbel
// top-k trick: perturb log p with i.i.d. Gumbel noise and take the k largest
// keys; the resulting ordered sample has exactly the PL distribution (Yellott
// 1977). Returned indices are ordered by perturbed score, ties to the lower
// index.
inline std::vector<int> sample_top_k(std::span<const double> probs, int k, RngStream& rng) {
    if (k < 0 || static_cast<size_t>(k) > probs.size())
        throw ArityError("sample_top_k: k must be in [0, |items|]");
    std::vector<double> keys(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0)) throw NumericError("sample_top_k: negative probability");
        double g = rng.next_gumbel();
        keys[i] = probs[i] > 0.0 ? std::log(probs[i]) + g
                                 : -std::numeric_limits<double>::infinity();
    }
    std::vector<int> order(probs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return keys[a] > keys[b]; });
    order.resize(k);
    return order;
}

inline int argmax_lowest_index(std::span<const double> values) {
    if (values.empty()) throw ArityError("argmax over empty set");
    int best = 0;
    for (size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = static_cast<int>(i);
    return best;
}

struct TraceRecord {
    int step = 0;
    int candidate = 0;
    double reward = 0.0;
    bool selected = false;
    double cost_so_far = 0.0;
};

class TraceSink {
  public:
    virtual ~TraceSink() = default;
    virtual void record(const TraceRecord&) = 0;
};

struct SearchStats {
    long generate_calls = 0;
    long slow_decodes = 0;
    long fast_decodes = 0;
    long windows_scored = 0;
};

struct SearchResult {
    Trajectory trajectory;
    VerifierReport report;
    CostLedger ledger;
    SearchStats stats;
    int chosen_index = 0;
};

template <class G>
concept StepGenerator = requires(const G& g, const typename G::State& s, RngStream& r,
                                 CostLedger& l, const LatentChunk& lat) {
    { g.generate_step(s, r).latent } -> std::convertible_to<LatentChunk>;
    { g.generate_step(s, r).next } -> std::convertible_to<typename G::State>;
    { g.slow_decode(lat, l) } -> std::convertible_to<Chunk>;
    { g.fast_decode(lat, r, l) } -> std::convertible_to<Chunk>;
    g.charge_step(l);
};

template <class S>
concept WindowScorer = requires(const S& s, const Frame& f, const Chunk& c,
                                std::span<const Chunk> cs, CostLedger& l) {
    { s.step_score(f, c, l) } -> std::convertible_to<double>;
    { s.video_report(f, cs, l) } -> std::convertible_to<VerifierReport>;
};

// Default scorer: the verifier registry applied to decode windows. A step
// window is the previous chunk's last frame plus every new frame, so the
// metrics can see the seam; the full-video window is the conditioning
// boundary plus everything generated.
struct VerifierScorer {
    const MetricRegistry* registry = nullptr;
    Prompt prompt;
    double verifier_rate = 0.01;

    double step_score(const Frame& boundary, const Chunk& chunk, CostLedger& ledger) const {
        ledger.charge(CostKind::verifier, verifier_rate);
        FrameView window;
        window.reserve(chunk.frames.size() + 1);
        window.push_back(&boundary);
        for (const Frame& f : chunk.frames) window.push_back(&f);
        return evaluate(window, prompt, *registry).aggregate;
    }

    VerifierReport video_report(const Frame& boundary, std::span<const Chunk> chunks,
                                CostLedger& ledger) const {
        ledger.charge(CostKind::verifier, verifier_rate);
        FrameView window;
        window.push_back(&boundary);
        for (const Chunk& c : chunks)
            for (const Frame& f : c.frames) window.push_back(&f);
        return evaluate(window, prompt, *registry);
    }
};

namespace detail {

inline RngStream candidate_stream(uint64_t seed, int step, int parent, int branch) {
    return RngStream(stable_hash({seed, static_cast<uint64_t>(step), static_cast<uint64_t>(parent),
                                  static_cast<uint64_t>(branch)}));
}

// Separate stream for the selection noise so candidate payloads and Gumbel
// draws cannot interfere.
inline RngStream selection_stream(uint64_t seed, int step) {
    constexpr uint64_t kSelectTag = 0x5e1ec7;
    return RngStream(stable_hash({seed, static_cast<uint64_t>(step), kSelectTag}));
}

inline const Frame& boundary_frame(const Chunk& v0) {
    if (v0.frames.empty()) throw ArityError("search needs a non-empty conditioning video");
    return v0.frames.back();
}

}  // namespace detail

// N independent rollouts, full slow decode, argmax on the video aggregate.
template <StepGenerator G, WindowScorer S>
SearchResult best_of_n(const G& gen, const typename G::State& start, const S& scorer,
                       const Chunk& v0, const Prompt& prompt, const SearchConfig& cfg,
                       const Budget& budget = {}, TraceSink* trace = nullptr) {
    cfg.validate();
    const Frame& boundary = detail::boundary_frame(v0);
    SearchResult result;
    result.trajectory.prompt = prompt;
    result.trajectory.v0 = v0;

    std::vector<TraceRecord> records;
    double best_score = 0.0;
    int best_index = -1;

    for (int i = 0; i < cfg.n; ++i) {
        typename G::State state = start;
        std::vector<LatentChunk> latents;
        latents.reserve(cfg.steps);
        for (int t = 0; t < cfg.steps; ++t) {
            RngStream rs = detail::candidate_stream(cfg.seed, t, 0, i);
            gen.charge_step(result.ledger);
            auto out = gen.generate_step(state, rs);
            result.stats.generate_calls += 1;
            latents.push_back(std::move(out.latent));
            state = std::move(out.next);
            enforce_budget(budget, result.ledger);
        }
        std::vector<Chunk> decoded;
        decoded.reserve(cfg.steps);
        for (const LatentChunk& lat : latents) {
            decoded.push_back(gen.slow_decode(lat, result.ledger));
            result.stats.slow_decodes += 1;
            enforce_budget(budget, result.ledger);
        }
        VerifierReport report = scorer.video_report(boundary, decoded, result.ledger);
        result.stats.windows_scored += 1;
        enforce_budget(budget, result.ledger);

        records.push_back({cfg.steps - 1, i, report.aggregate, false, result.ledger.total()});
        if (best_index < 0 || report.aggregate > best_score) {
            best_index = i;
            best_score = report.aggregate;
            result.trajectory.steps = std::move(latents);
            result.trajectory.decoded = std::move(decoded);
            result.report = std::move(report);
        }
    }
    result.chosen_index = best_index;
    if (trace) {
        records[best_index].selected = true;
        for (const TraceRecord& r : records) trace->record(r);
    }
    return result;
}

// Per-step argmax on fast-decoded windows; the chosen trajectory is slow
// decoded once at the end for the returned report.
template <StepGenerator G, WindowScorer S>
SearchResult greedy_prm(const G& gen, const typename G::State& start, const S& scorer,
                        const Chunk& v0, const Prompt& prompt, const SearchConfig& cfg,
                        const Budget& budget = {}, TraceSink* trace = nullptr) {
    cfg.validate();
    SearchResult result;
    result.trajectory.prompt = prompt;
    result.trajectory.v0 = v0;

    typename G::State state = start;
    Frame boundary = detail::boundary_frame(v0);
    for (int t = 0; t < cfg.steps; ++t) {
        std::vector<LatentChunk> latents(cfg.n);
        std::vector<typename G::State> nexts(cfg.n);
        std::vector<Frame> last_frames(cfg.n);
        std::vector<double> rewards(cfg.n);
        std::vector<TraceRecord> records(cfg.n);
        for (int j = 0; j < cfg.n; ++j) {
            RngStream rs = detail::candidate_stream(cfg.seed, t, 0, j);
            gen.charge_step(result.ledger);
            auto out = gen.generate_step(state, rs);
            result.stats.generate_calls += 1;
            Chunk window = gen.fast_decode(out.latent, rs, result.ledger);
            result.stats.fast_decodes += 1;
            rewards[j] = scorer.step_score(boundary, window, result.ledger);
            result.stats.windows_scored += 1;
            enforce_budget(budget, result.ledger);
            latents[j] = std::move(out.latent);
            nexts[j] = std::move(out.next);
            if (window.frames.empty()) throw DecodeError("decoder returned an empty chunk");
            last_frames[j] = std::move(window.frames.back());
            records[j] = {t, j, rewards[j], false, result.ledger.total()};
        }
        int best = argmax_lowest_index(rewards);
        if (trace) {
            records[best].selected = true;
            for (const TraceRecord& r : records) trace->record(r);
        }
        result.trajectory.steps.push_back(std::move(latents[best]));
        state = std::move(nexts[best]);
        boundary = std::move(last_frames[best]);
    }
    for (const LatentChunk& lat : result.trajectory.steps) {
        result.trajectory.decoded.push_back(gen.slow_decode(lat, result.ledger));
        result.stats.slow_decodes += 1;
        enforce_budget(budget, result.ledger);
    }
    result.report = scorer.video_report(detail::boundary_frame(v0), result.trajectory.decoded,
                                        result.ledger);
    result.stats.windows_scored += 1;
    enforce_budget(budget, result.ledger);
    result.chosen_index = 0;
    return result;
}

// Probability-based beam search: expand each of K beams M ways, score the
// M*K candidates on fast windows, softmax the rewards and sample K without
// replacement, repeat; finalists are slow decoded and the best full video
// wins. Selection on cumulative path rewards is available behind the config
// flag and off by default.
template <StepGenerator G, WindowScorer S>
SearchResult prob_beam(const G& gen, const typename G::State& start, const S& scorer,
                       const Chunk& v0, const Prompt& prompt, const SearchConfig& cfg,
                       const Budget& budget = {}, TraceSink* trace = nullptr) {
    cfg.validate();
    SearchResult result;
    result.trajectory.prompt = prompt;
    result.trajectory.v0 = v0;

    struct Beam {
        typename G::State state;
        Frame boundary;
        std::vector<LatentChunk> steps;
        double cum_reward = 0.0;
    };
    struct Expansion {
        int parent = 0;
        LatentChunk latent;
        typename G::State next;
        Frame boundary;
        double reward = 0.0;
        double cum_reward = 0.0;
    };

    std::vector<Beam> beams(cfg.k, Beam{start, detail::boundary_frame(v0), {}, 0.0});
    for (int t = 0; t < cfg.steps; ++t) {
        std::vector<Expansion> cands;
        cands.reserve(static_cast<size_t>(cfg.k) * cfg.m);
        for (int b = 0; b < cfg.k; ++b) {
            for (int j = 0; j < cfg.m; ++j) {
                RngStream rs = detail::candidate_stream(cfg.seed, t, b, j);
                gen.charge_step(result.ledger);
                auto out = gen.generate_step(beams[b].state, rs);
                result.stats.generate_calls += 1;
                Chunk window = gen.fast_decode(out.latent, rs, result.ledger);
                result.stats.fast_decodes += 1;
                Expansion e;
                e.parent = b;
                e.reward = scorer.step_score(beams[b].boundary, window, result.ledger);
                result.stats.windows_scored += 1;
                enforce_budget(budget, result.ledger);
                e.latent = std::move(out.latent);
                e.next = std::move(out.next);
                if (window.frames.empty()) throw DecodeError("decoder returned an empty chunk");
                e.boundary = std::move(window.frames.back());
                e.cum_reward = beams[b].cum_reward + e.reward;
                cands.push_back(std::move(e));
            }
        }
        std::vector<double> sel_scores(cands.size());
        for (size_t c = 0; c < cands.size(); ++c)
            sel_scores[c] = cfg.cumulative_rewards ? cands[c].cum_reward : cands[c].reward;
        std::vector<double> weights = softmax_weights(sel_scores, cfg.tau);
        RngStream sel_rng = detail::selection_stream(cfg.seed, t);
        std::vector<int> chosen = sample_top_k(weights, cfg.k, sel_rng);
        if (trace) {
            std::vector<uint8_t> is_chosen(cands.size(), 0);
            for (int c : chosen) is_chosen[c] = 1;
            for (size_t c = 0; c < cands.size(); ++c)
                trace->record({t, static_cast<int>(c), cands[c].reward,
                               is_chosen[c] != 0, result.ledger.total()});
        }
        std::vector<Beam> next_beams;
        next_beams.reserve(cfg.k);
        for (int c : chosen) {
            Expansion& e = cands[c];
            Beam nb;
            nb.state = std::move(e.next);
            nb.boundary = std::move(e.boundary);
            nb.steps = beams[e.parent].steps;  // prefix copy
            nb.steps.push_back(std::move(e.latent));
            nb.cum_reward = e.cum_reward;
            next_beams.push_back(std::move(nb));
        }
        beams = std::move(next_beams);
    }

    const Frame& boundary = detail::boundary_frame(v0);
    double best_score = 0.0;
    int best_index = -1;
    for (size_t b = 0; b < beams.size(); ++b) {
        std::vector<Chunk> decoded;
        decoded.reserve(beams[b].steps.size());
        for (const LatentChunk& lat : beams[b].steps) {
            decoded.push_back(gen.slow_decode(lat, result.ledger));
            result.stats.slow_decodes += 1;
            enforce_budget(budget, result.ledger);
        }
        VerifierReport report = scorer.video_report(boundary, decoded, result.ledger);
        result.stats.windows_scored += 1;
        enforce_budget(budget, result.ledger);
        if (best_index < 0 || report.aggregate > best_score) {
            best_index = static_cast<int>(b);
            best_score = report.aggregate;
            result.trajectory.steps = std::move(beams[b].steps);
            result.trajectory.decoded = std::move(decoded);
            result.report = std::move(report);
        }
    }
    result.chosen_index = best_index;
    return result;
}

template <StepGenerator G, WindowScorer S>
SearchResult run_search(const G& gen, const typename G::State& start, const S& scorer,
                        const Chunk& v0, const Prompt& prompt, const SearchConfig& cfg,
                        const Budget& budget = {}, TraceSink* trace = nullptr) {
    switch (cfg.algorithm) {
        case Algorithm::best_of_n: return best_of_n(gen, start, scorer, v0, prompt, cfg, budget, trace);
        case Algorithm::greedy_prm:
            return greedy_prm(gen, start, scorer, v0, prompt, cfg, budget, trace);
        default: return prob_beam(gen, start, scorer, v0, prompt, cfg, budget, trace);
    }
}

}  // namespace ttscale
