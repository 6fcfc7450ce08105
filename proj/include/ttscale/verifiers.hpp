#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ttscale/budget.hpp"
#include "ttscale/errors.hpp"
#include "ttscale/world.hpp"

// Rule-based verifiers. Each metric maps a window of decoded frames to a raw
// score in [0, 1]; normalized scores are floored at kScoreFloor so the
// geometric-mean aggregate never collapses to zero. The registry is open:
// callers can add metric implementations or swap the frame-feature extractor
// (e.g. to plug in learned embeddings) without touching the built-ins.

namespace ttscale {

constexpr double kScoreFloor = 1e-6;

// Frame descriptor: (colors+1)-bin color histogram, L1-normalized, followed
// by a 4x4 grid of per-block occupancy fractions. Dimension colors + 17.
using FrameFeature = std::vector<double>;

inline FrameFeature frame_feature(const Frame& f, int colors) {
    FrameFeature feat(static_cast<size_t>(colors) + 17, 0.0);
    const double inv_cells = 1.0 / static_cast<double>(f.cells.size());
    std::array<int, 16> block_occupied{};
    std::array<int, 16> block_total{};
    for (int y = 0; y < f.height; ++y) {
        int by = y * 4 / f.height;
        for (int x = 0; x < f.width; ++x) {
            int bx = x * 4 / f.width;
            CellId c = f.at(x, y);
            if (c <= colors) feat[c] += inv_cells;
            block_total[by * 4 + bx] += 1;
            block_occupied[by * 4 + bx] += c != 0;
        }
    }
    for (int b = 0; b < 16; ++b) {
        feat[static_cast<size_t>(colors) + 1 + b] =
            block_total[b] ? static_cast<double>(block_occupied[b]) / block_total[b] : 0.0;
    }
    return feat;
}

using FeatureFn = std::function<FrameFeature(const Frame&)>;
using FrameView = std::vector<const Frame*>;

struct MetricInput {
    const FrameView& window;
    const Prompt& prompt;
    int colors;
    const FeatureFn& features;
};

using MetricFn = std::function<double(const MetricInput&)>;

inline double cosine_similarity(const FrameFeature& a, const FrameFeature& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return na == nb ? 1.0 : 0.0;
    return dot / std::sqrt(na * nb);
}

inline std::set<int> colors_present(const Frame& f) {
    std::set<int> out;
    for (CellId c : f.cells)
        if (c != 0) out.insert(c);
    return out;
}

// 0.5 * mean cosine similarity of successive features
// + 0.5 * object permanence (colors that survive into the next frame).
inline double metric_temporal_consistency(const MetricInput& in) {
    if (in.window.size() < 2)
        throw ArityError("temporal_consistency needs a window of at least 2 frames");
    double cos_sum = 0.0;
    double perm_sum = 0.0;
    FrameFeature prev_feat = in.features(*in.window[0]);
    std::set<int> prev_colors = colors_present(*in.window[0]);
    const size_t pairs = in.window.size() - 1;
    for (size_t i = 1; i < in.window.size(); ++i) {
        FrameFeature feat = in.features(*in.window[i]);
        std::set<int> colors = colors_present(*in.window[i]);
        cos_sum += cosine_similarity(prev_feat, feat);
        if (prev_colors.empty()) {
            perm_sum += 1.0;  // nothing to persist
        } else {
            int kept = 0;
            for (int c : prev_colors) kept += colors.count(c);
            perm_sum += static_cast<double>(kept) / static_cast<double>(prev_colors.size());
        }
        prev_feat = std::move(feat);
        prev_colors = std::move(colors);
    }
    return 0.5 * cos_sum / pairs + 0.5 * perm_sum / pairs;
}

// 0.5 * normalized color entropy + 0.5 * clamped coverage, averaged over the
// window. An all-background frame scores zero.
inline double metric_perceptual_quality(const MetricInput& in) {
    if (in.window.empty()) throw ArityError("perceptual_quality needs a non-empty window");
    double sum = 0.0;
    for (const Frame* f : in.window) {
        std::vector<int> counts(static_cast<size_t>(in.colors) + 1, 0);
        int non_bg = 0;
        for (CellId c : f->cells) {
            if (c != 0 && c <= in.colors) {
                counts[c] += 1;
                non_bg += 1;
            }
        }
        double entropy = 0.0;
        if (non_bg > 0) {
            for (int c = 1; c <= in.colors; ++c) {
                if (counts[c] == 0) continue;
                double p = static_cast<double>(counts[c]) / non_bg;
                entropy -= p * std::log(p);
            }
        }
        double entropy_term = non_bg > 0 ? entropy / std::log(static_cast<double>(in.colors)) : 0.0;
        double coverage = static_cast<double>(non_bg) / static_cast<double>(f->cells.size());
        double coverage_term = std::min(coverage, 0.3) / 0.3;
        sum += 0.5 * entropy_term + 0.5 * coverage_term;
    }
    return sum / static_cast<double>(in.window.size());
}

struct Centroid {
    double x = 0.0, y = 0.0;
    bool present = false;
};

inline Centroid color_centroid(const Frame& f, int color) {
    Centroid c;
    long sx = 0, sy = 0, n = 0;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            if (f.at(x, y) == color) {
                sx += x;
                sy += y;
                n += 1;
            }
    if (n > 0) {
        c.x = static_cast<double>(sx) / n;
        c.y = static_cast<double>(sy) / n;
        c.present = true;
    }
    return c;
}

// Fraction of prompt constraints satisfied by color centroids, averaged over
// the window. A missing color leaves its constraint unsatisfied; a prompt
// with no constraints is trivially satisfied.
inline double metric_spatial_alignment(const MetricInput& in) {
    if (in.window.empty()) throw ArityError("spatial_alignment needs a non-empty window");
    if (in.prompt.spatial_constraints.empty()) return 1.0;
    double sum = 0.0;
    for (const Frame* f : in.window) {
        int satisfied = 0;
        for (const SpatialConstraint& sc : in.prompt.spatial_constraints) {
            Centroid a = color_centroid(*f, sc.subject_color);
            Centroid b = color_centroid(*f, sc.object_color);
            if (!a.present || !b.present) continue;
            bool ok = false;
            switch (sc.relation) {
                case SpatialRelation::left_of: ok = a.x < b.x; break;
                case SpatialRelation::right_of: ok = a.x > b.x; break;
                case SpatialRelation::above: ok = a.y < b.y; break;
                case SpatialRelation::below: ok = a.y > b.y; break;
            }
            satisfied += ok;
        }
        sum += static_cast<double>(satisfied) /
               static_cast<double>(in.prompt.spatial_constraints.size());
    }
    return sum / static_cast<double>(in.window.size());
}

// 0.5 * object-count match + 0.5 * motion-direction match. Counts compare the
// distinct colors seen anywhere in the window against the prompt; direction
// compares net per-color centroid displacement signs between the first and
// last frames.
inline double metric_prompt_alignment(const MetricInput& in) {
    if (in.window.empty()) throw ArityError("prompt_alignment needs a non-empty window");
    std::set<int> seen;
    for (const Frame* f : in.window)
        for (int c : colors_present(*f)) seen.insert(c);
    double denom = std::max(in.prompt.object_count, 1);
    double count_term =
        std::max(0.0, 1.0 - std::abs(static_cast<double>(seen.size()) - in.prompt.object_count) /
                                denom);

    double direction_term = 1.0;
    if (in.prompt.motion_direction != MotionDirection::none) {
        const Frame& first = *in.window.front();
        const Frame& last = *in.window.back();
        std::set<int> start_colors = colors_present(first);
        if (start_colors.empty()) {
            direction_term = 0.0;
        } else {
            int matched = 0;
            for (int c : start_colors) {
                Centroid a = color_centroid(first, c);
                Centroid b = color_centroid(last, c);
                if (!b.present) continue;
                double dx = b.x - a.x;
                double dy = b.y - a.y;
                switch (in.prompt.motion_direction) {
                    case MotionDirection::left: matched += dx < 0; break;
                    case MotionDirection::right: matched += dx > 0; break;
                    case MotionDirection::up: matched += dy < 0; break;
                    case MotionDirection::down: matched += dy > 0; break;
                    default: break;
                }
            }
            direction_term = static_cast<double>(matched) / static_cast<double>(start_colors.size());
        }
    }
    return 0.5 * count_term + 0.5 * direction_term;
}

struct MetricScore {
    std::string id;
    double raw = 0.0;
    double normalized = 0.0;
};

struct VerifierReport {
    std::vector<MetricScore> scores;
    std::vector<double> weights;  // normalized, aligned with scores
    double aggregate = 0.0;

    double score_for(const std::string& id, double missing = -1.0) const {
        for (const MetricScore& s : scores)
            if (s.id == id) return s.normalized;
        return missing;
    }
};

// Weighted geometric mean of normalized scores.
inline double aggregate_scores(std::span<const double> normalized, std::span<const double> weights) {
    if (normalized.size() != weights.size() || normalized.empty())
        throw ArityError("aggregate_scores: mismatched or empty inputs");
    double log_sum = 0.0;
    for (size_t i = 0; i < normalized.size(); ++i) log_sum += weights[i] * std::log(normalized[i]);
    return std::exp(log_sum);
}

struct WeightedMetric {
    std::string id;
    double weight = 1.0;
};

class MetricRegistry {
  public:
    explicit MetricRegistry(int colors) : colors_(colors) {
        feature_fn_ = [colors](const Frame& f) { return frame_feature(f, colors); };
        impls_["temporal_consistency"] = metric_temporal_consistency;
        impls_["perceptual_quality"] = metric_perceptual_quality;
        impls_["spatial_alignment"] = metric_spatial_alignment;
        impls_["prompt_alignment"] = metric_prompt_alignment;
        // Reserved: needs a camera-geometry model this build does not carry.
        // Kept in the id space so configs fail loudly instead of silently.
        reserved_.insert("3d_consistency");
    }

    // Default verifier set: temporal consistency + perceptual quality,
    // equally weighted.
    static MetricRegistry defaults(int colors) {
        MetricRegistry r(colors);
        r.enabled_ = {{"temporal_consistency", 0.5}, {"perceptual_quality", 0.5}};
        return r;
    }

    void set_enabled(std::vector<WeightedMetric> metrics) {
        if (metrics.empty()) throw RegistryError("metric set must not be empty");
        for (const WeightedMetric& m : metrics) {
            if (reserved_.count(m.id))
                throw RegistryError("metric id '" + m.id +
                                    "' is reserved but not available in this build");
            if (!impls_.count(m.id)) throw RegistryError("unknown metric id: " + m.id);
            if (!(m.weight > 0.0)) throw RegistryError("metric weight must be positive: " + m.id);
        }
        enabled_ = std::move(metrics);
    }

    void register_metric(const std::string& id, MetricFn fn) {
        if (reserved_.count(id)) throw RegistryError("metric id '" + id + "' is reserved");
        impls_[id] = std::move(fn);
    }

    void set_feature_fn(FeatureFn fn) { feature_fn_ = std::move(fn); }

    const std::vector<WeightedMetric>& enabled() const { return enabled_; }
    const FeatureFn& feature_fn() const { return feature_fn_; }
    int colors() const { return colors_; }

    // True when the configured weights needed rescaling to sum to 1.
    bool weights_needed_normalization() const {
        double sum = 0.0;
        for (const WeightedMetric& m : enabled_) sum += m.weight;
        return std::abs(sum - 1.0) > 1e-9;
    }

    double run_metric(const std::string& id, const MetricInput& in) const {
        auto it = impls_.find(id);
        if (it == impls_.end()) throw RegistryError("unknown metric id: " + id);
        return it->second(in);
    }

  private:
    int colors_;
    FeatureFn feature_fn_;
    std::vector<WeightedMetric> enabled_;
    std::map<std::string, MetricFn> impls_;
    std::set<std::string> reserved_;
};

// Score one decoded window against a prompt. Weights are normalized to sum to
// one; raw scores are clamped into [kScoreFloor, 1] before aggregation.
inline VerifierReport evaluate(const FrameView& window, const Prompt& prompt,
                               const MetricRegistry& registry) {
    const std::vector<WeightedMetric>& enabled = registry.enabled();
    if (enabled.empty()) throw RegistryError("no metrics enabled");
    double weight_sum = 0.0;
    for (const WeightedMetric& m : enabled) weight_sum += m.weight;

    VerifierReport report;
    MetricInput in{window, prompt, registry.colors(), registry.feature_fn()};
    std::vector<double> normalized;
    for (const WeightedMetric& m : enabled) {
        double raw = registry.run_metric(m.id, in);
        MetricScore score;
        score.id = m.id;
        score.raw = raw;
        score.normalized = std::clamp(raw, kScoreFloor, 1.0);
        normalized.push_back(score.normalized);
        report.scores.push_back(std::move(score));
        report.weights.push_back(m.weight / weight_sum);
    }
    report.aggregate = aggregate_scores(normalized, report.weights);
    return report;
}

inline VerifierReport evaluate(std::span<const Frame> window, const Prompt& prompt,
                               const MetricRegistry& registry) {
    FrameView view;
    view.reserve(window.size());
    for (const Frame& f : window) view.push_back(&f);
    return evaluate(view, prompt, registry);
}

}  // namespace ttscale
