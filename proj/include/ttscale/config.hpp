#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttscale/budget.hpp"
#include "ttscale/errors.hpp"
#include "ttscale/model.hpp"
#include "ttscale/search.hpp"
#include "ttscale/verifiers.hpp"

// Experiment configuration: one JSON file describing the world, the models,
// the verifier set, the algorithm grid, seeds, costs and outputs. Parsing is
// strict and failures name the offending field (or line, for syntax errors).

namespace ttscale {

struct WorldConfig {
    int width = 32;
    int height = 32;
    int colors = 6;
    int frames_per_chunk = 8;
    int steps = 4;
    int input_frames = 9;
    int object_count_min = 2;
    int object_count_max = 3;
    int object_size_min = 3;
    int object_size_max = 5;
    int max_speed = 2;

    void validate() const {
        if (width < 4 || height < 4) throw ConfigError("/world: width and height must be >= 4");
        if (colors < 2 || colors > 254) throw ConfigError("/world/colors: must be in [2, 254]");
        if (frames_per_chunk < 1) throw ConfigError("/world/frames_per_chunk: must be >= 1");
        if (steps < 1) throw ConfigError("/world/steps: must be >= 1");
        if (input_frames < 2) throw ConfigError("/world/input_frames: must be >= 2");
        if (object_count_min < 1 || object_count_max < object_count_min)
            throw ConfigError("/world/object_count: need 1 <= min <= max");
        if (object_count_max > colors)
            throw ConfigError("/world/object_count: max exceeds distinct colors");
        if (object_size_min < 1 || object_size_max < object_size_min)
            throw ConfigError("/world/object_size: need 1 <= min <= max");
        if (object_size_max * 2 > std::min(width, height))
            throw ConfigError("/world/object_size: max too large for the grid");
        if (max_speed < 1 || max_speed > 3) throw ConfigError("/world/max_speed: must be in [1, 3]");
    }
};

enum class TraceMode { none, first_seed, all };

inline std::string to_string(TraceMode m) {
    switch (m) {
        case TraceMode::none: return "none";
        case TraceMode::all: return "all";
        default: return "first_seed";
    }
}

struct OutputConfig {
    std::string dir;  // empty = resolve via --out / env / "out"
    TraceMode trace = TraceMode::first_seed;
};

struct SeedsConfig {
    int count = 200;
    uint64_t base = 1234;
};

struct CompareConfig {
    std::string small_model = "wfm-4b";
    std::string large_model = "wfm-12b";
    int seeds = 500;
};

struct ExperimentConfig {
    WorldConfig world;
    std::vector<ModelSpec> models;
    std::vector<WeightedMetric> metrics;
    std::vector<Algorithm> algorithms;
    std::vector<int> n_values;
    std::vector<double> tau_values;
    std::optional<int> k_override;
    std::optional<int> m_override;
    bool cumulative_rewards = false;
    SeedsConfig seeds;
    OutputConfig output;
    CostModel costs;
    std::optional<double> budget_max_units;
    CompareConfig compare;

    static ExperimentConfig defaults() {
        ExperimentConfig c;
        c.models = {model_preset("wfm-4b")};
        c.metrics = {{"temporal_consistency", 0.5}, {"perceptual_quality", 0.5}};
        c.algorithms = {Algorithm::best_of_n};
        c.n_values = {1, 2, 4, 8, 16};
        c.tau_values = {0.1};
        return c;
    }

    void validate() const {
        world.validate();
        if (models.empty()) throw ConfigError("/models: at least one model required");
        for (const ModelSpec& m : models) m.validate();
        if (metrics.empty()) throw ConfigError("/metrics: at least one metric required");
        for (const WeightedMetric& m : metrics)
            if (!(m.weight > 0.0)) throw ConfigError("/metrics: weight must be positive for " + m.id);
        if (algorithms.empty()) throw ConfigError("/search/algorithms: at least one required");
        if (n_values.empty()) throw ConfigError("/search/n: at least one value required");
        for (int n : n_values)
            if (n < 1) throw ConfigError("/search/n: values must be >= 1");
        if (tau_values.empty()) throw ConfigError("/search/tau: at least one value required");
        for (double t : tau_values)
            if (!(t > 0.0)) throw ConfigError("/search/tau: values must be positive");
        if (k_override && *k_override < 1) throw ConfigError("/search/k: must be >= 1");
        if (m_override && *m_override < 1) throw ConfigError("/search/m: must be >= 1");
        if (seeds.count < 1) throw ConfigError("/seeds/count: must be >= 1");
        if (budget_max_units && !(*budget_max_units > 0.0))
            throw ConfigError("/budget/max_total_units: must be positive");
        if (compare.seeds < 1) throw ConfigError("/compare/seeds: must be >= 1");
    }

    // True weight sum differing from 1 is allowed; evaluate() normalizes.
    bool metric_weights_off_unity() const {
        double s = 0.0;
        for (const WeightedMetric& m : metrics) s += m.weight;
        return std::abs(s - 1.0) > 1e-9;
    }

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_string(const std::string& text);
};

namespace detail {

// Field access with json-pointer style diagnostics.
inline const nlohmann::json& member(const nlohmann::json& j, const std::string& path,
                                    const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("config field missing: " + path + "/" + key);
    return *it;
}

template <class T>
T field_as(const nlohmann::json& j, const std::string& path, const char* key) {
    try {
        return member(j, path, key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config field has wrong type: " + path + "/" + key);
    }
}

template <class T>
T field_or(const nlohmann::json& j, const std::string& path, const char* key, T fallback) {
    if (!j.is_object() || j.find(key) == j.end()) return fallback;
    return field_as<T>(j, path, key);
}

inline std::pair<int, int> range_field(const nlohmann::json& j, const std::string& path,
                                       const char* key, std::pair<int, int> fallback) {
    if (j.find(key) == j.end()) return fallback;
    const nlohmann::json& v = *j.find(key);
    if (v.is_number_integer()) {
        int x = v.get<int>();
        return {x, x};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer())
        return {v[0].get<int>(), v[1].get<int>()};
    throw ConfigError("config field must be an int or [min, max]: " + path + "/" + key);
}

}  // namespace detail

inline nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["world"] = {{"width", world.width},
                  {"height", world.height},
                  {"colors", world.colors},
                  {"frames_per_chunk", world.frames_per_chunk},
                  {"steps", world.steps},
                  {"input_frames", world.input_frames},
                  {"object_count", {world.object_count_min, world.object_count_max}},
                  {"object_size", {world.object_size_min, world.object_size_max}},
                  {"max_speed", world.max_speed}};
    j["models"] = nlohmann::json::array();
    for (const ModelSpec& m : models)
        j["models"].push_back({{"name", m.name},
                               {"capacity", m.capacity},
                               {"params_b", m.params_b},
                               {"decoder_noise_p", m.decoder_noise_p},
                               {"flicker_cells", m.flicker_cells}});
    j["metrics"] = nlohmann::json::array();
    for (const WeightedMetric& m : metrics)
        j["metrics"].push_back({{"id", m.id}, {"weight", m.weight}});
    nlohmann::json algs = nlohmann::json::array();
    for (Algorithm a : algorithms) algs.push_back(to_string(a));
    j["search"] = {{"algorithms", algs},
                   {"n", n_values},
                   {"tau", tau_values},
                   {"cumulative_rewards", cumulative_rewards}};
    if (k_override) j["search"]["k"] = *k_override;
    if (m_override) j["search"]["m"] = *m_override;
    j["seeds"] = {{"count", seeds.count}, {"base", seeds.base}};
    j["output"] = {{"trace", to_string(output.trace)}};
    if (!output.dir.empty()) j["output"]["dir"] = output.dir;
    j["cost_model"] = {{"alpha_per_billion", costs.alpha_per_billion},
                       {"slow_decode", costs.slow_decode_rate},
                       {"fast_decode", costs.fast_decode_rate},
                       {"verifier", costs.verifier_rate}};
    if (budget_max_units) j["budget"] = {{"max_total_units", *budget_max_units}};
    j["compare"] = {{"small", compare.small_model},
                    {"large", compare.large_model},
                    {"seeds", compare.seeds}};
    return j;
}

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    using detail::field_as;
    using detail::field_or;
    ExperimentConfig c = ExperimentConfig::defaults();
    if (!j.is_object()) throw ConfigError("config root must be an object");

    if (j.contains("world")) {
        const nlohmann::json& w = j["world"];
        c.world.width = field_or(w, "/world", "width", c.world.width);
        c.world.height = field_or(w, "/world", "height", c.world.height);
        c.world.colors = field_or(w, "/world", "colors", c.world.colors);
        c.world.frames_per_chunk = field_or(w, "/world", "frames_per_chunk", c.world.frames_per_chunk);
        c.world.steps = field_or(w, "/world", "steps", c.world.steps);
        c.world.input_frames = field_or(w, "/world", "input_frames", c.world.input_frames);
        auto count = detail::range_field(w, "/world", "object_count",
                                         {c.world.object_count_min, c.world.object_count_max});
        c.world.object_count_min = count.first;
        c.world.object_count_max = count.second;
        auto size = detail::range_field(w, "/world", "object_size",
                                        {c.world.object_size_min, c.world.object_size_max});
        c.world.object_size_min = size.first;
        c.world.object_size_max = size.second;
        c.world.max_speed = field_or(w, "/world", "max_speed", c.world.max_speed);
    }
    if (j.contains("models")) {
        c.models.clear();
        if (!j["models"].is_array()) throw ConfigError("/models: must be an array");
        for (const nlohmann::json& m : j["models"]) {
            if (m.is_string()) {
                c.models.push_back(model_preset(m.get<std::string>()));
            } else if (m.is_object()) {
                ModelSpec spec;
                if (m.contains("preset")) spec = model_preset(field_as<std::string>(m, "/models[]", "preset"));
                spec.name = field_or(m, "/models[]", "name", spec.name);
                spec.capacity = field_or(m, "/models[]", "capacity", spec.capacity);
                spec.params_b = field_or(m, "/models[]", "params_b", spec.params_b);
                spec.decoder_noise_p = field_or(m, "/models[]", "decoder_noise_p", spec.decoder_noise_p);
                spec.flicker_cells = field_or(m, "/models[]", "flicker_cells", spec.flicker_cells);
                c.models.push_back(spec);
            } else {
                throw ConfigError("/models: entries must be preset names or objects");
            }
        }
    }
    if (j.contains("metrics")) {
        c.metrics.clear();
        if (!j["metrics"].is_array()) throw ConfigError("/metrics: must be an array");
        for (const nlohmann::json& m : j["metrics"]) {
            WeightedMetric wm;
            wm.id = field_as<std::string>(m, "/metrics[]", "id");
            wm.weight = field_or(m, "/metrics[]", "weight", 1.0);
            c.metrics.push_back(wm);
        }
    }
    if (j.contains("search")) {
        const nlohmann::json& s = j["search"];
        if (s.contains("algorithms")) {
            c.algorithms.clear();
            for (const nlohmann::json& a : detail::member(s, "/search", "algorithms"))
                c.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
        }
        if (s.contains("n")) {
            c.n_values.clear();
            const nlohmann::json& n = s["n"];
            if (n.is_number_integer()) {
                c.n_values.push_back(n.get<int>());
            } else if (n.is_array()) {
                for (const nlohmann::json& v : n) c.n_values.push_back(v.get<int>());
            } else {
                throw ConfigError("/search/n: must be an int or array of ints");
            }
        }
        if (s.contains("tau")) {
            c.tau_values.clear();
            const nlohmann::json& t = s["tau"];
            if (t.is_number()) {
                c.tau_values.push_back(t.get<double>());
            } else if (t.is_array()) {
                for (const nlohmann::json& v : t) c.tau_values.push_back(v.get<double>());
            } else {
                throw ConfigError("/search/tau: must be a number or array of numbers");
            }
        }
        if (s.contains("k")) c.k_override = field_as<int>(s, "/search", "k");
        if (s.contains("m")) c.m_override = field_as<int>(s, "/search", "m");
        c.cumulative_rewards = field_or(s, "/search", "cumulative_rewards", false);
    }
    if (j.contains("seeds")) {
        const nlohmann::json& s = j["seeds"];
        c.seeds.count = field_or(s, "/seeds", "count", c.seeds.count);
        c.seeds.base = field_or(s, "/seeds", "base", c.seeds.base);
    }
    if (j.contains("output")) {
        const nlohmann::json& o = j["output"];
        c.output.dir = field_or<std::string>(o, "/output", "dir", "");
        std::string trace = field_or<std::string>(o, "/output", "trace", "first_seed");
        if (trace == "none") c.output.trace = TraceMode::none;
        else if (trace == "first_seed") c.output.trace = TraceMode::first_seed;
        else if (trace == "all") c.output.trace = TraceMode::all;
        else throw ConfigError("/output/trace: must be none, first_seed or all");
    }
    if (j.contains("cost_model")) {
        const nlohmann::json& cm = j["cost_model"];
        c.costs.alpha_per_billion = field_or(cm, "/cost_model", "alpha_per_billion", c.costs.alpha_per_billion);
        c.costs.slow_decode_rate = field_or(cm, "/cost_model", "slow_decode", c.costs.slow_decode_rate);
        c.costs.fast_decode_rate = field_or(cm, "/cost_model", "fast_decode", c.costs.fast_decode_rate);
        c.costs.verifier_rate = field_or(cm, "/cost_model", "verifier", c.costs.verifier_rate);
    }
    if (j.contains("budget") && j["budget"].is_object() && j["budget"].contains("max_total_units") &&
        !j["budget"]["max_total_units"].is_null())
        c.budget_max_units = field_as<double>(j["budget"], "/budget", "max_total_units");
    if (j.contains("compare")) {
        const nlohmann::json& cp = j["compare"];
        c.compare.small_model = field_or<std::string>(cp, "/compare", "small", c.compare.small_model);
        c.compare.large_model = field_or<std::string>(cp, "/compare", "large", c.compare.large_model);
        c.compare.seeds = field_or(cp, "/compare", "seeds", c.compare.seeds);
    }
    c.validate();
    return c;
}

inline ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // parse_error.byte is a 1-based offset into the input
        size_t line = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError("config syntax error at line " + std::to_string(line) + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace ttscale
