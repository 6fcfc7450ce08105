#pragma once

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttscale/config.hpp"
#include "ttscale/frechet.hpp"
#include "ttscale/instance.hpp"
#include "ttscale/model.hpp"
#include "ttscale/report.hpp"
#include "ttscale/search.hpp"

// Grid execution. Rows are keyed (grid point, seed index); workers pull tasks
// from an atomic counter and write into preallocated slots, so output order
// and content are independent of the worker count.

namespace ttscale {

struct GridPoint {
    Algorithm algorithm = Algorithm::best_of_n;
    ModelSpec model;
    int n = 1;
    int k = 0;  // 0 = not applicable to this algorithm
    int m = 0;
    double tau = 0.1;
    size_t index = 0;         // position in the grid enumeration (row order)
    size_t stream_group = 0;  // seed-pairing group: (model, tau) coordinates only
};

// Grid order: algorithm x model x n x tau. The stream group deliberately
// excludes algorithm and n so that a given seed index replays the same
// candidate streams across algorithms and sample budgets (paired design;
// best_of_n candidate sets become nested in n).
inline std::vector<GridPoint> build_grid(const ExperimentConfig& cfg) {
    std::vector<GridPoint> grid;
    for (Algorithm alg : cfg.algorithms) {
        for (size_t mi = 0; mi < cfg.models.size(); ++mi) {
            for (int n : cfg.n_values) {
                for (size_t ti = 0; ti < cfg.tau_values.size(); ++ti) {
                    GridPoint gp;
                    gp.algorithm = alg;
                    gp.model = cfg.models[mi];
                    gp.n = n;
                    gp.tau = cfg.tau_values[ti];
                    if (alg == Algorithm::prob_beam) {
                        SearchConfig beam = SearchConfig::beam_from_n(n);
                        gp.k = cfg.k_override.value_or(beam.k);
                        gp.m = cfg.m_override.value_or(beam.m);
                    }
                    gp.index = grid.size();
                    gp.stream_group = mi * cfg.tau_values.size() + ti;
                    grid.push_back(gp);
                }
            }
        }
    }
    return grid;
}

namespace detail {

inline void parallel_for(int workers, size_t count, const std::function<void(size_t)>& fn) {
    int w = std::max(1, workers);
    if (w == 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(w));
    for (int t = 0; t < w; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

struct BufferTraceSink final : TraceSink {
    std::vector<TraceRecord> records;
    void record(const TraceRecord& r) override { records.push_back(r); }

    std::string to_csv() const {
        std::string out = "step,candidate,reward,selected,cost_so_far\n";
        for (const TraceRecord& r : records) {
            out += std::to_string(r.step);
            out += ',';
            out += std::to_string(r.candidate);
            out += ',';
            out += fmt_g12(r.reward);
            out += ',';
            out += r.selected ? '1' : '0';
            out += ',';
            out += fmt_g12(r.cost_so_far);
            out += '\n';
        }
        return out;
    }
};

inline std::string make_run_id(size_t grid_index, long seed_index) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "g%02zu-s%04ld", grid_index, seed_index);
    return buf;
}

// Capacity 1.0 disables every corruption channel, so the reference rollout is
// the deterministic continuation of the believed start state. Its decode cost
// is evaluation overhead, charged to a scratch ledger.
inline std::vector<FrameFeature> reference_features(const WorldConfig& wc, const ModelSpec& model,
                                                    const ProblemInstance& inst,
                                                    const CostModel& costs) {
    ModelSpec ref = model;
    ref.capacity = 1.0;
    ToyWfm gen(ref, wc.colors, wc.frames_per_chunk, costs);
    GenState state = gen.init_state(inst.v0, inst.prompt, 0);
    CostLedger scratch;
    RngStream rng{stable_hash(0x4ef5u, 0u)};
    std::vector<FrameFeature> feats;
    for (int t = 0; t < wc.steps; ++t) {
        StepOutcome out = gen.generate_step(state, rng);
        Chunk chunk = gen.slow_decode(out.latent, scratch);
        for (const Frame& f : chunk.frames) feats.push_back(frame_feature(f, wc.colors));
        state = out.next;
    }
    return feats;
}

}  // namespace detail

struct RunOptions {
    std::filesystem::path out_dir = "out";
    int workers = 1;
    std::optional<uint64_t> seed_override;
};

// Executes grid x seeds and returns rows in (grid_index, seed_index) order.
// Budget exhaustion is recorded on the row (empty scores, partial ledger) and
// the run continues; any other failure aborts.
inline std::vector<ResultRow> run_grid(const ExperimentConfig& cfg,
                                       const std::vector<GridPoint>& grid, int seed_count,
                                       uint64_t base_seed, const RunOptions& options,
                                       std::vector<std::pair<std::string, std::string>>* trace_files) {
    const size_t tasks = grid.size() * static_cast<size_t>(seed_count);
    std::vector<ResultRow> rows(tasks);
    std::vector<std::string> trace_texts(trace_files ? tasks : 0);

    detail::parallel_for(options.workers, tasks, [&](size_t task) {
        const GridPoint& gp = grid[task / static_cast<size_t>(seed_count)];
        const long si = static_cast<long>(task % static_cast<size_t>(seed_count));

        ProblemInstance inst = sample_instance(cfg.world, base_seed, si);
        ToyWfm gen(gp.model, cfg.world.colors, cfg.world.frames_per_chunk, cfg.costs);

        MetricRegistry registry(cfg.world.colors);
        registry.set_enabled(cfg.metrics);
        VerifierScorer scorer{&registry, inst.prompt, cfg.costs.verifier_rate};

        SearchConfig scfg;
        scfg.algorithm = gp.algorithm;
        scfg.n = gp.n;
        if (gp.algorithm == Algorithm::prob_beam) {
            scfg.k = gp.k;
            scfg.m = gp.m;
        }
        scfg.tau = gp.tau;
        scfg.steps = cfg.world.steps;
        scfg.seed = stable_hash(base_seed, gp.stream_group, static_cast<uint64_t>(si));
        scfg.cumulative_rewards = cfg.cumulative_rewards;

        Budget budget;
        if (cfg.budget_max_units) budget.max_total_units = *cfg.budget_max_units;

        ResultRow row;
        row.run_id = detail::make_run_id(gp.index, si);
        row.algorithm = gp.algorithm;
        row.model = gp.model.name;
        row.n = gp.n;
        row.k = gp.k;
        row.m = gp.m;
        row.tau = gp.tau;
        row.seed = si;

        bool want_trace = trace_files && (cfg.output.trace == TraceMode::all ||
                                          (cfg.output.trace == TraceMode::first_seed && si == 0));
        detail::BufferTraceSink sink;

        GenState start = gen.init_state(inst.v0, inst.prompt, scfg.seed);
        try {
            SearchResult res = run_search(gen, start, scorer, inst.v0, inst.prompt, scfg, budget,
                                          want_trace ? &sink : nullptr);
            row.ledger = res.ledger;
            row.aggregate = res.report.aggregate;
            auto col = [&](const char* id) -> std::optional<double> {
                double v = res.report.score_for(id, -1.0);
                if (v < 0.0) return std::nullopt;
                return v;
            };
            row.score_temporal = col("temporal_consistency");
            row.score_perceptual = col("perceptual_quality");
            row.score_spatial = col("spatial_alignment");
            row.score_prompt = col("prompt_alignment");

            std::vector<FrameFeature> gen_feats;
            for (const Chunk& c : res.trajectory.decoded)
                for (const Frame& f : c.frames) gen_feats.push_back(frame_feature(f, cfg.world.colors));
            std::vector<FrameFeature> ref_feats =
                detail::reference_features(cfg.world, gp.model, inst, cfg.costs);
            row.frechet_ref = frechet_distance(gen_feats, ref_feats);
        } catch (const BudgetExhausted& e) {
            row.budget_exhausted = true;
            row.ledger = e.partial;
        }

        if (want_trace) {
            row.trace_path = "traces/" + row.run_id + ".csv";
            trace_texts[task] = sink.to_csv();
        }
        rows[task] = std::move(row);
    });

    if (trace_files)
        for (size_t t = 0; t < tasks; ++t)
            if (!rows[t].trace_path.empty())
                trace_files->emplace_back(rows[t].trace_path, std::move(trace_texts[t]));
    return rows;
}

struct RunArtifacts {
    std::vector<ResultRow> rows;
    nlohmann::json summary;
    std::vector<SummaryTableRow> curve;
    std::filesystem::path results_path;
    std::filesystem::path summary_path;
    std::filesystem::path curve_path;
};

namespace detail {

inline nlohmann::json grid_point_summary(const GridPoint& gp, const std::vector<ResultRow>& rows,
                                         int seed_count, const ExperimentConfig& cfg) {
    std::vector<double> agg, fre, cost;
    struct Col {
        const char* key;
        std::optional<double> ResultRow::* field;
        std::vector<double> values;
    };
    std::vector<Col> cols = {{"temporal_consistency", &ResultRow::score_temporal, {}},
                             {"perceptual_quality", &ResultRow::score_perceptual, {}},
                             {"spatial_alignment", &ResultRow::score_spatial, {}},
                             {"prompt_alignment", &ResultRow::score_prompt, {}}};
    int exhausted = 0;
    for (int si = 0; si < seed_count; ++si) {
        const ResultRow& r = rows[gp.index * static_cast<size_t>(seed_count) + static_cast<size_t>(si)];
        cost.push_back(r.ledger.total());
        if (!r.aggregate) {
            ++exhausted;
            continue;
        }
        agg.push_back(*r.aggregate);
        if (r.frechet_ref) fre.push_back(*r.frechet_ref);
        for (Col& c : cols)
            if (r.*c.field) c.values.push_back(*(r.*c.field));
    }
    nlohmann::json j;
    j["algorithm"] = to_string(gp.algorithm);
    j["model"] = gp.model.name;
    j["n"] = gp.n;
    j["k"] = gp.k;
    j["m"] = gp.m;
    j["tau"] = gp.tau;
    j["seeds"] = seed_count;
    j["budget_exhausted"] = exhausted;
    j["aggregate"] = agg.empty() ? nlohmann::json() : stat_block_json(stat_block(agg));
    nlohmann::json metrics = nlohmann::json::object();
    for (const WeightedMetric& m : cfg.metrics)
        for (Col& c : cols)
            if (m.id == c.key && !c.values.empty()) metrics[c.key] = stat_block_json(stat_block(c.values));
    j["metrics"] = metrics;
    j["frechet_ref"] = fre.empty() ? nlohmann::json() : stat_block_json(stat_block(fre));
    j["cost_total"] = stat_block_json(stat_block(cost));
    return j;
}

}  // namespace detail

inline RunArtifacts run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    std::vector<GridPoint> grid = build_grid(cfg);
    uint64_t base = options.seed_override.value_or(cfg.seeds.base);

    std::vector<std::pair<std::string, std::string>> traces;
    RunArtifacts art;
    art.rows = run_grid(cfg, grid, cfg.seeds.count, base, options,
                        cfg.output.trace == TraceMode::none ? nullptr : &traces);

    art.summary["schema_version"] = 1;
    art.summary["base_seed"] = base;
    art.summary["seeds"] = cfg.seeds.count;
    art.summary["grid"] = nlohmann::json::array();
    for (const GridPoint& gp : grid)
        art.summary["grid"].push_back(detail::grid_point_summary(gp, art.rows, cfg.seeds.count, cfg));

    for (const GridPoint& gp : grid) {
        std::vector<double> agg;
        for (int si = 0; si < cfg.seeds.count; ++si) {
            const ResultRow& r = art.rows[gp.index * static_cast<size_t>(cfg.seeds.count) +
                                          static_cast<size_t>(si)];
            if (r.aggregate) agg.push_back(*r.aggregate);
        }
        if (agg.empty()) continue;
        art.curve.push_back({"live", "synthetic", gp.model.name, to_string(gp.algorithm), gp.n,
                             "mean_aggregate", mean(agg)});
    }

    art.results_path = options.out_dir / "results.csv";
    art.summary_path = options.out_dir / "summary.json";
    art.curve_path = options.out_dir / "scaling_curve.csv";
    detail::write_file(art.results_path, results_to_csv(art.rows));
    detail::write_file(art.summary_path, art.summary.dump(2) + "\n");
    detail::write_file(art.curve_path, summary_table_to_csv(art.curve));
    for (const auto& [rel, text] : traces) detail::write_file(options.out_dir / rel, text);
    return art;
}

// ---------------------------------------------------------------------------
// Compute-matched comparison: small model with its matched sample budget
// against the large model sampled once, on shared instances.

struct CompareArm {
    std::string model;
    int n = 1;
    StatBlock aggregate;
    int valid = 0;
};

struct CompareReport {
    int n_star = 1;
    int seeds = 0;
    CompareArm small;
    CompareArm large;
    StatBlock difference;  // paired small - large
    double lower_bound_95 = 0.0;
    double p_one_sided = 1.0;
    bool win = false;     // small mean >= large mean
    bool win_95 = false;  // one-sided 95% lower bound >= 0
    std::vector<ResultRow> rows;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["n_star"] = n_star;
        j["seeds"] = seeds;
        j["small"] = {{"model", small.model},
                      {"n", small.n},
                      {"aggregate", stat_block_json(small.aggregate)},
                      {"valid_seeds", small.valid}};
        j["large"] = {{"model", large.model},
                      {"n", large.n},
                      {"aggregate", stat_block_json(large.aggregate)},
                      {"valid_seeds", large.valid}};
        j["difference"] = stat_block_json(difference);
        j["difference"]["lower_bound_95_one_sided"] = lower_bound_95;
        j["difference"]["p_one_sided"] = p_one_sided;
        j["win"] = win;
        j["win_95"] = win_95;
        return j;
    }
};

inline const ModelSpec& find_model(const ExperimentConfig& cfg, const std::string& name,
                                   ModelSpec& scratch) {
    for (const ModelSpec& m : cfg.models)
        if (m.name == name) return m;
    scratch = model_preset(name);
    return scratch;
}

inline CompareReport run_compare(const ExperimentConfig& cfg, const RunOptions& options) {
    ModelSpec scratch_a, scratch_b;
    const ModelSpec& small = find_model(cfg, cfg.compare.small_model, scratch_a);
    const ModelSpec& large = find_model(cfg, cfg.compare.large_model, scratch_b);
    int n_star = compute_matched_n(small.params_b, large.params_b);

    bool same_model = small.name == large.name && small.capacity == large.capacity &&
                      small.params_b == large.params_b;
    double tau = cfg.tau_values.front();
    std::vector<GridPoint> grid(2);
    grid[0] = {Algorithm::best_of_n, small, n_star, 0, 0, tau, 0, 0};
    grid[1] = {Algorithm::best_of_n, large, 1, 0, 0, tau, 1, same_model ? 0u : 1u};

    uint64_t base = options.seed_override.value_or(cfg.seeds.base);
    std::vector<std::pair<std::string, std::string>> traces;
    CompareReport rep;
    rep.rows = run_grid(cfg, grid, cfg.compare.seeds, base, options,
                        cfg.output.trace == TraceMode::none ? nullptr : &traces);
    rep.n_star = n_star;
    rep.seeds = cfg.compare.seeds;

    const size_t count = static_cast<size_t>(cfg.compare.seeds);
    std::vector<double> a, b, diff;
    for (size_t si = 0; si < count; ++si) {
        const ResultRow& ra = rep.rows[si];
        const ResultRow& rb = rep.rows[count + si];
        if (ra.aggregate) a.push_back(*ra.aggregate);
        if (rb.aggregate) b.push_back(*rb.aggregate);
        if (ra.aggregate && rb.aggregate) diff.push_back(*ra.aggregate - *rb.aggregate);
    }
    rep.small = {small.name, n_star, a.empty() ? StatBlock{} : stat_block(a), static_cast<int>(a.size())};
    rep.large = {large.name, 1, b.empty() ? StatBlock{} : stat_block(b), static_cast<int>(b.size())};
    if (!diff.empty()) {
        rep.difference = stat_block(diff);
        rep.win = rep.small.aggregate.mean >= rep.large.aggregate.mean;
        if (diff.size() >= 2) {
            rep.lower_bound_95 = paired_lower_bound_95(diff);
            rep.p_one_sided = paired_one_sided_p(diff);
            rep.win_95 = rep.lower_bound_95 >= 0.0;
        }
    }

    detail::write_file(options.out_dir / "results.csv", results_to_csv(rep.rows));
    detail::write_file(options.out_dir / "compare.json", rep.to_json().dump(2) + "\n");
    for (const auto& [rel, text] : traces) detail::write_file(options.out_dir / rel, text);
    return rep;
}

inline std::vector<std::filesystem::path> emit_reference_tables(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> written;
    const std::pair<const char*, std::vector<SummaryTableRow>> tables[] = {
        {"table1.csv", reference_table_1()},
        {"table2.csv", reference_table_2()},
        {"table3.csv", reference_table_3()},
    };
    for (const auto& [name, rows] : tables) {
        std::filesystem::path p = dir / name;
        detail::write_file(p, summary_table_to_csv(rows));
        written.push_back(p);
    }
    return written;
}

}  // namespace ttscale
