#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "ttscale/harness.hpp"
#include "ttscale/reconstruct.hpp"

using namespace ttscale;
using namespace ttscale::testutil;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    EXPECT_TRUE(in.is_open()) << p;
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Small but real experiment: one algorithm, default world shrunk to two steps
// so a grid cell costs a few milliseconds.
ExperimentConfig tiny_config() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.world.steps = 2;
    cfg.world.input_frames = 3;
    cfg.n_values = {1};
    cfg.seeds.count = 2;
    return cfg;
}

// ---------------------------------------------------------------------------
// Minimal structural validator for the draft-07 subset used by
// docs/summary.schema.json. Independent of any JSON-schema library so the
// published schema is exercised, not trusted.

class SchemaChecker {
  public:
    explicit SchemaChecker(const nlohmann::json& root) : root_(root) {}

    void check(const nlohmann::json& value, const nlohmann::json& schema, const std::string& at) {
        if (schema.contains("$ref")) {
            check(value, resolve(schema["$ref"].get<std::string>()), at);
            return;
        }
        if (schema.contains("oneOf")) {
            int hits = 0;
            for (const nlohmann::json& sub : schema["oneOf"]) {
                SchemaChecker probe(root_);
                if (probe.quiet_check(value, sub, at)) ++hits;
            }
            if (hits != 1) fail(at, "oneOf matched " + std::to_string(hits) + " branches");
            return;
        }
        if (schema.contains("const") && value != schema["const"]) fail(at, "const mismatch");
        if (schema.contains("enum")) {
            bool found = false;
            for (const nlohmann::json& v : schema["enum"]) found = found || value == v;
            if (!found) fail(at, "not in enum: " + value.dump());
        }
        if (schema.contains("type")) check_type(value, schema["type"].get<std::string>(), at);
        if (schema.contains("minimum") && value.is_number() &&
            value.get<double>() < schema["minimum"].get<double>())
            fail(at, "below minimum");
        if (schema.contains("exclusiveMinimum") && value.is_number() &&
            !(value.get<double>() > schema["exclusiveMinimum"].get<double>()))
            fail(at, "not above exclusiveMinimum");
        if (value.is_object()) check_object(value, schema, at);
        if (value.is_array() && schema.contains("items")) {
            size_t i = 0;
            for (const nlohmann::json& item : value)
                check(item, schema["items"], at + "/" + std::to_string(i++));
        }
    }

    const std::vector<std::string>& errors() const { return errors_; }

  private:
    void fail(const std::string& at, const std::string& why) { errors_.push_back(at + ": " + why); }

    bool quiet_check(const nlohmann::json& value, const nlohmann::json& schema,
                     const std::string& at) {
        check(value, schema, at);
        return errors_.empty();
    }

    const nlohmann::json& resolve(const std::string& ref) {
        const std::string prefix = "#/definitions/";
        if (ref.rfind(prefix, 0) != 0) throw std::runtime_error("unsupported $ref: " + ref);
        return root_.at("definitions").at(ref.substr(prefix.size()));
    }

    void check_type(const nlohmann::json& v, const std::string& type, const std::string& at) {
        bool ok = (type == "object" && v.is_object()) || (type == "array" && v.is_array()) ||
                  (type == "string" && v.is_string()) || (type == "null" && v.is_null()) ||
                  (type == "integer" && v.is_number_integer()) ||
                  (type == "number" && v.is_number());
        if (!ok) fail(at, "expected type " + type);
    }

    void check_object(const nlohmann::json& v, const nlohmann::json& schema,
                      const std::string& at) {
        if (schema.contains("required"))
            for (const nlohmann::json& key : schema["required"])
                if (!v.contains(key.get<std::string>()))
                    fail(at, "missing required key " + key.get<std::string>());
        const nlohmann::json props =
            schema.contains("properties") ? schema["properties"] : nlohmann::json::object();
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (props.contains(it.key())) {
                check(it.value(), props[it.key()], at + "/" + it.key());
            } else if (schema.contains("additionalProperties")) {
                const nlohmann::json& ap = schema["additionalProperties"];
                if (ap.is_boolean() && !ap.get<bool>())
                    fail(at, "unexpected key " + it.key());
                else if (ap.is_object())
                    check(it.value(), ap, at + "/" + it.key());
            }
        }
    }

    const nlohmann::json& root_;
    std::vector<std::string> errors_;
};

std::vector<std::string> schema_errors(const nlohmann::json& doc) {
    nlohmann::json schema =
        nlohmann::json::parse(slurp(source_dir() / "docs" / "summary.schema.json"));
    SchemaChecker checker(schema);
    checker.check(doc, schema, "");
    return checker.errors();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing

TEST(Config, SyntaxErrorsNameTheLine) {
    const std::string text = "{\n  \"seeds\": { \"count\": 5 },\n  bad!\n}\n";
    try {
        ExperimentConfig::from_string(text);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("config syntax error at line 3"), std::string::npos)
            << e.what();
    }
}

TEST(Config, MissingFieldsNameTheirPath) {
    try {
        ExperimentConfig::from_json(nlohmann::json::parse(R"({"metrics": [{"weight": 1.0}]})"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/metrics[]/id"), std::string::npos) << e.what();
    }

    try {
        ExperimentConfig::from_json(nlohmann::json::parse(R"({"output": {"trace": "sometimes"}})"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/output/trace"), std::string::npos) << e.what();
    }

    try {
        ExperimentConfig::from_json(nlohmann::json::parse(R"({"world": {"width": "wide"}})"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/world/width"), std::string::npos) << e.what();
    }
}

TEST(Config, DefaultsSurviveJsonRoundTrip) {
    ExperimentConfig base = ExperimentConfig::defaults();
    base.validate();
    ExperimentConfig reparsed = ExperimentConfig::from_json(base.to_json());
    EXPECT_EQ(base.to_json(), reparsed.to_json());
}

TEST(Config, RepoDefaultConfigIsPrintDefaultsOutput) {
    std::string committed = slurp(source_dir() / "configs" / "default.json");
    EXPECT_EQ(committed, ExperimentConfig::defaults().to_json().dump(2) + "\n");
}

TEST(Config, ScalarAndArraySearchForms) {
    ExperimentConfig a = ExperimentConfig::from_json(
        nlohmann::json::parse(R"({"search": {"n": 4, "tau": 0.2}})"));
    EXPECT_EQ(a.n_values, (std::vector<int>{4}));
    ASSERT_EQ(a.tau_values.size(), 1u);
    EXPECT_DOUBLE_EQ(a.tau_values[0], 0.2);

    ExperimentConfig b = ExperimentConfig::from_json(
        nlohmann::json::parse(R"({"search": {"n": [1, 2, 8], "tau": [0.1, 0.5]}})"));
    EXPECT_EQ(b.n_values, (std::vector<int>{1, 2, 8}));
    EXPECT_EQ(b.tau_values.size(), 2u);

    EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"search": {"n": "lots"}})")),
                 ConfigError);

    ExperimentConfig c = ExperimentConfig::from_json(
        nlohmann::json::parse(R"({"world": {"object_count": 2}})"));
    EXPECT_EQ(c.world.object_count_min, 2);
    EXPECT_EQ(c.world.object_count_max, 2);
    ExperimentConfig d = ExperimentConfig::from_json(
        nlohmann::json::parse(R"({"world": {"object_size": [3, 4]}})"));
    EXPECT_EQ(d.world.object_size_min, 3);
    EXPECT_EQ(d.world.object_size_max, 4);
    EXPECT_THROW(ExperimentConfig::from_json(
                     nlohmann::json::parse(R"({"world": {"object_count": [1, 2, 3]}})")),
                 ConfigError);
}

TEST(Config, ModelEntriesAcceptPresetsAndObjects) {
    ExperimentConfig a =
        ExperimentConfig::from_json(nlohmann::json::parse(R"({"models": ["wfm-12b"]})"));
    ASSERT_EQ(a.models.size(), 1u);
    EXPECT_EQ(a.models[0].name, "wfm-12b");
    EXPECT_DOUBLE_EQ(a.models[0].params_b, 12.0);

    ExperimentConfig b = ExperimentConfig::from_json(nlohmann::json::parse(
        R"({"models": [{"preset": "wfm-4b", "name": "tweaked", "capacity": 0.6}]})"));
    ASSERT_EQ(b.models.size(), 1u);
    EXPECT_EQ(b.models[0].name, "tweaked");
    EXPECT_DOUBLE_EQ(b.models[0].capacity, 0.6);
    EXPECT_DOUBLE_EQ(b.models[0].params_b, 4.0);

    EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"models": [7]})")),
                 ConfigError);
    EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"models": ["wfm-9000b"]})")),
                 ConfigError);
}

TEST(Config, ValidationCatchesBadValues) {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.world.width = 3;
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = ExperimentConfig::defaults();
    cfg.metrics[0].weight = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = ExperimentConfig::defaults();
    cfg.tau_values = {-0.5};
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = ExperimentConfig::defaults();
    cfg.seeds.count = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);

    cfg = ExperimentConfig::defaults();
    cfg.budget_max_units = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);

    EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"models": []})")),
                 ConfigError);
}

// ---------------------------------------------------------------------------
// Grid construction

TEST(Grid, DefaultConfigYieldsOnePointPerN) {
    std::vector<GridPoint> grid = build_grid(ExperimentConfig::defaults());
    ASSERT_EQ(grid.size(), 5u);
    for (size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(grid[i].index, i);
        EXPECT_EQ(grid[i].stream_group, 0u);
        EXPECT_EQ(grid[i].algorithm, Algorithm::best_of_n);
        EXPECT_EQ(grid[i].k, 0);
        EXPECT_EQ(grid[i].m, 0);
    }
    EXPECT_EQ(grid[0].n, 1);
    EXPECT_EQ(grid[4].n, 16);
}

TEST(Grid, BeamShapeDerivesFromNWithOverrides) {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.algorithms = {Algorithm::prob_beam};
    cfg.n_values = {16};
    std::vector<GridPoint> grid = build_grid(cfg);
    ASSERT_EQ(grid.size(), 1u);
    EXPECT_EQ(grid[0].k, 4);
    EXPECT_EQ(grid[0].m, 4);

    cfg.k_override = 2;
    cfg.m_override = 5;
    grid = build_grid(cfg);
    EXPECT_EQ(grid[0].k, 2);
    EXPECT_EQ(grid[0].m, 5);
}

// The stream group must depend on (model, tau) only, so paired seeds replay
// identical candidate streams across algorithms and sample budgets.
TEST(Grid, StreamGroupIgnoresAlgorithmAndN) {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.algorithms = {Algorithm::best_of_n, Algorithm::greedy_prm};
    cfg.models = {model_preset("wfm-4b"), model_preset("wfm-12b")};
    cfg.n_values = {1, 4};
    cfg.tau_values = {0.1, 0.2};
    std::vector<GridPoint> grid = build_grid(cfg);
    ASSERT_EQ(grid.size(), 16u);
    for (const GridPoint& gp : grid) {
        size_t mi = gp.model.name == "wfm-4b" ? 0 : 1;
        size_t ti = gp.tau == 0.1 ? 0 : 1;
        EXPECT_EQ(gp.stream_group, mi * 2 + ti);
    }
    std::set<size_t> indices;
    for (const GridPoint& gp : grid) indices.insert(gp.index);
    EXPECT_EQ(indices.size(), 16u);
}

// ---------------------------------------------------------------------------
// Instances

TEST(Instance, DeterministicAndWithinConfiguredRanges) {
    WorldConfig wc;
    ProblemInstance first = sample_instance(wc, 1234, 7);
    ProblemInstance again = sample_instance(wc, 1234, 7);
    EXPECT_EQ(first.world0, again.world0);
    EXPECT_EQ(first.prompt, again.prompt);
    EXPECT_EQ(first.v0.frames, again.v0.frames);
    EXPECT_NE(sample_instance(wc, 1234, 8).world0, first.world0);
    EXPECT_NE(sample_instance(wc, 99, 7).world0, first.world0);

    for (long si = 0; si < 50; ++si) {
        ProblemInstance inst = sample_instance(wc, 1234, si);
        ASSERT_EQ(static_cast<int>(inst.v0.frames.size()), wc.input_frames);
        EXPECT_EQ(inst.v0.frames[0], render(inst.world0));

        int count = static_cast<int>(inst.world0.objects.size());
        EXPECT_GE(count, wc.object_count_min);
        EXPECT_LE(count, wc.object_count_max);
        EXPECT_EQ(inst.prompt.object_count, count);

        std::set<int> colors;
        for (const ObjectState& o : inst.world0.objects) {
            colors.insert(o.color);
            EXPECT_GE(o.color, 1);
            EXPECT_LE(o.color, wc.colors);
            EXPECT_GE(o.size, wc.object_size_min);
            EXPECT_LE(o.size, wc.object_size_max);
            EXPECT_LE(std::abs(o.vx), wc.max_speed);
            EXPECT_LE(std::abs(o.vy), wc.max_speed);
            EXPECT_TRUE(o.vx != 0 || o.vy != 0);
            EXPECT_GE(o.x, 0);
            EXPECT_LE(o.x + o.size, wc.width);
            EXPECT_GE(o.y, 0);
            EXPECT_LE(o.y + o.size, wc.height);
        }
        EXPECT_EQ(static_cast<int>(colors.size()), count);

        long sx = 0, sy = 0;
        for (const ObjectState& o : inst.world0.objects) {
            sx += o.vx;
            sy += o.vy;
        }
        MotionDirection expect = MotionDirection::none;
        if (sx != 0 || sy != 0) {
            if (std::abs(sx) >= std::abs(sy))
                expect = sx > 0 ? MotionDirection::right : MotionDirection::left;
            else
                expect = sy > 0 ? MotionDirection::down : MotionDirection::up;
        }
        EXPECT_EQ(inst.prompt.motion_direction, expect);
    }
}

// Prompt constraints describe the final conditioning frame, so the spatial
// verifier must give that frame a perfect score whenever no object occludes
// another there.
TEST(Instance, ConstraintsHoldOnTheLastInputFrame) {
    WorldConfig wc;
    MetricRegistry registry(wc.colors);
    registry.set_enabled({{"spatial_alignment", 1.0}});

    int checked = 0;
    for (long si = 0; si < 50; ++si) {
        ProblemInstance inst = sample_instance(wc, 1234, si);
        if (inst.prompt.spatial_constraints.empty()) continue;

        WorldState last = inst.world0;
        for (int f = 1; f < wc.input_frames; ++f) last = advance(last);
        bool occluded = false;
        for (size_t i = 0; i < last.objects.size() && !occluded; ++i)
            for (size_t j = i + 1; j < last.objects.size(); ++j) {
                const ObjectState& a = last.objects[i];
                const ObjectState& b = last.objects[j];
                if (a.x < b.x + b.size && b.x < a.x + a.size && a.y < b.y + b.size &&
                    b.y < a.y + a.size) {
                    occluded = true;
                    break;
                }
            }
        if (occluded) continue;

        std::vector<Frame> window = {inst.v0.frames.back()};
        VerifierReport rep = evaluate(std::span<const Frame>(window), inst.prompt, registry);
        EXPECT_DOUBLE_EQ(rep.score_for("spatial_alignment"), 1.0) << "seed " << si;
        ++checked;
    }
    EXPECT_GE(checked, 25);
}

// ---------------------------------------------------------------------------
// Result CSV

TEST(ResultsCsv, RoundTripsIncludingEmptyOptionals) {
    ResultRow full;
    full.run_id = "g00-s0000";
    full.algorithm = Algorithm::prob_beam;
    full.model = "wfm-4b";
    full.n = 4;
    full.k = 2;
    full.m = 2;
    full.tau = 0.1;
    full.seed = 0;
    full.aggregate = 0.512345678901;
    full.score_temporal = 0.75;
    full.score_perceptual = 0.5;
    full.frechet_ref = 1.25;
    full.ledger.generation_units = 32.0;
    full.ledger.slow_decode_units = 1097.6;
    full.trace_path = "traces/g00-s0000.csv";

    ResultRow empty;
    empty.run_id = "g00-s0001";
    empty.model = "wfm-4b";
    empty.seed = 1;
    empty.budget_exhausted = true;
    empty.ledger.generation_units = 8.0;

    std::string csv = results_to_csv({full, empty});
    std::vector<ResultRow> rows = parse_results_csv(csv);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].run_id, "g00-s0000");
    EXPECT_EQ(rows[0].algorithm, Algorithm::prob_beam);
    EXPECT_EQ(rows[0].k, 2);
    ASSERT_TRUE(rows[0].aggregate);
    EXPECT_DOUBLE_EQ(*rows[0].aggregate, 0.512345678901);
    EXPECT_FALSE(rows[0].budget_exhausted);
    EXPECT_FALSE(rows[0].score_spatial);
    EXPECT_EQ(rows[0].trace_path, "traces/g00-s0000.csv");

    EXPECT_TRUE(rows[1].budget_exhausted);
    EXPECT_FALSE(rows[1].aggregate);
    EXPECT_DOUBLE_EQ(rows[1].ledger.generation_units, 8.0);

    EXPECT_EQ(results_to_csv(rows), csv);
}

TEST(ResultsCsv, RejectsMalformedInput) {
    EXPECT_THROW(parse_results_csv("nope\n"), IoError);
    std::string csv = std::string(results_csv_header()) + "\n" + "only,three,fields\n";
    EXPECT_THROW(parse_results_csv(csv), IoError);
    std::string bad_num = std::string(results_csv_header()) + "\n" +
                          "id,best_of_n,m,1,0,0,0.1,zero,,,,,,,0,0,0,0,0,\n";
    EXPECT_THROW(parse_results_csv(bad_num), IoError);
}

// ---------------------------------------------------------------------------
// Grid execution

TEST(RunGrid, SingleCellWritesOneRowAndATrace) {
    ExperimentConfig cfg = tiny_config();
    cfg.seeds.count = 1;
    RunOptions opt;
    opt.out_dir = scratch_dir("single_cell");
    RunArtifacts art = run_experiment(cfg, opt);

    ASSERT_EQ(art.rows.size(), 1u);
    const ResultRow& row = art.rows[0];
    EXPECT_EQ(row.run_id, "g00-s0000");
    EXPECT_EQ(row.model, "wfm-4b");
    EXPECT_EQ(row.n, 1);
    ASSERT_TRUE(row.aggregate);
    EXPECT_GT(*row.aggregate, 0.0);
    EXPECT_LE(*row.aggregate, 1.0);
    ASSERT_TRUE(row.frechet_ref);
    EXPECT_GE(*row.frechet_ref, 0.0);
    EXPECT_FALSE(row.budget_exhausted);

    std::string csv = slurp(opt.out_dir / "results.csv");
    std::vector<ResultRow> parsed = parse_results_csv(csv);
    ASSERT_EQ(parsed.size(), 1u);
    EXPECT_EQ(parsed[0].run_id, "g00-s0000");

    std::string trace = slurp(opt.out_dir / "traces" / "g00-s0000.csv");
    EXPECT_EQ(trace.rfind("step,candidate,reward,selected,cost_so_far\n", 0), 0u);
}

TEST(RunGrid, AggregateIsTheWeightedGeometricMeanOfScores) {
    ExperimentConfig cfg = tiny_config();
    cfg.metrics = {{"temporal_consistency", 0.3}, {"perceptual_quality", 0.7}};
    cfg.seeds.count = 3;
    RunOptions opt;
    opt.out_dir = scratch_dir("aggregate_check");
    RunArtifacts art = run_experiment(cfg, opt);

    ASSERT_EQ(art.rows.size(), 3u);
    for (const ResultRow& row : art.rows) {
        ASSERT_TRUE(row.aggregate && row.score_temporal && row.score_perceptual);
        double expected =
            std::exp(0.3 * std::log(*row.score_temporal) + 0.7 * std::log(*row.score_perceptual));
        EXPECT_NEAR(*row.aggregate, expected, 1e-9);
        EXPECT_FALSE(row.score_spatial);
        EXPECT_FALSE(row.score_prompt);
    }
}

TEST(RunGrid, RerunsAndWorkerCountsAreByteIdentical) {
    ExperimentConfig cfg = tiny_config();
    cfg.n_values = {1, 2};
    cfg.seeds.count = 3;
    cfg.output.trace = TraceMode::all;

    RunOptions a;
    a.out_dir = scratch_dir("det_a");
    RunOptions b;
    b.out_dir = scratch_dir("det_b");
    b.workers = 4;
    run_experiment(cfg, a);
    run_experiment(cfg, b);

    for (const char* name : {"results.csv", "summary.json", "scaling_curve.csv"})
        EXPECT_EQ(slurp(a.out_dir / name), slurp(b.out_dir / name)) << name;
    for (int g = 0; g < 2; ++g)
        for (int s = 0; s < 3; ++s) {
            std::string rel =
                "traces/" + detail::make_run_id(static_cast<size_t>(g), s) + ".csv";
            EXPECT_EQ(slurp(a.out_dir / rel), slurp(b.out_dir / rel)) << rel;
        }
}

TEST(RunGrid, BudgetCapMarksRowsAndRunContinues) {
    ExperimentConfig cfg = tiny_config();
    cfg.n_values = {4};
    cfg.seeds.count = 2;
    cfg.budget_max_units = 150.0;
    RunOptions opt;
    opt.out_dir = scratch_dir("budget_cap");
    RunArtifacts art = run_experiment(cfg, opt);

    ASSERT_EQ(art.rows.size(), 2u);
    for (const ResultRow& row : art.rows) {
        EXPECT_TRUE(row.budget_exhausted);
        EXPECT_FALSE(row.aggregate);
        EXPECT_FALSE(row.score_temporal);
        EXPECT_GT(row.ledger.total(), 150.0);
    }
    std::vector<ResultRow> parsed = parse_results_csv(slurp(opt.out_dir / "results.csv"));
    ASSERT_EQ(parsed.size(), 2u);
    EXPECT_TRUE(parsed[0].budget_exhausted && parsed[1].budget_exhausted);

    EXPECT_EQ(art.summary["grid"][0]["budget_exhausted"].get<int>(), 2);
    EXPECT_TRUE(art.summary["grid"][0]["aggregate"].is_null());
}

TEST(RunGrid, TraceModesControlWhichRowsGetFiles) {
    ExperimentConfig cfg = tiny_config();
    cfg.seeds.count = 2;

    cfg.output.trace = TraceMode::none;
    RunOptions none;
    none.out_dir = scratch_dir("trace_none");
    RunArtifacts a = run_experiment(cfg, none);
    EXPECT_TRUE(a.rows[0].trace_path.empty());
    EXPECT_FALSE(fs::exists(none.out_dir / "traces"));

    cfg.output.trace = TraceMode::first_seed;
    RunOptions first;
    first.out_dir = scratch_dir("trace_first");
    RunArtifacts b = run_experiment(cfg, first);
    EXPECT_EQ(b.rows[0].trace_path, "traces/g00-s0000.csv");
    EXPECT_TRUE(b.rows[1].trace_path.empty());
    EXPECT_TRUE(fs::exists(first.out_dir / "traces" / "g00-s0000.csv"));
    EXPECT_FALSE(fs::exists(first.out_dir / "traces" / "g00-s0001.csv"));

    cfg.output.trace = TraceMode::all;
    RunOptions all;
    all.out_dir = scratch_dir("trace_all");
    RunArtifacts c = run_experiment(cfg, all);
    EXPECT_TRUE(fs::exists(all.out_dir / "traces" / "g00-s0000.csv"));
    EXPECT_TRUE(fs::exists(all.out_dir / "traces" / "g00-s0001.csv"));
}

// ---------------------------------------------------------------------------
// Summary + scaling curve

TEST(Summary, ValidatesAgainstPublishedSchema) {
    ExperimentConfig cfg = tiny_config();
    cfg.n_values = {1, 2};
    RunOptions opt;
    opt.out_dir = scratch_dir("summary_schema");
    RunArtifacts art = run_experiment(cfg, opt);

    EXPECT_EQ(schema_errors(art.summary), std::vector<std::string>{});

    nlohmann::json reread = nlohmann::json::parse(slurp(opt.out_dir / "summary.json"));
    EXPECT_EQ(reread, art.summary);
    EXPECT_EQ(reread["schema_version"].get<int>(), 1);
    EXPECT_EQ(reread["grid"].size(), 2u);
    EXPECT_EQ(reread["base_seed"].get<uint64_t>(), 1234u);

    // A budget-capped run exercises the nullable branches.
    cfg.budget_max_units = 150.0;
    cfg.n_values = {4};
    RunOptions capped;
    capped.out_dir = scratch_dir("summary_schema_capped");
    RunArtifacts capped_art = run_experiment(cfg, capped);
    EXPECT_EQ(schema_errors(capped_art.summary), std::vector<std::string>{});

    // And the checker itself rejects structural damage.
    nlohmann::json broken = art.summary;
    broken["grid"][0].erase("model");
    EXPECT_FALSE(schema_errors(broken).empty());
    broken = art.summary;
    broken["extra"] = 1;
    EXPECT_FALSE(schema_errors(broken).empty());
    broken = art.summary;
    broken["grid"][0]["algorithm"] = "brute_force";
    EXPECT_FALSE(schema_errors(broken).empty());
}

TEST(Summary, GridStatsMatchRecomputation) {
    ExperimentConfig cfg = tiny_config();
    cfg.seeds.count = 4;
    RunOptions opt;
    opt.out_dir = scratch_dir("summary_stats");
    RunArtifacts art = run_experiment(cfg, opt);

    std::vector<double> agg, cost;
    for (const ResultRow& r : art.rows) {
        agg.push_back(*r.aggregate);
        cost.push_back(r.ledger.total());
    }
    const nlohmann::json& cell = art.summary["grid"][0];
    EXPECT_DOUBLE_EQ(cell["aggregate"]["mean"].get<double>(), mean(agg));
    EXPECT_DOUBLE_EQ(cell["aggregate"]["std"].get<double>(), sample_std(agg));
    EXPECT_DOUBLE_EQ(cell["cost_total"]["mean"].get<double>(), mean(cost));
    EXPECT_EQ(cell["seeds"].get<int>(), 4);
    EXPECT_TRUE(cell["metrics"].contains("temporal_consistency"));
    EXPECT_TRUE(cell["metrics"].contains("perceptual_quality"));
}

TEST(ScalingCurve, RowsCarryPerPointMeanAggregate) {
    ExperimentConfig cfg = tiny_config();
    cfg.n_values = {1, 2};
    cfg.seeds.count = 3;
    RunOptions opt;
    opt.out_dir = scratch_dir("curve");
    RunArtifacts art = run_experiment(cfg, opt);

    ASSERT_EQ(art.curve.size(), 2u);
    for (size_t g = 0; g < 2; ++g) {
        const SummaryTableRow& row = art.curve[g];
        EXPECT_EQ(row.source, "live");
        EXPECT_EQ(row.dataset, "synthetic");
        EXPECT_EQ(row.model, "wfm-4b");
        EXPECT_EQ(row.algorithm, "best_of_n");
        EXPECT_EQ(row.metric, "mean_aggregate");
        std::vector<double> agg;
        for (int s = 0; s < 3; ++s) agg.push_back(*art.rows[g * 3 + s].aggregate);
        EXPECT_DOUBLE_EQ(row.value, mean(agg));
    }

    std::string csv = slurp(opt.out_dir / "scaling_curve.csv");
    std::vector<SummaryTableRow> parsed = parse_summary_table(csv);
    ASSERT_EQ(parsed.size(), 2u);
    EXPECT_EQ(summary_table_to_csv(parsed), csv);
}

// ---------------------------------------------------------------------------
// Reference fixtures

TEST(Fixtures, EmitParseReEmitIsStable) {
    fs::path dir = scratch_dir("fixtures");
    std::vector<fs::path> written = emit_reference_tables(dir);
    ASSERT_EQ(written.size(), 3u);
    for (const fs::path& p : written) {
        std::string text = slurp(p);
        std::vector<SummaryTableRow> rows = parse_summary_table(text);
        EXPECT_FALSE(rows.empty());
        EXPECT_EQ(summary_table_to_csv(rows), text) << p;
        for (const SummaryTableRow& r : rows) EXPECT_EQ(r.source, "paper");
    }
}

TEST(Fixtures, PinnedValuesSurviveTheRoundTrip) {
    auto value_of = [](const std::vector<SummaryTableRow>& rows, const std::string& model,
                       const std::string& alg, int n, const std::string& dataset,
                       const std::string& metric) {
        for (const SummaryTableRow& r : rows)
            if (r.model == model && r.algorithm == alg && r.n == n && r.dataset == dataset &&
                r.metric == metric)
                return r.value;
        ADD_FAILURE() << "row not found: " << model << "/" << alg << "/" << n << "/" << dataset
                      << "/" << metric;
        return std::nan("");
    };

    std::vector<SummaryTableRow> t1 = reference_table_1();
    EXPECT_DOUBLE_EQ(value_of(t1, "4b", "best_of_n", 1, "nuscenes", "fvd"), 637.08);
    EXPECT_DOUBLE_EQ(value_of(t1, "4b", "best_of_n", 1, "waymo", "fvd"), 120.30);
    EXPECT_DOUBLE_EQ(value_of(t1, "4b", "best_of_n", 16, "nuscenes", "fid"), 45.75);
    EXPECT_DOUBLE_EQ(value_of(t1, "4b", "best_of_n", 16, "waymo", "fid"), 10.14);
    EXPECT_DOUBLE_EQ(value_of(t1, "12b", "best_of_n", 1, "nuscenes", "fid"), 67.10);
    EXPECT_DOUBLE_EQ(value_of(t1, "12b", "best_of_n", 1, "waymo", "fid"), 10.67);

    std::vector<SummaryTableRow> t3 = reference_table_3();
    EXPECT_DOUBLE_EQ(value_of(t3, "5b", "greedy_prm", 4, "nuscenes", "fvd"), 641.5);
    EXPECT_DOUBLE_EQ(value_of(t3, "13b", "best_of_n", 1, "nuscenes", "fvd"), 616.92);
}

TEST(Fixtures, CommittedFilesMatchTheEmitter) {
    fs::path dir = scratch_dir("fixtures_committed");
    emit_reference_tables(dir);
    for (const char* name : {"table1.csv", "table2.csv", "table3.csv"}) {
        fs::path committed = source_dir() / "data" / "fixtures" / name;
        ASSERT_TRUE(fs::exists(committed)) << committed;
        EXPECT_EQ(slurp(committed), slurp(dir / name)) << name;
    }
}

// ---------------------------------------------------------------------------
// Compute-matched comparison

TEST(Compare, IdenticalModelsTieExactly) {
    ExperimentConfig cfg = tiny_config();
    cfg.compare.small_model = "wfm-4b";
    cfg.compare.large_model = "wfm-4b";
    cfg.compare.seeds = 5;
    RunOptions opt;
    opt.out_dir = scratch_dir("compare_tie");
    CompareReport rep = run_compare(cfg, opt);

    EXPECT_EQ(rep.n_star, 1);
    EXPECT_EQ(rep.seeds, 5);
    ASSERT_EQ(rep.rows.size(), 10u);
    for (int s = 0; s < 5; ++s) {
        ASSERT_TRUE(rep.rows[s].aggregate && rep.rows[5 + s].aggregate);
        EXPECT_DOUBLE_EQ(*rep.rows[s].aggregate, *rep.rows[5 + s].aggregate) << "seed " << s;
    }
    EXPECT_DOUBLE_EQ(rep.small.aggregate.mean, rep.large.aggregate.mean);
    EXPECT_DOUBLE_EQ(rep.difference.mean, 0.0);
    EXPECT_TRUE(rep.win);
    EXPECT_TRUE(rep.win_95);  // all-zero diffs: the 95% lower bound is exactly 0
    EXPECT_DOUBLE_EQ(rep.p_one_sided, 1.0);

    nlohmann::json j = nlohmann::json::parse(slurp(opt.out_dir / "compare.json"));
    EXPECT_EQ(j["n_star"].get<int>(), 1);
    EXPECT_DOUBLE_EQ(j["difference"]["lower_bound_95_one_sided"].get<double>(), 0.0);
    EXPECT_TRUE(j["win_95"].get<bool>());
    EXPECT_TRUE(fs::exists(opt.out_dir / "results.csv"));
}

TEST(Compare, MatchedBudgetComesFromParamRatio) {
    ExperimentConfig cfg = tiny_config();
    cfg.compare.small_model = "wfm-4b";
    cfg.compare.large_model = "wfm-12b";
    cfg.compare.seeds = 2;
    RunOptions opt;
    opt.out_dir = scratch_dir("compare_ratio");
    CompareReport rep = run_compare(cfg, opt);

    EXPECT_EQ(rep.n_star, 3);
    EXPECT_EQ(rep.small.model, "wfm-4b");
    EXPECT_EQ(rep.small.n, 3);
    EXPECT_EQ(rep.large.model, "wfm-12b");
    EXPECT_EQ(rep.large.n, 1);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.rows[0].n, 3);
    EXPECT_EQ(rep.rows[0].model, "wfm-4b");
    EXPECT_EQ(rep.rows[2].n, 1);
    EXPECT_EQ(rep.rows[2].model, "wfm-12b");
    EXPECT_EQ(rep.small.valid, 2);
    EXPECT_EQ(rep.large.valid, 2);
}
