#include <gtest/gtest.h>

#include "helpers.hpp"
#include "ttscale/budget.hpp"
#include "ttscale/model.hpp"
#include "ttscale/search.hpp"

using namespace ttscale;
using namespace ttscale::testutil;

TEST(CostLedger, ChargeAccumulatesPerKind) {
    CostLedger l;
    l.charge(CostKind::generation, 0.0);
    EXPECT_EQ(l.generation_units, 0.0);
    EXPECT_EQ(l.total(), 0.0);

    l.charge(CostKind::slow_decode, 1.5).charge(CostKind::slow_decode, 2.5);
    EXPECT_DOUBLE_EQ(l.slow_decode_units, 4.0);

    l.charge(CostKind::generation, 3.0);
    l.charge(CostKind::fast_decode, 0.25);
    l.charge(CostKind::verifier, 0.125);
    EXPECT_DOUBLE_EQ(l.total(), 3.0 + 4.0 + 0.25 + 0.125);

    EXPECT_THROW(l.charge(CostKind::generation, -0.01), NumericError);
    EXPECT_THROW(l.charge(CostKind::verifier, std::nan("")), NumericError);
}

TEST(CostModel, PerStepScalesWithParams) {
    CostModel costs;
    EXPECT_DOUBLE_EQ(costs.per_step(1.0), 1.0);
    EXPECT_DOUBLE_EQ(costs.per_step(12.0), 12.0);
    EXPECT_DOUBLE_EQ(costs.slow_decode_rate, 137.2);
    EXPECT_DOUBLE_EQ(costs.fast_decode_rate, 0.015);
    EXPECT_DOUBLE_EQ(costs.verifier_rate, 0.01);
}

TEST(MatchedN, FloorsTheParameterRatio) {
    EXPECT_EQ(compute_matched_n(4.0, 12.0), 3);
    EXPECT_EQ(compute_matched_n(4.0, 4.0), 1);
    EXPECT_EQ(compute_matched_n(5.0, 13.0), 2);
    EXPECT_EQ(compute_matched_n(0.5, 0.9), 1);
    EXPECT_THROW(compute_matched_n(12.0, 4.0), ModelError);
    EXPECT_THROW(compute_matched_n(0.0, 4.0), ModelError);
    EXPECT_THROW(compute_matched_n(-1.0, 4.0), ModelError);
}

namespace {

struct SearchFixture {
    ToyWfm gen;
    MetricRegistry registry;
    Chunk v0;
    GenState start;
    VerifierScorer scorer;

    explicit SearchFixture(uint64_t seed = 5)
        : gen(model_preset("wfm-4b"), 6, 4),
          registry(MetricRegistry::defaults(6)),
          v0(render_video(world(16, 16, {object(0, 2, 3, 3, 1, 0, 3)}), 2)),
          start(gen.init_state(v0, Prompt{}, seed)) {
        scorer.registry = &registry;
    }
};

SearchConfig config_for(Algorithm alg, int n, int steps, uint64_t seed) {
    SearchConfig cfg;
    cfg.algorithm = alg;
    cfg.n = n;
    cfg.steps = steps;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

// The ledger of a finished run must match the closed-form cost of the
// algorithm. Generation charges are integer multiples of params_b, so those
// compare exactly; decode sums accumulate term by term.
TEST(ClosedFormCosts, BestOfN) {
    SearchFixture fx;
    SearchConfig cfg = config_for(Algorithm::best_of_n, 2, 4, 5);
    SearchResult r = best_of_n(fx.gen, fx.start, fx.scorer, fx.v0, Prompt{}, cfg);

    EXPECT_EQ(r.ledger.generation_units, 2 * 4 * 4.0);
    EXPECT_NEAR(r.ledger.slow_decode_units, 2 * 4 * 137.2, 1e-9);
    EXPECT_EQ(r.ledger.fast_decode_units, 0.0);
    EXPECT_NEAR(r.ledger.verifier_units, r.stats.windows_scored * 0.01, 1e-12);
    EXPECT_EQ(r.stats.generate_calls, 8);
    EXPECT_EQ(r.stats.slow_decodes, 8);
    EXPECT_EQ(r.stats.fast_decodes, 0);
}

TEST(ClosedFormCosts, GreedyPrm) {
    SearchFixture fx;
    SearchConfig cfg = config_for(Algorithm::greedy_prm, 3, 4, 5);
    SearchResult r = greedy_prm(fx.gen, fx.start, fx.scorer, fx.v0, Prompt{}, cfg);

    EXPECT_EQ(r.ledger.generation_units, 4 * 3 * 4.0);
    EXPECT_NEAR(r.ledger.fast_decode_units, 4 * 3 * 0.015, 1e-9);
    EXPECT_NEAR(r.ledger.slow_decode_units, 4 * 137.2, 1e-9);
    EXPECT_NEAR(r.ledger.verifier_units, r.stats.windows_scored * 0.01, 1e-12);
    EXPECT_EQ(r.stats.generate_calls, 12);
    EXPECT_EQ(r.stats.fast_decodes, 12);
    EXPECT_EQ(r.stats.slow_decodes, 4);
}

TEST(ClosedFormCosts, ProbBeam) {
    SearchFixture fx;
    SearchConfig cfg = config_for(Algorithm::prob_beam, 4, 4, 5);
    cfg.k = 2;
    cfg.m = 2;
    SearchResult r = prob_beam(fx.gen, fx.start, fx.scorer, fx.v0, Prompt{}, cfg);

    EXPECT_EQ(r.ledger.generation_units, 4 * 2 * 2 * 4.0);
    EXPECT_NEAR(r.ledger.fast_decode_units, 4 * 2 * 2 * 0.015, 1e-9);
    EXPECT_NEAR(r.ledger.slow_decode_units, 2 * 4 * 137.2, 1e-9);
    EXPECT_NEAR(r.ledger.verifier_units, r.stats.windows_scored * 0.01, 1e-12);
    EXPECT_EQ(r.stats.generate_calls, 16);
    EXPECT_EQ(r.stats.fast_decodes, 16);
    EXPECT_EQ(r.stats.slow_decodes, 8);
}

TEST(BudgetLimit, ExhaustionCarriesPartialSpend) {
    SearchFixture fx;
    SearchConfig cfg = config_for(Algorithm::best_of_n, 4, 4, 5);
    Budget tight{200.0};
    try {
        best_of_n(fx.gen, fx.start, fx.scorer, fx.v0, Prompt{}, cfg, tight);
        FAIL() << "expected BudgetExhausted";
    } catch (const BudgetExhausted& e) {
        EXPECT_GT(e.partial.total(), 200.0);
        // One slow decode is already past the cap; the run must stop early,
        // well short of the unconstrained 32-decode spend.
        EXPECT_LT(e.partial.total(), 4 * 4 * 137.2);
        EXPECT_GT(e.partial.slow_decode_units, 0.0);
    }
}

TEST(BudgetLimit, EnforceIsQuietUnderCap) {
    CostLedger l;
    l.charge(CostKind::generation, 10.0);
    EXPECT_NO_THROW(enforce_budget(Budget{10.0}, l));  // at the cap is fine
    EXPECT_NO_THROW(enforce_budget(Budget{}, l));
    EXPECT_THROW(enforce_budget(Budget{9.99}, l), BudgetExhausted);
}
