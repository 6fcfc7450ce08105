#pragma once

#include <cmath>
#include <limits>

#include "ttscale/errors.hpp"

// Compute accounting. One abstract "unit" is the generation cost of one step
// with a 1B-parameter model; decode and verifier rates are calibrated against
// that (a slow decoded chunk costs three orders of magnitude more than a fast
// one, which is the whole reason guided search bothers with a proxy decoder).

namespace ttscale {

enum class CostKind { generation, slow_decode, fast_decode, verifier };

struct CostLedger {
    double generation_units = 0.0;
    double slow_decode_units = 0.0;
    double fast_decode_units = 0.0;
    double verifier_units = 0.0;

    double total() const {
        return generation_units + slow_decode_units + fast_decode_units + verifier_units;
    }

    CostLedger& charge(CostKind kind, double amount) {
        if (!(amount >= 0.0)) throw NumericError("charge: amount must be non-negative");
        switch (kind) {
            case CostKind::generation: generation_units += amount; break;
            case CostKind::slow_decode: slow_decode_units += amount; break;
            case CostKind::fast_decode: fast_decode_units += amount; break;
            case CostKind::verifier: verifier_units += amount; break;
        }
        return *this;
    }
};

struct CostModel {
    double alpha_per_billion = 1.0;     // generation units per step per 1B params
    double slow_decode_rate = 137.2;    // units per decoded chunk
    double fast_decode_rate = 0.015;    // units per decoded chunk
    double verifier_rate = 0.01;        // units per scored window

    double per_step(double params_b) const { return alpha_per_billion * params_b; }
};

// Cap on ledger totals for one run. Default is unbounded.
struct Budget {
    double max_total_units = std::numeric_limits<double>::infinity();

    bool exceeded(const CostLedger& ledger) const { return ledger.total() > max_total_units; }
};

// Thrown when a run blows through its budget; carries what was spent so far.
struct BudgetExhausted : Error {
    CostLedger partial;

    explicit BudgetExhausted(const CostLedger& ledger)
        : Error("compute budget exhausted"), partial(ledger) {}
};

inline void enforce_budget(const Budget& budget, const CostLedger& ledger) {
    if (budget.exceeded(ledger)) throw BudgetExhausted(ledger);
}

// How many full sampling passes of the small model fit in the generation cost
// of one pass of the large model. Step count cancels, so this is just the
// parameter ratio floored. Models of equal size match at N = 1.
inline int compute_matched_n(double small_params_b, double large_params_b) {
    if (!(small_params_b > 0.0)) throw ModelError("compute_matched_n: small model has no cost");
    if (large_params_b < small_params_b)
        throw ModelError("compute_matched_n: large model must not be smaller than small model");
    return static_cast<int>(std::floor(large_params_b / small_params_b));
}

}  // namespace ttscale
