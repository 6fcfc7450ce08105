#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "ttscale/budget.hpp"
#include "ttscale/errors.hpp"
#include "ttscale/latent.hpp"
#include "ttscale/rng.hpp"
#include "ttscale/world.hpp"

// Exact references for the stochastic machinery. Everything here enumerates;
// nothing here shares selection code with the search strategies, so the two
// can disagree only if one of them is wrong.

namespace ttscale {

// A step model small enough to enumerate: E outcomes per step, each with a
// fixed latent payload and probability. Probabilities must sum to 1.
struct EnumerableStepModel {
    std::vector<LatentChunk> outcomes;
    std::vector<double> probs;

    void validate() const {
        if (outcomes.empty() || outcomes.size() != probs.size())
            throw ConfigError("enumerable model needs matching outcomes and probs");
        if (outcomes.size() > 8) throw TractabilityError("enumerable model capped at 8 outcomes");
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw NumericError("outcome probability must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw NumericError("outcome probabilities must sum to 1");
    }
};

struct EnumeratedTrajectory {
    std::vector<int> outcome_indices;  // one per step
    double prob = 0.0;
};

// All outcome sequences of length steps with their joint probabilities.
// Guarded at E^T <= 4096 so nobody enumerates by accident.
inline std::vector<EnumeratedTrajectory> enumerate_trajectories(const EnumerableStepModel& model,
                                                                int steps) {
    model.validate();
    if (steps < 1 || steps > 3) throw TractabilityError("enumeration capped at 3 steps");
    double total = std::pow(static_cast<double>(model.outcomes.size()), steps);
    if (total > 4096.0) throw TractabilityError("enumeration capped at 4096 trajectories");

    std::vector<EnumeratedTrajectory> out;
    out.reserve(static_cast<size_t>(total));
    std::vector<int> indices(steps, 0);
    while (true) {
        EnumeratedTrajectory t;
        t.outcome_indices = indices;
        t.prob = 1.0;
        for (int i : indices) t.prob *= model.probs[i];
        out.push_back(std::move(t));
        int pos = steps - 1;
        while (pos >= 0 && ++indices[pos] == static_cast<int>(model.outcomes.size())) {
            indices[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

// E[max of n i.i.d. draws] from a discrete score distribution, via the order
// statistic identity E[max] = sum_s s * (F(s)^n - F(s-)^n). Equal scores are
// merged first so the CDF steps are exact.
inline double exact_best_of_n_expectation(std::span<const double> scores,
                                          std::span<const double> probs, int n) {
    if (scores.empty() || scores.size() != probs.size())
        throw ArityError("exact_best_of_n_expectation: mismatched inputs");
    if (n < 1) throw ArityError("exact_best_of_n_expectation: n must be >= 1");
    std::map<double, double> merged;
    double psum = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!(probs[i] >= 0.0)) throw NumericError("negative probability");
        merged[scores[i]] += probs[i];
        psum += probs[i];
    }
    if (std::abs(psum - 1.0) > 1e-12) throw NumericError("probabilities must sum to 1");
    double expect = 0.0;
    double cdf_prev = 0.0;
    for (const auto& [score, p] : merged) {
        double cdf = cdf_prev + p;
        expect += score * (std::pow(cdf, n) - std::pow(cdf_prev, n));
        cdf_prev = cdf;
    }
    return expect;
}

// P(item i lands in the first k slots of a Plackett-Luce ordering), by brute
// permutation enumeration. Capped at 7 items (5040 orderings).
inline std::vector<double> exact_plackett_luce_inclusion(std::span<const double> probs, int k) {
    const int n = static_cast<int>(probs.size());
    if (n == 0 || k < 0 || k > n) throw ArityError("exact_plackett_luce_inclusion: bad arity");
    if (n > 7) throw TractabilityError("PL enumeration capped at 7 items");
    double psum = 0.0;
    for (double p : probs) {
        if (!(p > 0.0)) throw NumericError("PL enumeration needs strictly positive probabilities");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-12) throw NumericError("probabilities must sum to 1");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> inclusion(n, 0.0);
    do {
        double remaining = 1.0;
        double p_order = 1.0;
        for (int pos = 0; pos < n; ++pos) {
            p_order *= probs[perm[pos]] / remaining;
            remaining -= probs[perm[pos]];
        }
        for (int pos = 0; pos < k; ++pos) inclusion[perm[pos]] += p_order;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return inclusion;
}

// Generator adapter over an enumerable model, usable anywhere a toy world
// model is. Latents map to fixed chunks; both decoders are exact, so scores
// are a deterministic function of the drawn outcome.
class EnumerableGen {
  public:
    struct State {
        int step = 0;
    };
    struct Outcome {
        LatentChunk latent;
        State next;
    };

    EnumerableGen(EnumerableStepModel model, std::vector<Chunk> decoded_outcomes,
                  CostModel costs = {}, double params_b = 1.0)
        : model_(std::move(model)), decoded_(std::move(decoded_outcomes)), costs_(costs),
          params_b_(params_b) {
        model_.validate();
        if (decoded_.size() != model_.outcomes.size())
            throw ConfigError("EnumerableGen: one decoded chunk per outcome required");
    }

    Outcome generate_step(const State& s, RngStream& rng) const {
        size_t pick = rng.next_categorical(model_.probs);
        Outcome out;
        out.latent = model_.outcomes[pick];
        out.next.step = s.step + 1;
        return out;
    }

    Chunk slow_decode(const LatentChunk& latent, CostLedger& ledger) const {
        ledger.charge(CostKind::slow_decode, costs_.slow_decode_rate);
        return decoded_[outcome_index(latent)];
    }

    Chunk fast_decode(const LatentChunk& latent, RngStream&, CostLedger& ledger) const {
        ledger.charge(CostKind::fast_decode, costs_.fast_decode_rate);
        return decoded_[outcome_index(latent)];
    }

    void charge_step(CostLedger& ledger) const {
        ledger.charge(CostKind::generation, costs_.per_step(params_b_));
    }

    size_t outcome_index(const LatentChunk& latent) const {
        for (size_t i = 0; i < model_.outcomes.size(); ++i)
            if (model_.outcomes[i] == latent) return i;
        throw DecodeError("latent does not name an enumerable outcome");
    }

    const EnumerableStepModel& model() const { return model_; }

  private:
    EnumerableStepModel model_;
    std::vector<Chunk> decoded_;
    CostModel costs_;
    double params_b_;
};

}  // namespace ttscale
