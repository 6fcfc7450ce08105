#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "ttscale/errors.hpp"

// Small statistics kit for the harness and the empirical tests: moments,
// confidence intervals, paired one-sided tests, Pearson correlation.

namespace ttscale {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw ArityError("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean(xs);
    double s2 = 0.0;
    for (double x : xs) s2 += (x - m) * (x - m);
    return std::sqrt(s2 / static_cast<double>(xs.size() - 1));
}

// Two-sided 97.5% Student t quantiles for df 1..29; beyond that the normal
// approximation is within a percent and we switch to z.
inline double t_quantile_975(size_t df) {
    static constexpr double table[29] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045};
    if (df == 0) throw ArityError("t quantile needs df >= 1");
    if (df <= 29) return table[df - 1];
    return 1.959963984540054;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// 95% CI for the mean: normal approximation from 30 samples up, t-based below.
inline Interval ci95(std::span<const double> xs) {
    double m = mean(xs);
    if (xs.size() < 2) return {m, m};
    double se = sample_std(xs) / std::sqrt(static_cast<double>(xs.size()));
    double q = xs.size() >= 30 ? 1.959963984540054 : t_quantile_975(xs.size() - 1);
    return {m - q * se, m + q * se};
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// One-sided paired test of H1: mean(diffs) > 0. Normal approximation; callers
// here always have n >= 30. Returns the p-value.
inline double paired_one_sided_p(std::span<const double> diffs) {
    if (diffs.size() < 2) throw ArityError("paired test needs at least 2 pairs");
    double m = mean(diffs);
    double sd = sample_std(diffs);
    if (sd == 0.0) return m > 0.0 ? 0.0 : 1.0;
    double t = m / (sd / std::sqrt(static_cast<double>(diffs.size())));
    return 1.0 - normal_cdf(t);
}

// One-sided 95% lower confidence bound on the mean of paired differences.
inline double paired_lower_bound_95(std::span<const double> diffs) {
    if (diffs.size() < 2) throw ArityError("paired bound needs at least 2 pairs");
    double m = mean(diffs);
    double se = sample_std(diffs) / std::sqrt(static_cast<double>(diffs.size()));
    return m - 1.6448536269514722 * se;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw ArityError("pearson: mismatched samples");
    double mx = mean(xs);
    double my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw NumericError("pearson: zero variance sample");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace ttscale
