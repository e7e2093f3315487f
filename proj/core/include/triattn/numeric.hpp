#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace triattn {

// Pairwise (tree) summation of f(lo..hi). Keeps error growth logarithmic in n,
// which matters for calibration runs approaching a million tokens.
template <typename F>
double pairwise_sum(std::size_t lo, std::size_t hi, F && f) {
    const std::size_t n = hi - lo;
    if (n <= 64) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            acc += f(i);
        }
        return acc;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

inline double pairwise_sum(std::span<const double> xs) {
    return pairwise_sum(0, xs.size(), [&](std::size_t i) { return xs[i]; });
}

// Pearson correlation; returns NaN when either side has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    const double mean_a = pairwise_sum(a) / double(n);
    const double mean_b = pairwise_sum(b) / double(n);
    const double cov = pairwise_sum(0, n, [&](std::size_t i) { return (a[i] - mean_a) * (b[i] - mean_b); });
    const double var_a = pairwise_sum(0, n, [&](std::size_t i) { return (a[i] - mean_a) * (a[i] - mean_a); });
    const double var_b = pairwise_sum(0, n, [&](std::size_t i) { return (b[i] - mean_b) * (b[i] - mean_b); });
    if (var_a == 0.0 || var_b == 0.0) {
        return std::nan("");
    }
    return cov / std::sqrt(var_a * var_b);
}

} // namespace triattn
