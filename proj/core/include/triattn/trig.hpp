#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "triattn/rope.hpp"
#include "triattn/stats.hpp"

namespace triattn {

// Predicted attention-vs-distance curve from calibrated centers.
struct TrigCurve {
    std::vector<std::uint64_t> distances;
    std::vector<double> values;
    std::size_t head_index = 0;
};

struct ReconstructionReport {
    std::vector<double> per_query_r;
    double mean_r = 0.0;
    std::size_t n_queries = 0;
    std::vector<std::uint64_t> distances_used;
    std::size_t skipped_queries = 0;       // fewer than 3 valid distances
    std::size_t skipped_zero_variance = 0; // zero variance in actual or predicted logits
};

// s_hat(D) = sum_f |E[q_f]||E[k_f]| cos(w_f*D + phi_f), phases from the centers.
TrigCurve predict_curve(const HeadStats & stats, std::span<const std::uint64_t> distances,
                        const FrequencySpec & spec);

// {1, 2, 4, ...} up to the largest power of two <= max_delta.
std::vector<std::uint64_t> log_spaced_distances(std::uint64_t max_delta);

// Mean Pearson correlation between each query's actual logits (its true q
// vector against the true cached keys) and the center-predicted curve,
// sampled at the given distances.
ReconstructionReport reconstruction_correlation(const QkTrace & trace, const HeadStats & stats,
                                                std::size_t q_head, const FrequencySpec & spec,
                                                std::span<const std::uint64_t> distances,
                                                std::size_t group_size);

} // namespace triattn
