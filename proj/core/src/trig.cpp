#include "triattn/trig.hpp"

#include <cmath>
#include <unordered_map>

#include "triattn/error.hpp"
#include "triattn/numeric.hpp"

namespace triattn {

TrigCurve predict_curve(const HeadStats & stats, std::span<const std::uint64_t> distances,
                        const FrequencySpec & spec) {
    if (stats.bands.size() != spec.num_bands()) {
        throw invalid_dimension_error("head stats band count does not match spec");
    }
    TrigCurve curve;
    curve.head_index = stats.q_head_index;
    curve.distances.assign(distances.begin(), distances.end());
    curve.values.reserve(distances.size());
    for (std::uint64_t delta : distances) {
        double acc = 0.0;
        for (std::size_t f = 0; f < stats.bands.size(); ++f) {
            const BandStats & b = stats.bands[f];
            const double amp = b.mean_q.norm() * b.mean_k.norm();
            if (amp == 0.0) {
                continue;
            }
            const double phase = b.mean_q.arg() - b.mean_k.arg();
            acc += amp * std::cos(spec.frequencies[f] * double(delta) + phase);
        }
        curve.values.push_back(acc);
    }
    return curve;
}

std::vector<std::uint64_t> log_spaced_distances(std::uint64_t max_delta) {
    if (max_delta < 1) {
        throw invalid_argument_error("max_delta must be >= 1");
    }
    std::vector<std::uint64_t> out;
    for (std::uint64_t d = 1; d <= max_delta; d *= 2) {
        out.push_back(d);
        if (d > max_delta / 2) {
            break;
        }
    }
    return out;
}

ReconstructionReport reconstruction_correlation(const QkTrace & trace, const HeadStats & stats,
                                                std::size_t q_head, const FrequencySpec & spec,
                                                std::span<const std::uint64_t> distances,
                                                std::size_t group_size) {
    if (q_head >= trace.num_q_heads) {
        throw invalid_argument_error("q_head out of range");
    }
    const std::size_t k_head = q_head / group_size;
    const TrigCurve curve = predict_curve(stats, distances, spec);

    // key lookup by absolute position
    std::unordered_map<std::uint64_t, std::size_t> token_at;
    token_at.reserve(trace.num_tokens);
    for (std::size_t t = 0; t < trace.num_tokens; ++t) {
        token_at.emplace(trace.positions[t], t);
    }

    ReconstructionReport report;
    report.distances_used.assign(distances.begin(), distances.end());
    std::vector<double> actual;
    std::vector<double> predicted;
    for (std::size_t i = 0; i < trace.num_tokens; ++i) {
        const std::uint64_t p_q = trace.positions[i];
        actual.clear();
        predicted.clear();
        HeadVector qv;
        bool have_q = false;
        for (std::size_t di = 0; di < distances.size(); ++di) {
            const std::uint64_t delta = distances[di];
            if (p_q < trace.positions.front() + delta) {
                continue;
            }
            const auto it = token_at.find(p_q - delta);
            if (it == token_at.end()) {
                continue;
            }
            if (!have_q) {
                qv = trace.q_vector(i, q_head);
                have_q = true;
            }
            const HeadVector kv = trace.k_vector(it->second, k_head);
            actual.push_back(logit_bands(qv, p_q, kv, p_q - delta, spec));
            predicted.push_back(curve.values[di]);
        }
        if (actual.size() < 3) {
            ++report.skipped_queries;
            continue;
        }
        const double r = pearson(actual, predicted);
        if (std::isnan(r)) {
            ++report.skipped_zero_variance;
            continue;
        }
        report.per_query_r.push_back(r);
    }
    if (report.per_query_r.empty()) {
        throw insufficient_data_error("no query retains >= 3 valid distances with nonzero variance");
    }
    report.n_queries = report.per_query_r.size();
    report.mean_r = pairwise_sum(report.per_query_r) / double(report.n_queries);
    return report;
}

} // namespace triattn
