#include "triattn/cache.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "triattn/error.hpp"
#include "triattn/numeric.hpp"

namespace triattn {

void append(KvCache & cache, std::span<const KeyRecord> new_keys, std::uint64_t position) {
    if (new_keys.size() != cache.num_k_heads()) {
        throw shape_error("append expects exactly one key per k-head");
    }
    for (const auto & head : cache.heads) {
        if (!head.empty() && head.back().position >= position) {
            throw ordering_error("append position " + std::to_string(position) +
                                 " not greater than existing positions");
        }
    }
    for (std::size_t h = 0; h < cache.num_k_heads(); ++h) {
        KeyRecord rec = new_keys[h];
        rec.position = position;
        cache.heads[h].push_back(std::move(rec));
    }
}

std::vector<double> zscore_normalize(std::span<const double> scores) {
    if (scores.empty()) {
        throw empty_input_error("zscore_normalize on empty list");
    }
    const std::size_t n = scores.size();
    const double mu = pairwise_sum(scores) / double(n);
    const double var = pairwise_sum(0, n, [&](std::size_t i) {
        return (scores[i] - mu) * (scores[i] - mu);
    }) / double(n);
    const double sigma = std::sqrt(var);
    std::vector<double> out(n);
    if (sigma == 0.0) {
        return out;  // constant scores carry no ranking information
    }
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (scores[i] - mu) / sigma;
    }
    return out;
}

std::vector<double> gqa_aggregate(const std::vector<std::vector<double>> & per_head_scores) {
    if (per_head_scores.empty()) {
        throw empty_input_error("gqa_aggregate needs at least one head");
    }
    const std::size_t n = per_head_scores.front().size();
    for (const auto & scores : per_head_scores) {
        if (scores.size() != n) {
            throw shape_error("gqa_aggregate: ragged per-head score lists");
        }
    }
    std::vector<double> out(n, -std::numeric_limits<double>::infinity());
    for (const auto & scores : per_head_scores) {
        const std::vector<double> z = zscore_normalize(scores);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = std::max(out[i], z[i]);
        }
    }
    return out;
}

void prune(KvCache & cache, std::uint64_t step, std::uint64_t current_position,
           const Calibration & calib, const PruneConfig & config) {
    const std::size_t G = config.group_size;
    if (calib.heads.size() < cache.num_k_heads() * G) {
        throw configuration_error("calibration lacks stats for " +
                                  std::to_string(cache.num_k_heads() * G) + " q-heads");
    }
    for (std::size_t h = 0; h < cache.num_k_heads(); ++h) {
        auto & keys = cache.heads[h];
        if (keys.size() <= config.budget) {
            continue;
        }
        const std::size_t n = keys.size();

        std::vector<std::vector<double>> raw(G, std::vector<double>(n));
        for (std::size_t g = 0; g < G; ++g) {
            const HeadStats & stats = calib.heads[h * G + g];
            for (std::size_t i = 0; i < n; ++i) {
                raw[g][i] = score_averaged_cfg(keys[i], current_position, stats, calib.spec,
                                               config.offsets, config.use_trig, config.mrl_weight);
            }
        }
        const std::vector<double> final_scores = gqa_aggregate(raw);

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (final_scores[a] != final_scores[b]) {
                return final_scores[a] > final_scores[b];
            }
            return keys[a].position < keys[b].position;  // older key wins ties
        });

        std::vector<bool> keep(n, false);
        std::size_t kept = 0;
        if (config.protect_recent) {
            // protected keys count against the budget, newest first
            const std::uint64_t cutoff =
                current_position >= config.window ? current_position - config.window + 1 : 0;
            for (std::size_t i = n; i-- > 0 && kept < config.budget;) {
                if (keys[i].position >= cutoff) {
                    keep[i] = true;
                    ++kept;
                }
            }
        }
        for (std::size_t idx : order) {
            if (kept >= config.budget) {
                break;
            }
            if (!keep[idx]) {
                keep[idx] = true;
                ++kept;
            }
        }

        std::vector<KeyRecord> retained;
        retained.reserve(kept);
        for (std::size_t i = 0; i < n; ++i) {
            if (keep[i]) {
                retained.push_back(std::move(keys[i]));
            } else {
                cache.evictions.push_back({keys[i].position, step});
            }
        }
        keys = std::move(retained);
    }
}

DecodeReport simulate_decode(const QkTrace & key_stream, const Calibration & calib,
                             const PruneConfig & config) {
    for (std::size_t t = 0; t < key_stream.num_tokens; ++t) {
        if (key_stream.positions[t] != t) {
            throw ordering_error("simulate_decode expects positions 0..T-1");
        }
    }
    if (config.budget < 1 || config.window < 1 || config.group_size < 1) {
        throw configuration_error("budget, window and group_size must be >= 1");
    }

    DecodeReport report;
    report.config = config;
    KvCache cache(key_stream.num_k_heads);
    std::vector<KeyRecord> row(key_stream.num_k_heads);
    for (std::size_t t = 0; t < key_stream.num_tokens; ++t) {
        for (std::size_t h = 0; h < key_stream.num_k_heads; ++h) {
            row[h] = KeyRecord::make(key_stream.k_vector(t, h), t);
        }
        append(cache, row, t);
        const std::uint64_t step = t + 1;  // tokens generated so far
        if (step % config.window == 0) {
            prune(cache, step, t, calib, config);
            report.prune_steps.push_back(step);
            DecodeRound round;
            round.step = step;
            for (const auto & head : cache.heads) {
                std::vector<std::uint64_t> positions;
                positions.reserve(head.size());
                for (const auto & key : head) {
                    positions.push_back(key.position);
                }
                round.retained_positions.push_back(std::move(positions));
            }
            report.rounds.push_back(std::move(round));
        }
    }
    report.evictions = cache.evictions;
    for (const auto & head : cache.heads) {
        std::vector<std::uint64_t> positions;
        positions.reserve(head.size());
        for (const auto & key : head) {
            positions.push_back(key.position);
        }
        report.final_positions.push_back(std::move(positions));
    }
    return report;
}

std::string decode_report_to_json(const DecodeReport & report) {
    nlohmann::json doc;
    doc["config"] = {
        {"budget", report.config.budget},
        {"window", report.config.window},
        {"offsets", report.config.offsets.offsets},
        {"group_size", report.config.group_size},
        {"use_trig", report.config.use_trig},
        {"mrl_weight", report.config.mrl_weight},
        {"protect_recent", report.config.protect_recent},
    };
    doc["rounds"] = nlohmann::json::array();
    for (const DecodeRound & round : report.rounds) {
        doc["rounds"].push_back({
            {"step", round.step},
            {"retained_positions", round.retained_positions},
        });
    }
    doc["evictions"] = nlohmann::json::array();
    for (const EvictionEvent & e : report.evictions) {
        doc["evictions"].push_back({e.position, e.step});
    }
    doc["prune_steps"] = report.prune_steps;
    doc["final_positions"] = report.final_positions;
    return doc.dump(2);
}

} // namespace triattn
