#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "triattn/scoring.hpp"
#include "triattn/stats.hpp"

namespace triattn {

struct PruneConfig {
    std::size_t budget = 2048;  // B, retained keys per k-head
    std::size_t window = 128;   // beta, decode steps between pruning rounds
    OffsetSet offsets = make_geometric_offsets();
    std::size_t group_size = 1;  // G, query heads per k-head
    bool use_trig = true;        // ablation: drop S_trig
    bool mrl_weight = true;      // ablation: S_norm^(0) instead of S_norm
    bool protect_recent = false; // exempt the last `window` positions from eviction
};

struct EvictionEvent {
    std::uint64_t position = 0;
    std::uint64_t step = 0;
};

// Per-layer KV cache during decoding: one ordered key stream per k-head.
struct KvCache {
    std::vector<std::vector<KeyRecord>> heads;  // positions strictly increasing within a head
    std::vector<EvictionEvent> evictions;

    explicit KvCache(std::size_t num_k_heads) : heads(num_k_heads) {}
    std::size_t num_k_heads() const { return heads.size(); }
};

// Appends one key per k-head; positions must be strictly monotone.
void append(KvCache & cache, std::span<const KeyRecord> new_keys, std::uint64_t position);

// (S - mu) / sigma with population sigma; all zeros when sigma == 0.
std::vector<double> zscore_normalize(std::span<const double> scores);

// Elementwise max of the z-scored per-head lists.
std::vector<double> gqa_aggregate(const std::vector<std::vector<double>> & per_head_scores);

// Scores every key per query head, z-scores, max-aggregates, keeps the
// top-B per k-head (older position wins ties) and logs evictions.
void prune(KvCache & cache, std::uint64_t step, std::uint64_t current_position,
           const Calibration & calib, const PruneConfig & config);

struct DecodeRound {
    std::uint64_t step = 0;
    std::vector<std::vector<std::uint64_t>> retained_positions;  // per k-head
};

struct DecodeReport {
    PruneConfig config;
    std::vector<DecodeRound> rounds;
    std::vector<EvictionEvent> evictions;
    std::vector<std::uint64_t> prune_steps;  // instrumented: steps at which prune ran
    std::vector<std::vector<std::uint64_t>> final_positions;  // per k-head
};

// Feeds the trace's keys one token at a time; prune fires at every
// window-th generated token.
DecodeReport simulate_decode(const QkTrace & key_stream, const Calibration & calib,
                             const PruneConfig & config);

std::string decode_report_to_json(const DecodeReport & report);

} // namespace triattn
