#pragma once

#include <cstdint>
#include <vector>

#include "triattn/rope.hpp"
#include "triattn/stats.hpp"

namespace triattn {

// Future-offset set D used by the averaged score. Default is the geometric
// ladder {1, 2, 4, ..., 2^16}.
struct OffsetSet {
    std::vector<std::uint64_t> offsets;

    std::size_t size() const { return offsets.size(); }
};

OffsetSet make_geometric_offsets(std::uint64_t min_offset = 1, std::uint64_t max_offset = 65536);
OffsetSet make_linear_offsets(std::uint64_t min_offset, std::uint64_t max_offset, std::size_t count);

// One cached key: pre-RoPE vector, its position, and per-band norms cached
// at insertion (keys are immutable).
struct KeyRecord {
    HeadVector vector;
    std::uint64_t position = 0;
    std::vector<double> per_band_norms;

    static KeyRecord make(HeadVector v, std::uint64_t position);
};

// S_trig = sum_f |E[q_f]| |k_f| cos(w_f*D + phi_f), phi_f = arg(E[q_f]) - arg(k_f).
double score_trig(const KeyRecord & key, double delta, const HeadStats & stats,
                  const FrequencySpec & spec);

// S_norm^(0) = sum_f E[|q_f|] |k_f|.
double score_norm_base(const KeyRecord & key, const HeadStats & stats);

// S_norm = sum_f (1 - R_f) E[|q_f|] |k_f|  (canonical form; the algebraic
// identity sum_f (E[|q_f|] - |E[q_f]|) |k_f| is the test oracle).
double score_norm(const KeyRecord & key, const HeadStats & stats);

// S = S_trig + S_norm.
double score_combined(const KeyRecord & key, double delta, const HeadStats & stats,
                      const FrequencySpec & spec);

// S~ = mean over offsets of S(key, D + delta), D = p_q - key.position.
// eval_counter, when given, counts combined-score evaluations.
double score_averaged(const KeyRecord & key, std::uint64_t current_position,
                      const HeadStats & stats, const FrequencySpec & spec,
                      const OffsetSet & offsets, std::size_t * eval_counter = nullptr);

// Ablation-aware variant: use_trig drops S_trig, mrl_weight=false replaces
// S_norm with S_norm^(0).
double score_averaged_cfg(const KeyRecord & key, std::uint64_t current_position,
                          const HeadStats & stats, const FrequencySpec & spec,
                          const OffsetSet & offsets, bool use_trig, bool mrl_weight,
                          std::size_t * eval_counter = nullptr);

} // namespace triattn
