#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "triattn/rope.hpp"

namespace triattn {

// A positioned sequence of pre-RoPE Q/K vectors. Stored in f32 on disk
// (QKT1 format), widened to f64 in memory.
struct QkTrace {
    std::size_t num_tokens = 0;
    std::size_t num_q_heads = 0;
    std::size_t num_k_heads = 0;
    std::size_t head_dim = 0;
    bool explicit_positions = false;
    std::vector<std::uint64_t> positions;  // strictly increasing, default 0..T-1
    std::vector<float> q;                  // [token][q_head][dim]
    std::vector<float> k;                  // [token][k_head][dim]

    std::size_t group_size() const { return num_q_heads / num_k_heads; }

    HeadVector q_vector(std::size_t token, std::size_t head) const;
    HeadVector k_vector(std::size_t token, std::size_t head) const;
};

QkTrace load_trace(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_trace(const QkTrace & trace);
QkTrace load_trace_file(const std::string & path);
void write_trace_file(const QkTrace & trace, const std::string & path);

// Per-band calibrated statistics for one (q-head, paired k-head) pair.
struct BandStats {
    BandVector mean_q;        // E[q_f]
    double mean_norm_q = 0.0; // E[|q_f|]
    BandVector mean_k;        // E[k_f] of the paired k-head
    double mean_norm_k = 0.0; // E[|k_f|]
    double mrl_q = 0.0;       // R_f = |E[q_f]| / E[|q_f|], in [0,1]
    double mrl_k = 0.0;       // K-side analogue, reported for analysis only
};

struct HeadStats {
    std::size_t q_head_index = 0;
    std::vector<BandStats> bands;
    double mrl_full = 0.0;  // whole-vector R = |E[q]| / E[|q|]
};

struct Calibration {
    FrequencySpec spec;
    std::size_t num_q_heads = 0;
    std::size_t num_k_heads = 0;
    std::vector<HeadStats> heads;  // one per q-head; K fields come from k-head floor(g/G)
};

// Mean Q/K centers, expected norms and MRL per head and band. K statistics
// are computed once per k-head and shared across its GQA group.
Calibration calibrate(const QkTrace & trace, const FrequencySpec & spec);

// R = |mean of samples| / mean of sample norms; 0 when the denominator is 0.
double mean_resultant_length(std::span<const BandVector> samples);

// Band indices ranked by expected contribution C_f = E[|q_f|]*E[|k_f|],
// descending, ties broken by lower index. top_k is clamped to d/2.
std::vector<std::size_t> dominant_bands(const HeadStats & stats, std::size_t top_k);

std::string calibration_to_json(const Calibration & calib);
Calibration calibration_from_json(const std::string & text);

} // namespace triattn
