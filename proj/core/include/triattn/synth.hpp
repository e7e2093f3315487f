#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "triattn/rope.hpp"
#include "triattn/stats.hpp"

namespace triattn {

// Per-band generative model for one synthetic head.
//
// Angles are drawn from a wrapped normal around the center angle with
// standard deviation 1/sqrt(kappa); kappa == 0 means uniform angles.
// Norms are drawn log-normally: norm = magnitude * exp(norm_jitter * z).
// All draws come from keyed-splitmix64 keyed on (seed, side, token, head,
// band), so generation is order-independent and reproducible.
struct SynthHeadSpec {
    std::size_t head_dim = 0;
    std::vector<double> q_center_angle;  // per band
    std::vector<double> q_center_mag;
    std::vector<double> k_center_angle;
    std::vector<double> k_center_mag;
    std::vector<double> kappa;  // per band, >= 0
    double norm_jitter = 0.0;
    std::uint64_t seed = 0;

    // Centers derived deterministically from the seed, uniform magnitude 1,
    // a single kappa for every band.
    static SynthHeadSpec uniform(std::size_t head_dim, double kappa, double norm_jitter,
                                 std::uint64_t seed);
};

QkTrace generate_trace(const SynthHeadSpec & spec, std::size_t num_tokens,
                       std::size_t num_q_heads, std::size_t num_k_heads);

// JSON provenance sidecar: the full SynthHeadSpec plus the generator name.
std::string synth_sidecar_json(const SynthHeadSpec & spec, std::size_t num_tokens,
                               std::size_t num_q_heads, std::size_t num_k_heads);

// Brute-force lower-triangular logit matrix via logit_exact; rows indexed by
// query token, row i holds entries for key tokens 0..i. T is capped at 4096.
std::vector<std::vector<double>> oracle_attention_matrix(const QkTrace & trace,
                                                         const FrequencySpec & spec,
                                                         std::size_t q_head);

} // namespace triattn
