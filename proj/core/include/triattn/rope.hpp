#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace triattn {

// RoPE frequency schedule: band f rotates at rate theta^(-2f/d).
struct FrequencySpec {
    std::size_t head_dim = 0;   // d, even
    double theta = 10000.0;
    std::vector<double> frequencies;  // length d/2, strictly decreasing, frequencies[0] == 1

    std::size_t num_bands() const { return frequencies.size(); }
};

// One 2D frequency-band subspace, viewed as the complex number re + i*im.
struct BandVector {
    double re = 0.0;
    double im = 0.0;

    double norm() const;
    // Convention: arg of the exact zero vector is 0.
    double arg() const;
};

// Full pre-RoPE vector of one head for one token, split into d/2 bands.
struct HeadVector {
    std::vector<BandVector> bands;

    static HeadVector from_flat(std::span<const double> values);
    std::vector<double> to_flat() const;
};

FrequencySpec make_frequency_spec(std::size_t head_dim, double theta = 10000.0);

// Rotation of a single band by a continuous angle.
BandVector rotate_band(const BandVector & v, double angle);

// Rotates band f by angle frequencies[f] * position.
HeadVector rotate(const HeadVector & v, std::uint64_t position, const FrequencySpec & spec);

// Reference form: rotate both sides, take the real dot product.
double logit_exact(const HeadVector & q, std::uint64_t p_q,
                   const HeadVector & k, std::uint64_t p_k,
                   const FrequencySpec & spec);

// Amplitude-phase form: sum_f |q_f||k_f| cos(w_f*D + phi_f), D = p_q - p_k.
double logit_bands(const HeadVector & q, std::uint64_t p_q,
                   const HeadVector & k, std::uint64_t p_k,
                   const FrequencySpec & spec);

// Per-band (a_f, b_f) with a_f = |q_f||k_f|cos(phi_f), b_f = -|q_f||k_f|sin(phi_f);
// sum_f [a_f cos(w_f D) + b_f sin(w_f D)] reproduces logit_bands for every D.
std::vector<std::pair<double, double>> trig_coefficients(const HeadVector & q, const HeadVector & k);

double coefficient_logit(std::span<const std::pair<double, double>> coeffs,
                         double delta, const FrequencySpec & spec);

} // namespace triattn
