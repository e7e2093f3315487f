#include "triattn/rope.hpp"

#include <cmath>
#include <string>

#include "triattn/error.hpp"

namespace triattn {

double BandVector::norm() const {
    return std::hypot(re, im);
}

double BandVector::arg() const {
    if (re == 0.0 && im == 0.0) {
        return 0.0;
    }
    return std::atan2(im, re);
}

HeadVector HeadVector::from_flat(std::span<const double> values) {
    if (values.size() % 2 != 0) {
        throw invalid_dimension_error("flat head vector length must be even, got " + std::to_string(values.size()));
    }
    HeadVector v;
    v.bands.resize(values.size() / 2);
    for (std::size_t f = 0; f < v.bands.size(); ++f) {
        v.bands[f] = {values[2 * f], values[2 * f + 1]};
    }
    return v;
}

std::vector<double> HeadVector::to_flat() const {
    std::vector<double> out(bands.size() * 2);
    for (std::size_t f = 0; f < bands.size(); ++f) {
        out[2 * f] = bands[f].re;
        out[2 * f + 1] = bands[f].im;
    }
    return out;
}

FrequencySpec make_frequency_spec(std::size_t head_dim, double theta) {
    if (head_dim < 2 || head_dim % 2 != 0) {
        throw invalid_dimension_error("head_dim must be a positive even integer, got " + std::to_string(head_dim));
    }
    if (!(theta > 1.0)) {
        throw invalid_base_error("theta must be > 1, got " + std::to_string(theta));
    }
    FrequencySpec spec;
    spec.head_dim = head_dim;
    spec.theta = theta;
    spec.frequencies.resize(head_dim / 2);
    for (std::size_t f = 0; f < spec.frequencies.size(); ++f) {
        spec.frequencies[f] = std::pow(theta, -2.0 * double(f) / double(head_dim));
    }
    return spec;
}

static void check_dims(const HeadVector & v, const FrequencySpec & spec) {
    if (v.bands.size() != spec.num_bands()) {
        throw invalid_dimension_error("head vector has " + std::to_string(v.bands.size()) +
                                      " bands, spec expects " + std::to_string(spec.num_bands()));
    }
}

BandVector rotate_band(const BandVector & v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {v.re * c - v.im * s, v.re * s + v.im * c};
}

HeadVector rotate(const HeadVector & v, std::uint64_t position, const FrequencySpec & spec) {
    check_dims(v, spec);
    HeadVector out;
    out.bands.resize(v.bands.size());
    for (std::size_t f = 0; f < v.bands.size(); ++f) {
        // no angle wrapping: cos/sin are periodic and positions stay desk-scale
        out.bands[f] = rotate_band(v.bands[f], spec.frequencies[f] * double(position));
    }
    return out;
}

static void check_causal(std::uint64_t p_q, std::uint64_t p_k) {
    if (p_q < p_k) {
        throw causality_error("query position " + std::to_string(p_q) +
                              " precedes key position " + std::to_string(p_k));
    }
}

double logit_exact(const HeadVector & q, std::uint64_t p_q,
                   const HeadVector & k, std::uint64_t p_k,
                   const FrequencySpec & spec) {
    check_causal(p_q, p_k);
    const HeadVector rq = rotate(q, p_q, spec);
    const HeadVector rk = rotate(k, p_k, spec);
    double acc = 0.0;
    for (std::size_t f = 0; f < rq.bands.size(); ++f) {
        acc += rq.bands[f].re * rk.bands[f].re + rq.bands[f].im * rk.bands[f].im;
    }
    return acc;
}

double logit_bands(const HeadVector & q, std::uint64_t p_q,
                   const HeadVector & k, std::uint64_t p_k,
                   const FrequencySpec & spec) {
    check_causal(p_q, p_k);
    check_dims(q, spec);
    check_dims(k, spec);
    const double delta = double(p_q - p_k);
    double acc = 0.0;
    for (std::size_t f = 0; f < q.bands.size(); ++f) {
        const double amp = q.bands[f].norm() * k.bands[f].norm();
        if (amp == 0.0) {
            continue;
        }
        const double phase = q.bands[f].arg() - k.bands[f].arg();
        acc += amp * std::cos(spec.frequencies[f] * delta + phase);
    }
    return acc;
}

std::vector<std::pair<double, double>> trig_coefficients(const HeadVector & q, const HeadVector & k) {
    if (q.bands.size() != k.bands.size()) {
        throw invalid_dimension_error("q has " + std::to_string(q.bands.size()) +
                                      " bands, k has " + std::to_string(k.bands.size()));
    }
    std::vector<std::pair<double, double>> coeffs(q.bands.size());
    for (std::size_t f = 0; f < q.bands.size(); ++f) {
        const double amp = q.bands[f].norm() * k.bands[f].norm();
        if (amp == 0.0) {
            coeffs[f] = {0.0, 0.0};
            continue;
        }
        const double phase = q.bands[f].arg() - k.bands[f].arg();
        coeffs[f] = {amp * std::cos(phase), -amp * std::sin(phase)};
    }
    return coeffs;
}

double coefficient_logit(std::span<const std::pair<double, double>> coeffs,
                         double delta, const FrequencySpec & spec) {
    if (coeffs.size() != spec.num_bands()) {
        throw invalid_dimension_error("coefficient list does not match spec band count");
    }
    double acc = 0.0;
    for (std::size_t f = 0; f < coeffs.size(); ++f) {
        const double angle = spec.frequencies[f] * delta;
        acc += coeffs[f].first * std::cos(angle) + coeffs[f].second * std::sin(angle);
    }
    return acc;
}

} // namespace triattn
