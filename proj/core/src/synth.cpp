#include "triattn/synth.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "triattn/error.hpp"
#include "triattn/rng.hpp"

namespace triattn {

namespace {

constexpr std::uint64_t kSideQ = 0;
constexpr std::uint64_t kSideK = 1;

// standard normal via Box-Muller on two keyed draws
double keyed_normal(std::uint64_t seed, std::uint64_t side, std::uint64_t token,
                    std::uint64_t head, std::uint64_t band, std::uint64_t draw) {
    const double u1 = to_unit(keyed_hash(seed, side, token, (head << 8) | band, 2 * draw));
    const double u2 = to_unit(keyed_hash(seed, side, token, (head << 8) | band, 2 * draw + 1));
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

double keyed_uniform(std::uint64_t seed, std::uint64_t side, std::uint64_t token,
                     std::uint64_t head, std::uint64_t band, std::uint64_t draw) {
    return to_unit(keyed_hash(seed, side, token, (head << 8) | band, 2 * draw));
}

} // namespace

SynthHeadSpec SynthHeadSpec::uniform(std::size_t head_dim, double kappa, double norm_jitter,
                                     std::uint64_t seed) {
    if (head_dim < 2 || head_dim % 2 != 0) {
        throw invalid_dimension_error("head_dim must be a positive even integer");
    }
    const std::size_t bands = head_dim / 2;
    SynthHeadSpec spec;
    spec.head_dim = head_dim;
    spec.norm_jitter = norm_jitter;
    spec.seed = seed;
    spec.kappa.assign(bands, kappa);
    spec.q_center_mag.assign(bands, 1.0);
    spec.k_center_mag.assign(bands, 1.0);
    spec.q_center_angle.resize(bands);
    spec.k_center_angle.resize(bands);
    for (std::size_t f = 0; f < bands; ++f) {
        spec.q_center_angle[f] = 2.0 * std::numbers::pi * to_unit(keyed_hash(seed, 100, 0, f, 0));
        spec.k_center_angle[f] = 2.0 * std::numbers::pi * to_unit(keyed_hash(seed, 101, 0, f, 0));
    }
    return spec;
}

QkTrace generate_trace(const SynthHeadSpec & spec, std::size_t num_tokens,
                       std::size_t num_q_heads, std::size_t num_k_heads) {
    const std::size_t bands = spec.head_dim / 2;
    if (spec.head_dim < 2 || spec.head_dim % 2 != 0) {
        throw invalid_dimension_error("head_dim must be a positive even integer");
    }
    if (spec.q_center_angle.size() != bands || spec.q_center_mag.size() != bands ||
        spec.k_center_angle.size() != bands || spec.k_center_mag.size() != bands ||
        spec.kappa.size() != bands) {
        throw invalid_dimension_error("per-band spec arrays must have length head_dim/2");
    }
    if (num_tokens < 1 || num_q_heads < 1 || num_k_heads < 1 || num_q_heads % num_k_heads != 0) {
        throw invalid_dimension_error("counts must be >= 1 with GQA divisibility");
    }

    QkTrace trace;
    trace.num_tokens = num_tokens;
    trace.num_q_heads = num_q_heads;
    trace.num_k_heads = num_k_heads;
    trace.head_dim = spec.head_dim;
    trace.positions.resize(num_tokens);
    std::iota(trace.positions.begin(), trace.positions.end(), std::uint64_t{0});
    trace.q.resize(num_tokens * num_q_heads * spec.head_dim);
    trace.k.resize(num_tokens * num_k_heads * spec.head_dim);

    auto sample_band = [&](std::uint64_t side, std::size_t t, std::size_t h, std::size_t f,
                           double center_angle, double center_mag, float * out) {
        double angle;
        if (spec.kappa[f] <= 0.0) {
            angle = 2.0 * std::numbers::pi * keyed_uniform(spec.seed, side, t, h, f, 0) - std::numbers::pi;
        } else {
            angle = center_angle + keyed_normal(spec.seed, side, t, h, f, 0) / std::sqrt(spec.kappa[f]);
        }
        double norm = center_mag;
        if (spec.norm_jitter > 0.0) {
            norm *= std::exp(spec.norm_jitter * keyed_normal(spec.seed, side, t, h, f, 1));
        }
        out[0] = float(norm * std::cos(angle));
        out[1] = float(norm * std::sin(angle));
    };

    for (std::size_t t = 0; t < num_tokens; ++t) {
        for (std::size_t h = 0; h < num_q_heads; ++h) {
            for (std::size_t f = 0; f < bands; ++f) {
                sample_band(kSideQ, t, h, f, spec.q_center_angle[f], spec.q_center_mag[f],
                            &trace.q[(t * num_q_heads + h) * spec.head_dim + 2 * f]);
            }
        }
        for (std::size_t h = 0; h < num_k_heads; ++h) {
            for (std::size_t f = 0; f < bands; ++f) {
                sample_band(kSideK, t, h, f, spec.k_center_angle[f], spec.k_center_mag[f],
                            &trace.k[(t * num_k_heads + h) * spec.head_dim + 2 * f]);
            }
        }
    }
    return trace;
}

std::string synth_sidecar_json(const SynthHeadSpec & spec, std::size_t num_tokens,
                               std::size_t num_q_heads, std::size_t num_k_heads) {
    nlohmann::json doc;
    doc["generator"] = "keyed-splitmix64";
    doc["head_dim"] = spec.head_dim;
    doc["q_center_angle"] = spec.q_center_angle;
    doc["q_center_mag"] = spec.q_center_mag;
    doc["k_center_angle"] = spec.k_center_angle;
    doc["k_center_mag"] = spec.k_center_mag;
    doc["kappa"] = spec.kappa;
    doc["norm_jitter"] = spec.norm_jitter;
    doc["seed"] = spec.seed;
    doc["num_tokens"] = num_tokens;
    doc["num_q_heads"] = num_q_heads;
    doc["num_k_heads"] = num_k_heads;
    return doc.dump(2);
}

std::vector<std::vector<double>> oracle_attention_matrix(const QkTrace & trace,
                                                         const FrequencySpec & spec,
                                                         std::size_t q_head) {
    if (trace.num_tokens > 4096) {
        throw size_limit_error("oracle_attention_matrix caps T at 4096");
    }
    if (q_head >= trace.num_q_heads) {
        throw invalid_argument_error("q_head out of range");
    }
    const std::size_t k_head = q_head / trace.group_size();
    std::vector<std::vector<double>> rows(trace.num_tokens);
    for (std::size_t i = 0; i < trace.num_tokens; ++i) {
        const HeadVector qv = trace.q_vector(i, q_head);
        rows[i].resize(i + 1);
        for (std::size_t j = 0; j <= i; ++j) {
            rows[i][j] = logit_exact(qv, trace.positions[i], trace.k_vector(j, k_head),
                                     trace.positions[j], spec);
        }
    }
    return rows;
}

} // namespace triattn
