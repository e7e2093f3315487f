#include "triattn/scoring.hpp"

#include <cmath>

#include "triattn/error.hpp"

namespace triattn {

OffsetSet make_geometric_offsets(std::uint64_t min_offset, std::uint64_t max_offset) {
    if (min_offset < 1 || max_offset < min_offset) {
        throw invalid_argument_error("geometric offsets need 1 <= min <= max");
    }
    OffsetSet set;
    for (std::uint64_t d = min_offset; d <= max_offset; d *= 2) {
        set.offsets.push_back(d);
        if (d > max_offset / 2) {
            break;
        }
    }
    return set;
}

OffsetSet make_linear_offsets(std::uint64_t min_offset, std::uint64_t max_offset, std::size_t count) {
    if (min_offset < 1 || max_offset < min_offset || count < 1) {
        throw invalid_argument_error("linear offsets need 1 <= min <= max and count >= 1");
    }
    OffsetSet set;
    if (count == 1) {
        set.offsets.push_back(min_offset);
        return set;
    }
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = double(i) / double(count - 1);
        auto v = std::uint64_t(std::llround(double(min_offset) + t * double(max_offset - min_offset)));
        if (v <= prev) {
            v = prev + 1;  // keep strictly increasing when the span is narrow
        }
        set.offsets.push_back(v);
        prev = v;
    }
    return set;
}

KeyRecord KeyRecord::make(HeadVector v, std::uint64_t position) {
    KeyRecord rec;
    rec.per_band_norms.reserve(v.bands.size());
    for (const BandVector & b : v.bands) {
        rec.per_band_norms.push_back(b.norm());
    }
    rec.vector = std::move(v);
    rec.position = position;
    return rec;
}

static void check_bands(const KeyRecord & key, const HeadStats & stats) {
    if (key.vector.bands.size() != stats.bands.size()) {
        throw invalid_dimension_error("key band count does not match head stats");
    }
}

double score_trig(const KeyRecord & key, double delta, const HeadStats & stats,
                  const FrequencySpec & spec) {
    if (delta < 0.0) {
        throw invalid_argument_error("score_trig requires delta >= 0");
    }
    check_bands(key, stats);
    double acc = 0.0;
    for (std::size_t f = 0; f < stats.bands.size(); ++f) {
        const double amp = stats.bands[f].mean_q.norm() * key.per_band_norms[f];
        if (amp == 0.0) {
            continue;
        }
        const double phase = stats.bands[f].mean_q.arg() - key.vector.bands[f].arg();
        acc += amp * std::cos(spec.frequencies[f] * delta + phase);
    }
    return acc;
}

double score_norm_base(const KeyRecord & key, const HeadStats & stats) {
    check_bands(key, stats);
    double acc = 0.0;
    for (std::size_t f = 0; f < stats.bands.size(); ++f) {
        acc += stats.bands[f].mean_norm_q * key.per_band_norms[f];
    }
    return acc;
}

double score_norm(const KeyRecord & key, const HeadStats & stats) {
    check_bands(key, stats);
    double acc = 0.0;
    for (std::size_t f = 0; f < stats.bands.size(); ++f) {
        acc += (1.0 - stats.bands[f].mrl_q) * stats.bands[f].mean_norm_q * key.per_band_norms[f];
    }
    return acc;
}

double score_combined(const KeyRecord & key, double delta, const HeadStats & stats,
                      const FrequencySpec & spec) {
    return score_trig(key, delta, stats, spec) + score_norm(key, stats);
}

double score_averaged(const KeyRecord & key, std::uint64_t current_position,
                      const HeadStats & stats, const FrequencySpec & spec,
                      const OffsetSet & offsets, std::size_t * eval_counter) {
    return score_averaged_cfg(key, current_position, stats, spec, offsets, true, true, eval_counter);
}

double score_averaged_cfg(const KeyRecord & key, std::uint64_t current_position,
                          const HeadStats & stats, const FrequencySpec & spec,
                          const OffsetSet & offsets, bool use_trig, bool mrl_weight,
                          std::size_t * eval_counter) {
    if (current_position < key.position) {
        throw causality_error("current position precedes key position");
    }
    if (offsets.offsets.empty()) {
        throw invalid_argument_error("offset set must be nonempty");
    }
    const double base_delta = double(current_position - key.position);
    const double norm_part = mrl_weight ? score_norm(key, stats) : score_norm_base(key, stats);
    double acc = 0.0;
    for (std::uint64_t off : offsets.offsets) {
        const double trig_part = use_trig ? score_trig(key, base_delta + double(off), stats, spec) : 0.0;
        acc += trig_part + norm_part;
        if (eval_counter != nullptr) {
            ++*eval_counter;
        }
    }
    return acc / double(offsets.size());
}

} // namespace triattn
