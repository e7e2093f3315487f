#include "triattn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "triattn/error.hpp"
#include "triattn/numeric.hpp"

namespace triattn {

namespace {

constexpr char kMagic[4] = {'Q', 'K', 'T', '1'};

class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T read() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > bytes_.size()) {
            throw length_error("truncated trace: need " + std::to_string(sizeof(T)) +
                               " bytes at offset " + std::to_string(pos_));
        }
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
void append_raw(std::vector<std::uint8_t> & out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto * p = reinterpret_cast<const std::uint8_t *>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

} // namespace

HeadVector QkTrace::q_vector(std::size_t token, std::size_t head) const {
    const std::size_t base = (token * num_q_heads + head) * head_dim;
    std::vector<double> flat(head_dim);
    for (std::size_t i = 0; i < head_dim; ++i) {
        flat[i] = double(q[base + i]);
    }
    return HeadVector::from_flat(flat);
}

HeadVector QkTrace::k_vector(std::size_t token, std::size_t head) const {
    const std::size_t base = (token * num_k_heads + head) * head_dim;
    std::vector<double> flat(head_dim);
    for (std::size_t i = 0; i < head_dim; ++i) {
        flat[i] = double(k[base + i]);
    }
    return HeadVector::from_flat(flat);
}

QkTrace load_trace(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw format_error("bad trace magic, expected QKT1");
    }
    ByteReader r(bytes.subspan(4));
    QkTrace t;
    t.num_tokens = r.read<std::uint32_t>();
    t.num_q_heads = r.read<std::uint32_t>();
    t.num_k_heads = r.read<std::uint32_t>();
    t.head_dim = r.read<std::uint32_t>();
    if (t.num_k_heads == 0 || t.num_q_heads == 0 || t.head_dim == 0 || t.head_dim % 2 != 0) {
        throw format_error("invalid trace header fields");
    }
    if (t.num_q_heads % t.num_k_heads != 0) {
        throw format_error("num_q_heads must be a multiple of num_k_heads");
    }
    const std::uint32_t pos_flag = r.read<std::uint32_t>();
    if (pos_flag > 1) {
        throw format_error("positions flag must be 0 or 1");
    }
    t.explicit_positions = pos_flag == 1;
    t.positions.resize(t.num_tokens);
    if (t.explicit_positions) {
        for (std::size_t i = 0; i < t.num_tokens; ++i) {
            t.positions[i] = r.read<std::uint64_t>();
        }
    } else {
        std::iota(t.positions.begin(), t.positions.end(), std::uint64_t{0});
    }
    for (std::size_t i = 1; i < t.num_tokens; ++i) {
        if (t.positions[i] <= t.positions[i - 1]) {
            throw format_error("positions must be strictly increasing");
        }
    }
    const std::size_t nq = t.num_tokens * t.num_q_heads * t.head_dim;
    const std::size_t nk = t.num_tokens * t.num_k_heads * t.head_dim;
    if (r.remaining() != (nq + nk) * sizeof(float)) {
        throw length_error("trace payload size does not match header dimensions");
    }
    t.q.resize(nq);
    for (auto & v : t.q) {
        v = r.read<float>();
    }
    t.k.resize(nk);
    for (auto & v : t.k) {
        v = r.read<float>();
    }
    return t;
}

std::vector<std::uint8_t> write_trace(const QkTrace & trace) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    append_raw(out, std::uint32_t(trace.num_tokens));
    append_raw(out, std::uint32_t(trace.num_q_heads));
    append_raw(out, std::uint32_t(trace.num_k_heads));
    append_raw(out, std::uint32_t(trace.head_dim));
    append_raw(out, std::uint32_t(trace.explicit_positions ? 1 : 0));
    if (trace.explicit_positions) {
        for (auto p : trace.positions) {
            append_raw(out, std::uint64_t(p));
        }
    }
    for (float v : trace.q) {
        append_raw(out, v);
    }
    for (float v : trace.k) {
        append_raw(out, v);
    }
    return out;
}

QkTrace load_trace_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw format_error("cannot open trace file: " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_trace(bytes);
}

void write_trace_file(const QkTrace & trace, const std::string & path) {
    const auto bytes = write_trace(trace);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw format_error("cannot open output file: " + path);
    }
    out.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
}

double mean_resultant_length(std::span<const BandVector> samples) {
    if (samples.empty()) {
        throw empty_input_error("mean_resultant_length on empty sample set");
    }
    const std::size_t n = samples.size();
    const double sum_re = pairwise_sum(0, n, [&](std::size_t i) { return samples[i].re; });
    const double sum_im = pairwise_sum(0, n, [&](std::size_t i) { return samples[i].im; });
    const double sum_norm = pairwise_sum(0, n, [&](std::size_t i) { return samples[i].norm(); });
    if (sum_norm == 0.0) {
        return 0.0;
    }
    // rounding can push the ratio a hair past 1; the triangle inequality caps it
    return std::min(std::hypot(sum_re, sum_im) / sum_norm, 1.0);
}

namespace {

struct BandSideStats {
    BandVector mean;
    double mean_norm = 0.0;
    double mrl = 0.0;
};

// Mean band vector, mean band norm and their MRL ratio over tokens.
BandSideStats band_side_stats(const std::vector<float> & data, std::size_t num_tokens,
                              std::size_t num_heads, std::size_t head_dim,
                              std::size_t head, std::size_t band) {
    auto re_at = [&](std::size_t t) { return double(data[(t * num_heads + head) * head_dim + 2 * band]); };
    auto im_at = [&](std::size_t t) { return double(data[(t * num_heads + head) * head_dim + 2 * band + 1]); };
    BandSideStats s;
    const double n = double(num_tokens);
    s.mean.re = pairwise_sum(0, num_tokens, re_at) / n;
    s.mean.im = pairwise_sum(0, num_tokens, im_at) / n;
    s.mean_norm = pairwise_sum(0, num_tokens, [&](std::size_t t) {
        return std::hypot(re_at(t), im_at(t));
    }) / n;
    s.mrl = s.mean_norm == 0.0 ? 0.0 : std::min(s.mean.norm() / s.mean_norm, 1.0);
    return s;
}

} // namespace

Calibration calibrate(const QkTrace & trace, const FrequencySpec & spec) {
    if (trace.num_tokens == 0) {
        throw empty_input_error("calibrate on empty trace");
    }
    if (trace.head_dim != spec.head_dim) {
        throw invalid_dimension_error("trace head_dim " + std::to_string(trace.head_dim) +
                                      " != spec head_dim " + std::to_string(spec.head_dim));
    }
    const std::size_t num_bands = spec.num_bands();
    const std::size_t group = trace.group_size();

    // K-side statistics once per k-head, shared across the GQA group.
    std::vector<std::vector<BandSideStats>> k_stats(trace.num_k_heads);
    for (std::size_t h = 0; h < trace.num_k_heads; ++h) {
        k_stats[h].resize(num_bands);
        for (std::size_t f = 0; f < num_bands; ++f) {
            k_stats[h][f] = band_side_stats(trace.k, trace.num_tokens, trace.num_k_heads,
                                            trace.head_dim, h, f);
        }
    }

    Calibration calib;
    calib.spec = spec;
    calib.num_q_heads = trace.num_q_heads;
    calib.num_k_heads = trace.num_k_heads;
    calib.heads.resize(trace.num_q_heads);
    for (std::size_t g = 0; g < trace.num_q_heads; ++g) {
        HeadStats & head = calib.heads[g];
        head.q_head_index = g;
        head.bands.resize(num_bands);
        const std::size_t paired_k = g / group;
        for (std::size_t f = 0; f < num_bands; ++f) {
            const BandSideStats qs = band_side_stats(trace.q, trace.num_tokens, trace.num_q_heads,
                                                     trace.head_dim, g, f);
            const BandSideStats & ks = k_stats[paired_k][f];
            head.bands[f] = {qs.mean, qs.mean_norm, ks.mean, ks.mean_norm, qs.mrl, ks.mrl};
        }

        // whole-vector MRL over the flattened d-dimensional q
        std::vector<double> mean_full(trace.head_dim, 0.0);
        for (std::size_t i = 0; i < trace.head_dim; ++i) {
            mean_full[i] = pairwise_sum(0, trace.num_tokens, [&](std::size_t t) {
                return double(trace.q[(t * trace.num_q_heads + g) * trace.head_dim + i]);
            }) / double(trace.num_tokens);
        }
        const double mean_norm_full = pairwise_sum(0, trace.num_tokens, [&](std::size_t t) {
            double acc = 0.0;
            for (std::size_t i = 0; i < trace.head_dim; ++i) {
                const double v = double(trace.q[(t * trace.num_q_heads + g) * trace.head_dim + i]);
                acc += v * v;
            }
            return std::sqrt(acc);
        }) / double(trace.num_tokens);
        double norm_of_mean = 0.0;
        for (double v : mean_full) {
            norm_of_mean += v * v;
        }
        norm_of_mean = std::sqrt(norm_of_mean);
        head.mrl_full = mean_norm_full == 0.0 ? 0.0 : std::min(norm_of_mean / mean_norm_full, 1.0);
    }
    return calib;
}

std::vector<std::size_t> dominant_bands(const HeadStats & stats, std::size_t top_k) {
    if (top_k < 1) {
        throw invalid_argument_error("top_k must be >= 1");
    }
    top_k = std::min(top_k, stats.bands.size());
    std::vector<std::size_t> order(stats.bands.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ca = stats.bands[a].mean_norm_q * stats.bands[a].mean_norm_k;
        const double cb = stats.bands[b].mean_norm_q * stats.bands[b].mean_norm_k;
        if (ca != cb) {
            return ca > cb;
        }
        return a < b;
    });
    order.resize(top_k);
    return order;
}

std::string calibration_to_json(const Calibration & calib) {
    nlohmann::json doc;
    doc["frequency_spec"] = {
        {"head_dim", calib.spec.head_dim},
        {"theta", calib.spec.theta},
        {"frequencies", calib.spec.frequencies},
    };
    doc["num_q_heads"] = calib.num_q_heads;
    doc["num_k_heads"] = calib.num_k_heads;
    doc["heads"] = nlohmann::json::array();
    for (const HeadStats & head : calib.heads) {
        nlohmann::json bands = nlohmann::json::array();
        for (const BandStats & b : head.bands) {
            bands.push_back({
                {"mean_q", {b.mean_q.re, b.mean_q.im}},
                {"mean_norm_q", b.mean_norm_q},
                {"mean_k", {b.mean_k.re, b.mean_k.im}},
                {"mean_norm_k", b.mean_norm_k},
                {"mrl_q", b.mrl_q},
                {"mrl_k", b.mrl_k},
            });
        }
        doc["heads"].push_back({
            {"q_head_index", head.q_head_index},
            {"bands", std::move(bands)},
            {"mrl_full", head.mrl_full},
        });
    }
    return doc.dump(2);
}

Calibration calibration_from_json(const std::string & text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception & e) {
        throw format_error(std::string("stats JSON parse failure: ") + e.what());
    }
    try {
        Calibration calib;
        calib.spec.head_dim = doc.at("frequency_spec").at("head_dim").get<std::size_t>();
        calib.spec.theta = doc.at("frequency_spec").at("theta").get<double>();
        calib.spec.frequencies = doc.at("frequency_spec").at("frequencies").get<std::vector<double>>();
        calib.num_q_heads = doc.at("num_q_heads").get<std::size_t>();
        calib.num_k_heads = doc.at("num_k_heads").get<std::size_t>();
        for (const auto & h : doc.at("heads")) {
            HeadStats head;
            head.q_head_index = h.at("q_head_index").get<std::size_t>();
            head.mrl_full = h.at("mrl_full").get<double>();
            for (const auto & b : h.at("bands")) {
                BandStats band;
                band.mean_q = {b.at("mean_q")[0].get<double>(), b.at("mean_q")[1].get<double>()};
                band.mean_norm_q = b.at("mean_norm_q").get<double>();
                band.mean_k = {b.at("mean_k")[0].get<double>(), b.at("mean_k")[1].get<double>()};
                band.mean_norm_k = b.at("mean_norm_k").get<double>();
                band.mrl_q = b.at("mrl_q").get<double>();
                band.mrl_k = b.at("mrl_k").get<double>();
                head.bands.push_back(band);
            }
            calib.heads.push_back(std::move(head));
        }
        return calib;
    } catch (const nlohmann::json::exception & e) {
        throw format_error(std::string("stats JSON missing field: ") + e.what());
    }
}

} // namespace triattn
