#include <cstring>
#include <numbers>

#include "doctest.h"
#include "test_helpers.hpp"
#include "triattn/error.hpp"
#include "triattn/stats.hpp"
#include "triattn/synth.hpp"

using namespace triattn;
using triattn::testing::rel_err;

namespace {

QkTrace constant_trace(std::size_t tokens, std::vector<float> qvec, std::vector<float> kvec) {
    QkTrace t;
    t.num_tokens = tokens;
    t.num_q_heads = 1;
    t.num_k_heads = 1;
    t.head_dim = qvec.size();
    t.positions.resize(tokens);
    for (std::size_t i = 0; i < tokens; ++i) {
        t.positions[i] = i;
    }
    for (std::size_t i = 0; i < tokens; ++i) {
        t.q.insert(t.q.end(), qvec.begin(), qvec.end());
        t.k.insert(t.k.end(), kvec.begin(), kvec.end());
    }
    return t;
}

} // namespace

TEST_CASE("smallest GQA trace layout round-trips") {
    QkTrace t;
    t.num_tokens = 2;
    t.num_q_heads = 2;
    t.num_k_heads = 1;
    t.head_dim = 2;
    t.positions = {0, 1};
    t.q = {1, 2, 3, 4, 5, 6, 7, 8};  // 2 tokens x 2 heads x 2 dims
    t.k = {9, 10, 11, 12};           // 2 tokens x 1 head x 2 dims
    const auto bytes = write_trace(t);
    const auto loaded = load_trace(bytes);
    CHECK(loaded.group_size() == 2);
    CHECK(loaded.q == t.q);
    CHECK(loaded.k == t.k);
    CHECK(loaded.positions == t.positions);
    CHECK(write_trace(loaded) == bytes);
}

TEST_CASE("explicit positions round-trip byte-identical") {
    QkTrace t;
    t.num_tokens = 3;
    t.num_q_heads = 1;
    t.num_k_heads = 1;
    t.head_dim = 2;
    t.explicit_positions = true;
    t.positions = {5, 9, 100};
    t.q = {1, 2, 3, 4, 5, 6};
    t.k = {7, 8, 9, 10, 11, 12};
    const auto bytes = write_trace(t);
    CHECK(write_trace(load_trace(bytes)) == bytes);
}

TEST_CASE("trace format errors") {
    QkTrace t = constant_trace(2, {1, 0}, {0, 1});
    auto bytes = write_trace(t);

    auto bad_magic = bytes;
    std::memcpy(bad_magic.data(), "XXXX", 4);
    CHECK_THROWS_AS((void)load_trace(bad_magic), format_error);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_AS((void)load_trace(truncated), length_error);

    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_AS((void)load_trace(padded), length_error);

    // inconsistent header: claim more tokens than the payload carries
    auto bad_header = bytes;
    const std::uint32_t big = 100;
    std::memcpy(bad_header.data() + 4, &big, 4);
    CHECK_THROWS_AS((void)load_trace(bad_header), length_error);
}

TEST_CASE("calibrate: identical vectors give mrl 1") {
    const auto t = constant_trace(7, {3, 4, 0.5, -1}, {1, 0, 0, 2});
    const auto spec = make_frequency_spec(4);
    const auto calib = calibrate(t, spec);
    REQUIRE(calib.heads.size() == 1);
    const auto & head = calib.heads[0];
    CHECK(head.bands[0].mean_q.re == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(head.bands[0].mean_q.im == doctest::Approx(4.0).epsilon(1e-12));
    for (const auto & b : head.bands) {
        CHECK(b.mrl_q == 1.0);
        CHECK(b.mrl_k == 1.0);
    }
    CHECK(head.mrl_full == 1.0);
}

TEST_CASE("calibrate: antipodal band vectors give mrl 0") {
    QkTrace t;
    t.num_tokens = 2;
    t.num_q_heads = 1;
    t.num_k_heads = 1;
    t.head_dim = 2;
    t.positions = {0, 1};
    t.q = {1, 0, -1, 0};
    t.k = {0, 1, 0, -1};
    const auto calib = calibrate(t, make_frequency_spec(2));
    CHECK(calib.heads[0].bands[0].mrl_q == 0.0);
    CHECK(calib.heads[0].bands[0].mrl_k == 0.0);
    CHECK(calib.heads[0].bands[0].mean_q.norm() == 0.0);
}

TEST_CASE("calibrate errors") {
    QkTrace empty;
    empty.num_q_heads = 1;
    empty.num_k_heads = 1;
    empty.head_dim = 2;
    CHECK_THROWS_AS((void)calibrate(empty, make_frequency_spec(2)), empty_input_error);

    const auto t = constant_trace(2, {1, 0}, {0, 1});
    CHECK_THROWS_AS((void)calibrate(t, make_frequency_spec(4)), invalid_dimension_error);
}

TEST_CASE("mean_resultant_length basics") {
    std::vector<BandVector> same = {{1, 0}, {1, 0}, {1, 0}};
    CHECK(mean_resultant_length(same) == 1.0);

    std::vector<BandVector> opposed = {{1, 0}, {-1, 0}};
    CHECK(mean_resultant_length(opposed) == 0.0);

    std::vector<BandVector> cross = {{2, 0}, {0, 2}, {-2, 0}, {0, -2}};
    CHECK(mean_resultant_length(cross) == 0.0);

    CHECK_THROWS_AS((void)mean_resultant_length(std::vector<BandVector>{}), empty_input_error);
}

TEST_CASE("mrl scale and rotation invariance") {
    SplitMixStream rng(21);
    std::vector<BandVector> samples(64);
    for (auto & s : samples) {
        s = {2 * rng.uniform() - 1 + 0.4, 2 * rng.uniform() - 1};
    }
    const double base = mean_resultant_length(samples);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);

    auto scaled = samples;
    for (auto & s : scaled) {
        s.re *= 37.5;
        s.im *= 37.5;
    }
    CHECK(std::fabs(mean_resultant_length(scaled) - base) < 1e-12);

    auto rotated = samples;
    for (auto & s : rotated) {
        s = rotate_band(s, 1.234);
    }
    CHECK(std::fabs(mean_resultant_length(rotated) - base) < 1e-10);
}

TEST_CASE("calibrate rotation equivariance of mean_q") {
    const auto spec = SynthHeadSpec::uniform(4, 5.0, 0.1, 31);
    const auto trace = generate_trace(spec, 256, 1, 1);
    const auto calib = calibrate(trace, make_frequency_spec(4));

    const double angle = 0.77;
    QkTrace rotated = trace;
    for (std::size_t t = 0; t < trace.num_tokens; ++t) {
        for (std::size_t f = 0; f < 2; ++f) {
            BandVector b{double(trace.q[t * 4 + 2 * f]), double(trace.q[t * 4 + 2 * f + 1])};
            b = rotate_band(b, angle);
            rotated.q[t * 4 + 2 * f] = float(b.re);
            rotated.q[t * 4 + 2 * f + 1] = float(b.im);
        }
    }
    const auto calib2 = calibrate(rotated, make_frequency_spec(4));
    for (std::size_t f = 0; f < 2; ++f) {
        // f32 storage of the rotated samples caps the achievable agreement
        CHECK(std::fabs(calib2.heads[0].bands[f].mrl_q - calib.heads[0].bands[f].mrl_q) < 1e-6);
        const auto expected = rotate_band(calib.heads[0].bands[f].mean_q, angle);
        CHECK(std::fabs(calib2.heads[0].bands[f].mean_q.re - expected.re) < 1e-6);
        CHECK(std::fabs(calib2.heads[0].bands[f].mean_q.im - expected.im) < 1e-6);
    }
}

TEST_CASE("calibrate is invariant to token order") {
    const auto spec = SynthHeadSpec::uniform(8, 3.0, 0.2, 77);
    const auto trace = generate_trace(spec, 128, 2, 1);
    QkTrace reversed = trace;
    const std::size_t qrow = trace.num_q_heads * trace.head_dim;
    const std::size_t krow = trace.num_k_heads * trace.head_dim;
    for (std::size_t t = 0; t < trace.num_tokens; ++t) {
        const std::size_t src = trace.num_tokens - 1 - t;
        std::copy_n(trace.q.begin() + std::ptrdiff_t(src * qrow), qrow,
                    reversed.q.begin() + std::ptrdiff_t(t * qrow));
        std::copy_n(trace.k.begin() + std::ptrdiff_t(src * krow), krow,
                    reversed.k.begin() + std::ptrdiff_t(t * krow));
    }
    const auto a = calibrate(trace, make_frequency_spec(8));
    const auto b = calibrate(reversed, make_frequency_spec(8));
    for (std::size_t g = 0; g < a.heads.size(); ++g) {
        for (std::size_t f = 0; f < a.heads[g].bands.size(); ++f) {
            CHECK(rel_err(a.heads[g].bands[f].mean_norm_q, b.heads[g].bands[f].mean_norm_q) < 1e-12);
            CHECK(std::fabs(a.heads[g].bands[f].mrl_q - b.heads[g].bands[f].mrl_q) < 1e-12);
        }
    }
}

TEST_CASE("calibrate agrees with a naive two-pass oracle") {
    const auto spec = SynthHeadSpec::uniform(4, 50.0, 0.1, 42);
    const auto trace = generate_trace(spec, 2048, 1, 1);
    const auto calib = calibrate(trace, make_frequency_spec(4));

    for (std::size_t f = 0; f < 2; ++f) {
        long double sum_re = 0;
        long double sum_im = 0;
        long double sum_norm = 0;
        for (std::size_t t = 0; t < trace.num_tokens; ++t) {
            const long double re = trace.q[t * 4 + 2 * f];
            const long double im = trace.q[t * 4 + 2 * f + 1];
            sum_re += re;
            sum_im += im;
            sum_norm += sqrtl(re * re + im * im);
        }
        const double mrl = double(sqrtl(sum_re * sum_re + sum_im * sum_im) / sum_norm);
        CHECK(std::fabs(calib.heads[0].bands[f].mrl_q - mrl) < 1e-10);
        CHECK(rel_err(calib.heads[0].bands[f].mean_norm_q,
                      double(sum_norm / trace.num_tokens)) < 1e-10);
    }
}

TEST_CASE("dominant_bands ranking and tie-breaks") {
    HeadStats head;
    head.bands.resize(3);
    // uniform contributions: tie broken by lower index
    for (auto & b : head.bands) {
        b.mean_norm_q = 1.0;
        b.mean_norm_k = 1.0;
    }
    CHECK(dominant_bands(head, 2) == std::vector<std::size_t>{0, 1});

    head.bands[0].mean_norm_q = 0.1;
    head.bands[1].mean_norm_q = 5.0;
    head.bands[2].mean_norm_q = 0.2;
    CHECK(dominant_bands(head, 1) == std::vector<std::size_t>{1});

    // top_k beyond d/2 clamps
    CHECK(dominant_bands(head, 10).size() == 3);
    CHECK_THROWS_AS((void)dominant_bands(head, 0), invalid_argument_error);
}

TEST_CASE("dominant_bands finds injected energy") {
    SynthHeadSpec spec = SynthHeadSpec::uniform(16, 20.0, 0.05, 5);
    for (std::size_t f = 0; f < 8; ++f) {
        spec.q_center_mag[f] = 0.2;
        spec.k_center_mag[f] = 0.2;
    }
    spec.q_center_mag[3] = 4.0;
    spec.k_center_mag[3] = 4.0;
    spec.q_center_mag[7] = 3.0;
    spec.k_center_mag[7] = 3.0;
    const auto trace = generate_trace(spec, 512, 1, 1);
    const auto calib = calibrate(trace, make_frequency_spec(16));
    const auto top = dominant_bands(calib.heads[0], 2);
    CHECK(top == std::vector<std::size_t>{3, 7});
}

TEST_CASE("stats JSON round-trip") {
    const auto spec = SynthHeadSpec::uniform(8, 10.0, 0.1, 9);
    const auto trace = generate_trace(spec, 64, 4, 2);
    const auto calib = calibrate(trace, make_frequency_spec(8));
    const auto loaded = calibration_from_json(calibration_to_json(calib));
    REQUIRE(loaded.heads.size() == calib.heads.size());
    CHECK(loaded.spec.frequencies == calib.spec.frequencies);
    for (std::size_t g = 0; g < calib.heads.size(); ++g) {
        CHECK(loaded.heads[g].mrl_full == calib.heads[g].mrl_full);
        for (std::size_t f = 0; f < calib.heads[g].bands.size(); ++f) {
            CHECK(loaded.heads[g].bands[f].mean_q.re == calib.heads[g].bands[f].mean_q.re);
            CHECK(loaded.heads[g].bands[f].mean_norm_k == calib.heads[g].bands[f].mean_norm_k);
            CHECK(loaded.heads[g].bands[f].mrl_q == calib.heads[g].bands[f].mrl_q);
        }
    }
    CHECK_THROWS_AS((void)calibration_from_json("not json"), format_error);
    CHECK_THROWS_AS((void)calibration_from_json("{}"), format_error);
}
