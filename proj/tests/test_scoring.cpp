#include <cmath>

#include "doctest.h"
#include "test_helpers.hpp"
#include "triattn/error.hpp"
#include "triattn/scoring.hpp"
#include "triattn/synth.hpp"

using namespace triattn;
using triattn::testing::random_head_vector;
using triattn::testing::rel_err;

namespace {

HeadStats random_stats(SplitMixStream & rng, std::size_t head_dim) {
    HeadStats head;
    head.bands.resize(head_dim / 2);
    for (auto & b : head.bands) {
        b.mean_q = {2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
        // mean norm must dominate the center norm (triangle inequality)
        b.mean_norm_q = b.mean_q.norm() * (1.0 + rng.uniform());
        b.mean_k = {2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
        b.mean_norm_k = b.mean_k.norm() * (1.0 + rng.uniform());
        b.mrl_q = b.mean_norm_q == 0.0 ? 0.0 : b.mean_q.norm() / b.mean_norm_q;
    }
    return head;
}

} // namespace

TEST_CASE("default offsets are the 17-element geometric ladder") {
    const auto offsets = make_geometric_offsets();
    REQUIRE(offsets.size() == 17);
    CHECK(offsets.offsets.front() == 1);
    CHECK(offsets.offsets.back() == 65536);
    for (std::size_t i = 1; i < offsets.size(); ++i) {
        CHECK(offsets.offsets[i] == 2 * offsets.offsets[i - 1]);
    }
}

TEST_CASE("linear offsets") {
    const auto offsets = make_linear_offsets(1, 65536, 17);
    REQUIRE(offsets.size() == 17);
    CHECK(offsets.offsets.front() == 1);
    CHECK(offsets.offsets.back() == 65536);
    for (std::size_t i = 1; i < offsets.size(); ++i) {
        CHECK(offsets.offsets[i] > offsets.offsets[i - 1]);
    }
    CHECK_THROWS_AS((void)make_linear_offsets(5, 2, 3), invalid_argument_error);
}

TEST_CASE("score_trig aligned key at delta zero is the amplitude sum") {
    SplitMixStream rng(51);
    const auto spec = make_frequency_spec(8);
    const auto stats = random_stats(rng, 8);
    HeadVector kv;
    kv.bands.resize(4);
    for (std::size_t f = 0; f < 4; ++f) {
        kv.bands[f] = stats.bands[f].mean_q;  // aligned with the Q center
    }
    const auto key = KeyRecord::make(kv, 0);
    double expected = 0.0;
    for (std::size_t f = 0; f < 4; ++f) {
        expected += stats.bands[f].mean_q.norm() * key.per_band_norms[f];
    }
    CHECK(score_trig(key, 0.0, stats, spec) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero key scores zero everywhere") {
    SplitMixStream rng(52);
    const auto spec = make_frequency_spec(8);
    const auto stats = random_stats(rng, 8);
    HeadVector zero;
    zero.bands.resize(4);
    const auto key = KeyRecord::make(zero, 0);
    CHECK(score_trig(key, 3.0, stats, spec) == 0.0);
    CHECK(score_norm_base(key, stats) == 0.0);
    CHECK(score_norm(key, stats) == 0.0);
    CHECK(score_combined(key, 3.0, stats, spec) == 0.0);
}

TEST_CASE("score_trig equals logit_bands with the center as a literal query") {
    SplitMixStream rng(53);
    const auto spec = make_frequency_spec(16);
    for (int i = 0; i < 100; ++i) {
        const auto stats = random_stats(rng, 16);
        const auto key = KeyRecord::make(random_head_vector(rng, 16), 0);
        const std::uint64_t p_k = rng.below(10000);
        const std::uint64_t delta = rng.below(100000);

        HeadVector center;
        center.bands.resize(8);
        for (std::size_t f = 0; f < 8; ++f) {
            center.bands[f] = stats.bands[f].mean_q;
        }
        const double oracle = logit_bands(center, p_k + delta, key.vector, p_k, spec);
        CHECK(rel_err(score_trig(key, double(delta), stats, spec), oracle) < 1e-9);
    }
}

TEST_CASE("score_norm_base is linear in the key") {
    SplitMixStream rng(54);
    const auto spec = make_frequency_spec(8);
    const auto stats = random_stats(rng, 8);
    auto v = random_head_vector(rng, 8);
    const auto key = KeyRecord::make(v, 0);

    double naive = 0.0;
    for (std::size_t f = 0; f < 4; ++f) {
        naive += stats.bands[f].mean_norm_q * v.bands[f].norm();
    }
    CHECK(rel_err(score_norm_base(key, stats), naive) < 1e-12);

    const double c = 3.25;
    for (auto & b : v.bands) {
        b.re *= c;
        b.im *= c;
    }
    const auto scaled = KeyRecord::make(v, 0);
    CHECK(rel_err(score_norm_base(scaled, stats), c * naive) < 1e-12);
}

TEST_CASE("score_norm: weighted form equals subtracted form") {
    SplitMixStream rng(55);
    for (int i = 0; i < 200; ++i) {
        const auto stats = random_stats(rng, 8);
        const auto key = KeyRecord::make(random_head_vector(rng, 8), 0);
        double subtracted = 0.0;
        for (std::size_t f = 0; f < 4; ++f) {
            subtracted += (stats.bands[f].mean_norm_q - stats.bands[f].mean_q.norm()) *
                          key.per_band_norms[f];
        }
        CHECK(std::fabs(score_norm(key, stats) - subtracted) < 1e-10);
    }
}

TEST_CASE("score_norm limits") {
    SplitMixStream rng(56);
    auto stats = random_stats(rng, 8);
    const auto key = KeyRecord::make(random_head_vector(rng, 8), 0);

    for (auto & b : stats.bands) {
        b.mrl_q = 1.0;
    }
    CHECK(score_norm(key, stats) == 0.0);

    for (auto & b : stats.bands) {
        b.mrl_q = 0.0;
    }
    CHECK(score_norm(key, stats) == score_norm_base(key, stats));
}

TEST_CASE("score_combined is the exact sum of its parts") {
    SplitMixStream rng(57);
    const auto spec = make_frequency_spec(8);
    for (int i = 0; i < 100; ++i) {
        const auto stats = random_stats(rng, 8);
        const auto key = KeyRecord::make(random_head_vector(rng, 8), 0);
        const double delta = double(rng.below(10000));
        CHECK(score_combined(key, delta, stats, spec) ==
              score_trig(key, delta, stats, spec) + score_norm(key, stats));
    }
}

TEST_CASE("score_combined equals score_trig when all R_f are 1") {
    SplitMixStream rng(58);
    const auto spec = make_frequency_spec(8);
    auto stats = random_stats(rng, 8);
    for (auto & b : stats.bands) {
        b.mrl_q = 1.0;
    }
    const auto key = KeyRecord::make(random_head_vector(rng, 8), 0);
    CHECK(score_combined(key, 5.0, stats, spec) == score_trig(key, 5.0, stats, spec));
}

TEST_CASE("singleton offset set reduces to the combined score") {
    SplitMixStream rng(59);
    const auto spec = make_frequency_spec(8);
    const auto stats = random_stats(rng, 8);
    const auto key = KeyRecord::make(random_head_vector(rng, 8), 10);
    OffsetSet single;
    single.offsets = {7};
    CHECK(score_averaged(key, 25, stats, spec, single) ==
          score_combined(key, double(25 - 10 + 7), stats, spec));
}

TEST_CASE("score_averaged equals an explicit-loop oracle") {
    SplitMixStream rng(60);
    const auto spec = make_frequency_spec(8);
    const auto offsets = make_geometric_offsets();
    for (int i = 0; i < 50; ++i) {
        const auto stats = random_stats(rng, 8);
        const std::uint64_t p_k = rng.below(5000);
        const std::uint64_t p_q = p_k + rng.below(5000);
        const auto key = KeyRecord::make(random_head_vector(rng, 8), p_k);

        double acc = 0.0;
        for (auto off : offsets.offsets) {
            acc += score_combined(key, double(p_q - p_k + off), stats, spec);
        }
        CHECK(rel_err(score_averaged(key, p_q, stats, spec, offsets), acc / 17.0) < 1e-12);
    }
}

TEST_CASE("evaluation count equals the offset-set size exactly") {
    SplitMixStream rng(61);
    const auto spec = make_frequency_spec(8);
    const auto stats = random_stats(rng, 8);
    const auto key = KeyRecord::make(random_head_vector(rng, 8), 0);
    for (std::size_t n : {1u, 5u, 17u}) {
        OffsetSet offsets;
        for (std::size_t i = 0; i < n; ++i) {
            offsets.offsets.push_back(i + 1);
        }
        std::size_t count = 0;
        (void)score_averaged(key, 100, stats, spec, offsets, &count);
        CHECK(count == n);
    }
}

TEST_CASE("positive homogeneity of all scores under key scaling") {
    SplitMixStream rng(62);
    const auto spec = make_frequency_spec(8);
    const auto offsets = make_geometric_offsets();
    for (int i = 0; i < 100; ++i) {
        const auto stats = random_stats(rng, 8);
        auto v = random_head_vector(rng, 8);
        const auto key = KeyRecord::make(v, 3);
        const double c = 0.1 + 5.0 * rng.uniform();
        for (auto & b : v.bands) {
            b.re *= c;
            b.im *= c;
        }
        const auto scaled = KeyRecord::make(v, 3);
        const double delta = double(rng.below(1000));
        CHECK(rel_err(score_trig(scaled, delta, stats, spec),
                      c * score_trig(key, delta, stats, spec)) < 1e-10);
        CHECK(rel_err(score_norm(scaled, stats), c * score_norm(key, stats)) < 1e-10);
        CHECK(rel_err(score_combined(scaled, delta, stats, spec),
                      c * score_combined(key, delta, stats, spec)) < 1e-10);
        CHECK(rel_err(score_averaged(scaled, 50, stats, spec, offsets),
                      c * score_averaged(key, 50, stats, spec, offsets)) < 1e-10);
    }
}

TEST_CASE("score_averaged causality") {
    SplitMixStream rng(63);
    const auto spec = make_frequency_spec(8);
    const auto stats = random_stats(rng, 8);
    const auto key = KeyRecord::make(random_head_vector(rng, 8), 100);
    CHECK_THROWS_AS((void)score_averaged(key, 50, stats, spec, make_geometric_offsets()),
                    causality_error);
}

TEST_CASE("KeyRecord caches per-band norms") {
    SplitMixStream rng(64);
    const auto v = random_head_vector(rng, 8);
    const auto key = KeyRecord::make(v, 0);
    REQUIRE(key.per_band_norms.size() == 4);
    for (std::size_t f = 0; f < 4; ++f) {
        CHECK(std::fabs(key.per_band_norms[f] - v.bands[f].norm()) < 1e-12);
    }
}
