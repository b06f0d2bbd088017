// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "cfgdp/dataset.hpp"
#include "cfgdp/errors.hpp"

using namespace cfgdp;

namespace {

Demonstration synthetic_demo(int length, double scale) {
    Demonstration d;
    for (int t = 0; t < length; ++t) {
        Frame f;
        f.env = {scale * 0.01 * t, -scale * 0.02 * t};
        for (int i = 0; i < kJointFeatDim; ++i)
            f.joints[static_cast<std::size_t>(i)] = scale * (0.1 * i + 0.001 * t);
        f.timestep = t;
        d.frames.push_back(f);
        std::array<double, kActionDim> a{};
        for (int i = 0; i < kActionDim; ++i)
            a[static_cast<std::size_t>(i)] = scale * (0.05 * i - 0.002 * t);
        d.actions.push_back(a);
    }
    return d;
}

bool demos_equal(const Demonstration& a, const Demonstration& b) {
    if (a.length() != b.length()) return false;
    for (int t = 0; t < a.length(); ++t) {
        const auto& fa = a.frames[static_cast<std::size_t>(t)];
        const auto& fb = b.frames[static_cast<std::size_t>(t)];
        if (fa.env != fb.env || fa.joints != fb.joints || fa.timestep != fb.timestep) return false;
        if (a.actions[static_cast<std::size_t>(t)] != b.actions[static_cast<std::size_t>(t)])
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("generate_demos: deterministic and all successful") {
    EpisodeConfig cfg;
    auto a = generate_demos(5, 100, cfg);
    auto b = generate_demos(5, 100, cfg);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(demos_equal(a[i], b[i]));
    CHECK_THROWS_AS(generate_demos(0, 0, cfg), ConfigError);
}

TEST_CASE("split: deterministic, disjoint, exhaustive") {
    EpisodeConfig cfg;
    auto demos = generate_demos(20, 500, cfg);
    auto [train, val] = split_demos(demos, 0.8, 7);
    CHECK(train.size() == 16);
    CHECK(val.size() == 4);
    auto [train2, val2] = split_demos(demos, 0.8, 7);
    for (std::size_t i = 0; i < train.size(); ++i) CHECK(demos_equal(train[i], train2[i]));

    // every input demo appears exactly once across the two partitions
    std::multiset<int> in_lengths, out_lengths;
    for (const auto& d : demos) in_lengths.insert(d.length());
    for (const auto& d : train) out_lengths.insert(d.length());
    for (const auto& d : val) out_lengths.insert(d.length());
    CHECK(in_lengths == out_lengths);

    CHECK_THROWS_AS(split_demos(demos, 0.0, 1), ConfigError);
}

TEST_CASE("compute_norm_stats: matches an independent streaming oracle") {
    EpisodeConfig cfg;
    auto demos = generate_demos(6, 900, cfg);
    NormStats st = compute_norm_stats(demos);

    // two-pass oracle over flattened frame features
    for (int dim = 0; dim < kFrameDim; ++dim) {
        double sum = 0.0;
        long n = 0;
        for (const auto& d : demos)
            for (const auto& f : d.frames) {
                double v = dim < kEnvFeatDim ? f.env[static_cast<std::size_t>(dim)]
                                             : f.joints[static_cast<std::size_t>(dim - kEnvFeatDim)];
                sum += v;
                ++n;
            }
        double mean = sum / n;
        double ss = 0.0;
        for (const auto& d : demos)
            for (const auto& f : d.frames) {
                double v = dim < kEnvFeatDim ? f.env[static_cast<std::size_t>(dim)]
                                             : f.joints[static_cast<std::size_t>(dim - kEnvFeatDim)];
                ss += (v - mean) * (v - mean);
            }
        CHECK(st.obs_mean[static_cast<std::size_t>(dim)] == doctest::Approx(mean).epsilon(1e-10));
        CHECK(st.obs_std[static_cast<std::size_t>(dim)] ==
              doctest::Approx(std::sqrt(ss / n)).epsilon(1e-10));
    }
}

TEST_CASE("compute_norm_stats: s_mean is the mean demo length; constant dims hit the floor") {
    std::vector<Demonstration> demos = {synthetic_demo(100, 1.0), synthetic_demo(200, 1.0)};
    NormStats st = compute_norm_stats(demos);
    CHECK(st.s_mean == 150.0);

    Demonstration constant = synthetic_demo(50, 0.0);  // all zeros
    NormStats st2 = compute_norm_stats({constant});
    for (double s : st2.act_std) CHECK(s == kStdFloor);
}

TEST_CASE("make_window: duplicates the first frame at t=0, s_t tracks the frame index") {
    Demonstration d = synthetic_demo(30, 1.0);
    ObservationWindow w0 = make_window(d, 0);
    for (int i = 0; i < kFrameDim; ++i)
        CHECK(w0.features[static_cast<std::size_t>(i)] ==
              w0.features[static_cast<std::size_t>(kFrameDim + i)]);
    CHECK(w0.s_t == 0.0);
    ObservationWindow w7 = make_window(d, 7);
    CHECK(w7.s_t == 7.0);
    // newest frame occupies the second slot
    CHECK(w7.features[kFrameDim] == d.frames[7].env[0]);
    CHECK(w7.features[0] == d.frames[6].env[0]);
}

TEST_CASE("make_chunk: tail padding repeats the final action") {
    Demonstration d = synthetic_demo(20, 1.0);
    ActionChunk c = make_chunk(d, 19);
    for (int h = 1; h < kActionHorizon; ++h)
        for (int i = 0; i < kActionDim; ++i)
            CHECK(c.values[static_cast<std::size_t>(h * kActionDim + i)] ==
                  c.values[static_cast<std::size_t>(i)]);
    // unpadded prefix appears verbatim at offset t
    ActionChunk mid = make_chunk(d, 5);
    for (int h = 0; h < kActionHorizon; ++h)
        for (int i = 0; i < kActionDim; ++i)
            CHECK(mid.values[static_cast<std::size_t>(h * kActionDim + i)] ==
                  d.actions[static_cast<std::size_t>(5 + h)][static_cast<std::size_t>(i)]);
}

TEST_CASE("normalize/denormalize chunk is an identity within 1e-10") {
    Demonstration d = synthetic_demo(40, 2.0);
    NormStats st = compute_norm_stats({d});
    ActionChunk c = make_chunk(d, 10);
    ActionChunk orig = c;
    normalize_chunk(c, st);
    denormalize_chunk(c, st);
    for (int i = 0; i < kChunkDim; ++i)
        CHECK(c.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(orig.values[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("null_condition is idempotent and leaves features untouched") {
    Demonstration d = synthetic_demo(10, 1.0);
    ObservationWindow w = make_window(d, 4);
    ObservationWindow n1 = null_condition(w);
    ObservationWindow n2 = null_condition(n1);
    CHECK(n1.condition_nulled);
    CHECK(n2.condition_nulled);
    CHECK(n1.features == w.features);
    CHECK(n1.s_t == w.s_t);
}

TEST_CASE("sample_batch: shapes, k range, padding rules") {
    EpisodeConfig cfg;
    auto demos = generate_demos(3, 40, cfg);
    NormStats st = compute_norm_stats(demos);
    Rng rng(5);
    auto batch = sample_batch(demos, st, 64, 50, rng);
    CHECK(batch.size() == 64);
    for (const auto& item : batch) {
        CHECK(item.k >= 1);
        CHECK(item.k <= 50);
        CHECK(item.obs.normalized);
        CHECK(item.chunk.normalized);
        CHECK(item.obs.s_t >= 0.0);
    }
}

TEST_CASE("dataset file: round trip, corruption, empty list") {
    EpisodeConfig cfg;
    auto demos = generate_demos(3, 777, cfg);
    NormStats st = compute_norm_stats(demos);
    const std::string path = "test_dataset_roundtrip.bin";
    save_dataset(path, demos, st);
    auto [loaded, st2] = load_dataset(path);
    REQUIRE(loaded.size() == demos.size());
    CHECK(st2.s_mean == doctest::Approx(st.s_mean).epsilon(1e-12));
    // float32 on disk: first reload is approximate, a second round trip is exact
    save_dataset(path, loaded, st2);
    auto [loaded2, st3] = load_dataset(path);
    for (std::size_t i = 0; i < loaded.size(); ++i) CHECK(demos_equal(loaded[i], loaded2[i]));
    for (int t = 0; t < demos[0].length(); ++t)
        for (int i = 0; i < kActionDim; ++i)
            CHECK(loaded[0].actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] ==
                  doctest::Approx(demos[0].actions[static_cast<std::size_t>(t)]
                                                  [static_cast<std::size_t>(i)])
                      .epsilon(1e-6));

    // corrupt one header byte
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        f.put('X');
    }
    CHECK_THROWS_AS(load_dataset(path), ParseError);

    // empty demo list is a valid file
    std::vector<Demonstration> none;
    save_dataset(path, none, st);
    auto [empty_demos, st4] = load_dataset(path);
    CHECK(empty_demos.empty());
    std::remove(path.c_str());
    std::remove("missing_file_does_not_exist.bin");
    CHECK_THROWS(load_dataset("missing_file_does_not_exist.bin"));
}
