// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cfgdp/errors.hpp"
#include "cfgdp/evalsuite.hpp"

using namespace cfgdp;

namespace {

NormStats unit_stats(double s_mean) {
    NormStats st;
    st.obs_mean.fill(0.0);
    st.obs_std.fill(1.0);
    st.act_mean.fill(0.0);
    st.act_std.fill(1.0);
    st.s_mean = s_mean;
    return st;
}

Demonstration flat_demo(int length) {
    Demonstration d;
    for (int t = 0; t < length; ++t) {
        Frame f;
        f.env = {0.0, 0.0};
        f.joints.fill(0.1);
        f.timestep = t;
        d.frames.push_back(f);
        d.actions.push_back({});
    }
    return d;
}

Checkpoint tiny_checkpoint() {
    Checkpoint ckpt;
    Rng rng(77);
    ckpt.net = make_policy_net(rng, 32, 2);
    ckpt.stats = unit_stats(170.0);
    ckpt.guidance = GuidanceConfig{1.10, 170.0};
    ckpt.train_config.hidden_width = 32;
    ckpt.train_config.hidden_layers = 2;
    return ckpt;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("variant names round trip; bad name lists the options") {
    for (const auto& name : variant_names())
        CHECK(variant_name(variant_from_name(name)) == name);
    CHECK_THROWS_AS(variant_from_name("SOMETHING"), ConfigError);
    try {
        variant_from_name("SOMETHING");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("CFG_DP") != std::string::npos);
        CHECK(msg.find("DP_BASELINE") != std::string::npos);
    }
}

TEST_CASE("parallel_for visits every index exactly once") {
    for (int jobs : {1, 4, 100}) {
        std::vector<std::atomic<int>> hits(37);
        for (auto& h : hits) h = 0;
        parallel_for(37, jobs, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
        for (const auto& h : hits) CHECK(h.load() == 1);
    }
}

TEST_CASE("summarize: hand-built records") {
    std::vector<RolloutRecord> recs(3);
    recs[0].success = true;
    recs[0].repetitive = 0;
    recs[0].completion_time = 16.0;
    recs[1].success = true;
    recs[1].repetitive = 1;
    recs[1].completion_time = 20.0;
    recs[2].success = false;
    recs[2].repetitive = 2;
    recs[2].completion_time = 40.0;
    MetricsSummary m = summarize("CFG_DP", recs);
    CHECK(m.n == 3);
    CHECK(m.success_rate == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(m.repetitive_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.completion_time_mean == doctest::Approx(76.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(summarize("CFG_DP", {}), ConfigError);
}

TEST_CASE("termination_distribution: degenerate and shifted samples") {
    std::vector<RolloutRecord> recs(30);
    for (auto& r : recs) r.termination_step = 170;
    TerminationStats ts = termination_distribution(recs, 100.0, 30.0, 20);
    CHECK(ts.mean == 170.0);
    CHECK(ts.stddev == 0.0);
    CHECK(ts.right_tail_mass == 1.0);  // cut at 100 + 60 = 160, all beyond
    int total = 0;
    for (int c : ts.bin_counts) total += c;
    CHECK(total == 30);

    // half at 150, half at 250 with cut at 230
    for (std::size_t i = 0; i < recs.size(); ++i)
        recs[i].termination_step = (i % 2 == 0) ? 150 : 250;
    TerminationStats ts2 = termination_distribution(recs, 170.0, 30.0, 20);
    CHECK(ts2.mean == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(ts2.stddev == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(ts2.right_tail_mass == doctest::Approx(0.5).epsilon(1e-12));

    recs.resize(29);
    CHECK_THROWS_AS(termination_distribution(recs, 100.0), ConfigError);
}

TEST_CASE("entropy: a constant sampler scores exactly zero") {
    NormStats st = unit_stats(100.0);
    Demonstration probe = flat_demo(12);
    ChunkSampler constant = [](const ObservationWindow&, double, std::uint64_t) {
        ActionChunk c;
        c.values.fill(0.25);
        return c;
    };
    auto curve = conditional_entropy_curve(constant, probe, st, 100, 100, 1, 0);
    REQUIRE(curve.size() == 12);
    for (const auto& p : curve) {
        CHECK(p.entropy == 0.0);
        CHECK(p.n_samples == 100);
    }
}

TEST_CASE("entropy: a two-level sampler scores ln 2 up to the small-sample correction") {
    NormStats st = unit_stats(100.0);
    Demonstration probe = flat_demo(1);
    ChunkSampler two = [](const ObservationWindow&, double, std::uint64_t seed) {
        ActionChunk c;
        c.values.fill(seed % 2 == 0 ? -1.5 : 1.5);
        return c;
    };
    // seeds are hashed, so force an even split by binning parity of a counter
    std::atomic<int> counter{0};
    ChunkSampler alternating = [&](const ObservationWindow& o, double s, std::uint64_t) {
        return two(o, s, static_cast<std::uint64_t>(counter.fetch_add(1)));
    };
    const int n = 500;
    auto curve = conditional_entropy_curve(alternating, probe, st, n, 100, 1, 0, 1);
    double want = std::log(2.0) + 1.0 / (2.0 * n);  // plugin + Miller-Madow on 2 bins
    CHECK(curve[0].entropy == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("entropy: a uniform sampler approaches the bin-count ceiling") {
    NormStats st = unit_stats(100.0);
    Demonstration probe = flat_demo(1);
    ChunkSampler uniform = [](const ObservationWindow&, double, std::uint64_t seed) {
        Rng rng(seed);
        ActionChunk c;
        for (auto& v : c.values) v = rng.uniform(-3.0, 3.0);
        return c;
    };
    auto curve = conditional_entropy_curve(uniform, probe, st, 4000, 100, 1, 5);
    double ln_bins = std::log(100.0);
    CHECK(std::fabs(curve[0].entropy - ln_bins) < 0.05 * ln_bins);
    CHECK(curve[0].entropy <= ln_bins);
}

TEST_CASE("entropy: identical across thread counts") {
    NormStats st = unit_stats(100.0);
    Demonstration probe = flat_demo(20);
    ChunkSampler noisy = [](const ObservationWindow&, double, std::uint64_t seed) {
        Rng rng(seed);
        ActionChunk c;
        for (auto& v : c.values) v = rng.gaussian();
        return c;
    };
    auto a = conditional_entropy_curve(noisy, probe, st, 50, 100, 2, 9, 1);
    auto b = conditional_entropy_curve(noisy, probe, st, 50, 100, 2, 9, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].timestep == b[i].timestep);
        CHECK(a[i].entropy == b[i].entropy);
    }
    CHECK_THROWS_AS(conditional_entropy_curve(noisy, probe, st, 1, 100, 1, 0), ConfigError);
}

TEST_CASE("rollout: terminates within the step budget, record is coherent") {
    Checkpoint ckpt = tiny_checkpoint();
    EpisodeConfig cfg;
    cfg.max_steps = 120;  // untrained net: keep it short
    for (Variant v : {Variant::kCfgDp, Variant::kNoCfg, Variant::kNoStep, Variant::kDpBaseline}) {
        RolloutRecord rec = rollout(ckpt, v, cfg, 3);
        CHECK(rec.trajectory.actions.size() <= static_cast<std::size_t>(cfg.max_steps));
        CHECK(rec.trajectory.states.size() == rec.trajectory.actions.size() + 1);
        CHECK(rec.lambdas.size() == rec.trajectory.actions.size());
        bool guided = (v == Variant::kCfgDp || v == Variant::kNoStep);
        for (double l : rec.lambdas) {
            if (!guided) CHECK(l == 0.0);
            CHECK(l >= 0.0);
            CHECK(l <= ckpt.guidance.lambda_max);
        }
    }
}

TEST_CASE("rollout_batch: seed-ordered and independent of the job count") {
    Checkpoint ckpt = tiny_checkpoint();
    EpisodeConfig cfg;
    cfg.max_steps = 80;
    auto a = rollout_batch(ckpt, Variant::kCfgDp, cfg, 100, 8, 1);
    auto b = rollout_batch(ckpt, Variant::kCfgDp, cfg, 100, 8, 4);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == 100 + i);
        CHECK(a[i].termination_step == b[i].termination_step);
        CHECK(a[i].cycles_done == b[i].cycles_done);
        REQUIRE(a[i].trajectory.actions.size() == b[i].trajectory.actions.size());
        for (std::size_t t = 0; t < a[i].trajectory.actions.size(); ++t)
            CHECK(a[i].trajectory.actions[t].values == b[i].trajectory.actions[t].values);
    }
}

TEST_CASE("rollout: NO_CFG and DP_BASELINE differ only through conditioning") {
    // with lambda forced to zero the conditioned and nulled paths share the
    // same sampler inputs except the step embedding
    Checkpoint ckpt = tiny_checkpoint();
    EpisodeConfig cfg;
    cfg.max_steps = 40;
    RolloutRecord no_cfg = rollout(ckpt, Variant::kNoCfg, cfg, 5);
    RolloutRecord base = rollout(ckpt, Variant::kDpBaseline, cfg, 5);
    for (double l : no_cfg.lambdas) CHECK(l == 0.0);
    for (double l : base.lambdas) CHECK(l == 0.0);
}

TEST_CASE("sweep_lambda_max: shape, determinism, pairing") {
    Checkpoint ckpt = tiny_checkpoint();
    EpisodeConfig cfg;
    auto demos = generate_demos(3, 31337, cfg);
    std::vector<double> values = {0.0, 1.0, 2.0};
    auto a = sweep_lambda_max(ckpt, values, demos, 4, 5, 11, 1);
    auto b = sweep_lambda_max(ckpt, values, demos, 4, 5, 11, 4);
    REQUIRE(a.size() == values.size() * 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].lambda_max == b[i].lambda_max);
        CHECK(a[i].trial == b[i].trial);
        CHECK(a[i].mse == b[i].mse);
        CHECK(std::isfinite(a[i].mse));
        CHECK(a[i].mse >= 0.0);
    }
    CHECK_THROWS_AS(sweep_lambda_max(ckpt, values, {}, 1, 1, 0), ConfigError);
}

TEST_CASE("csv writers: headers and formatting") {
    const std::string m_path = "test_eval_metrics.csv";
    const std::string t_path = "test_eval_term.csv";
    const std::string e_path = "test_eval_entropy.csv";
    const std::string s_path = "test_eval_sweep.csv";

    MetricsSummary m{"CFG_DP", 83.25, 0.3, 24.2, 50};
    write_metrics_csv(m_path, {m});
    std::string metrics = slurp(m_path);
    CHECK(metrics.find("variant,success_rate,repetitive_mean,completion_time_mean,n") == 0);
    CHECK(metrics.find("CFG_DP,83.25,0.3,24.2,50") != std::string::npos);

    RolloutRecord r;
    r.seed = 12;
    r.termination_step = 171;
    write_termination_csv(t_path, {{"NO_CFG", {r}}});
    std::string term = slurp(t_path);
    CHECK(term.find("variant,seed,termination_step") == 0);
    CHECK(term.find("NO_CFG,12,171") != std::string::npos);

    write_entropy_csv(e_path, {{"CFG_DP", {{5, 1.25, 100}}}});
    std::string ent = slurp(e_path);
    CHECK(ent.find("variant,timestep,entropy_nats") == 0);
    CHECK(ent.find("CFG_DP,5,1.25") != std::string::npos);

    write_sweep_csv(s_path, {{1.10, 2, 0.5}});
    std::string sw = slurp(s_path);
    CHECK(sw.find("lambda_max,trial,mse") == 0);
    CHECK(sw.find("1.1,2,0.5") != std::string::npos);

    for (const auto& p : {m_path, t_path, e_path, s_path}) std::remove(p.c_str());
}
