// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/evalsuite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "cfgdp/errors.hpp"

namespace cfgdp {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::kCfgDp: return "CFG_DP";
        case Variant::kNoCfg: return "NO_CFG";
        case Variant::kNoStep: return "NO_STEP";
        case Variant::kDpBaseline: return "DP_BASELINE";
    }
    return "CFG_DP";
}

std::vector<std::string> variant_names() { return {"CFG_DP", "NO_CFG", "NO_STEP", "DP_BASELINE"}; }

Variant variant_from_name(const std::string& name) {
    if (name == "CFG_DP") return Variant::kCfgDp;
    if (name == "NO_CFG") return Variant::kNoCfg;
    if (name == "NO_STEP") return Variant::kNoStep;
    if (name == "DP_BASELINE") return Variant::kDpBaseline;
    throw ConfigError("unknown variant: " + name + " (valid: CFG_DP, NO_CFG, NO_STEP, DP_BASELINE)");
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w)
        workers.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : workers) t.join();
}

namespace {

ObservationWindow live_window(const std::vector<Frame>& frames, int s_t) {
    ObservationWindow w;
    for (int h = 0; h < kObsHorizon; ++h) {
        int src = std::max(0, static_cast<int>(frames.size()) - kObsHorizon + h);
        const Frame& f = frames[static_cast<std::size_t>(src)];
        int base = h * kFrameDim;
        for (int i = 0; i < kEnvFeatDim; ++i)
            w.features[static_cast<std::size_t>(base + i)] = f.env[static_cast<std::size_t>(i)];
        for (int i = 0; i < kJointFeatDim; ++i)
            w.features[static_cast<std::size_t>(base + kEnvFeatDim + i)] =
                f.joints[static_cast<std::size_t>(i)];
    }
    w.s_t = static_cast<double>(s_t);
    return w;
}

}  // namespace

RolloutRecord rollout(const Checkpoint& ckpt, Variant variant, const EpisodeConfig& cfg,
                      std::uint64_t seed) {
    NoiseSchedule schedule = ckpt.schedule();
    DdimPlan plan = ckpt.plan();
    const NormStats& stats = ckpt.stats;

    bool use_guidance = (variant == Variant::kCfgDp || variant == Variant::kNoStep);
    bool conditioned = (variant == Variant::kCfgDp || variant == Variant::kNoCfg);

    RolloutRecord rec;
    rec.seed = seed;
    EnvState state = env_reset(seed);
    rec.trajectory.states.push_back(state);
    std::vector<Frame> frames;
    frames.push_back(frame_from_state(state));

    std::uint64_t chunk_index = 0;
    bool terminated = false;
    while (!terminated && state.step_count < cfg.max_steps) {
        double s_t = static_cast<double>(state.step_count);
        double lambda = use_guidance ? lambda_at(ckpt.guidance, s_t) : 0.0;
        ObservationWindow obs = live_window(frames, state.step_count);
        normalize_window(obs, stats);
        ActionChunk chunk;
        try {
            chunk = sample_chunk_lambda(ckpt.net, schedule, plan, obs, lambda, conditioned,
                                        stats.s_mean, stats,
                                        hash_combine(seed, hash_combine(fnv1a("chunk"), chunk_index)));
        } catch (const NumericError&) {
            rec.failed_numeric = true;
            break;
        }
        ++chunk_index;
        for (int h = 0; h < kActionHorizon && state.step_count < cfg.max_steps; ++h) {
            Action a;
            for (int i = 0; i < kActionDim; ++i)
                a.values[static_cast<std::size_t>(i)] =
                    chunk.values[static_cast<std::size_t>(h * kActionDim + i)];
            try {
                state = env_step(state, a);
            } catch (const NumericError&) {
                rec.failed_numeric = true;
                terminated = true;
                break;
            }
            rec.trajectory.actions.push_back(a);
            rec.trajectory.states.push_back(state);
            rec.lambdas.push_back(lambda);
            frames.push_back(frame_from_state(state));
            if (in_end_zone(state, cfg)) {
                terminated = true;
                break;
            }
        }
    }

    Verdict v = is_success(rec.trajectory, cfg);
    rec.termination_step = v.termination_step;
    rec.cycles_done = v.cycles_done;
    rec.repetitive = v.repetitive;
    rec.completion_time = v.completion_time;
    rec.success = v.success && !rec.failed_numeric;
    return rec;
}

std::vector<RolloutRecord> rollout_batch(const Checkpoint& ckpt, Variant variant,
                                         const EpisodeConfig& cfg, std::uint64_t seed_base,
                                         int n, int jobs) {
    std::vector<RolloutRecord> records(static_cast<std::size_t>(n));
    parallel_for(n, jobs, [&](int i) {
        records[static_cast<std::size_t>(i)] =
            rollout(ckpt, variant, cfg, seed_base + static_cast<std::uint64_t>(i));
    });
    // already ordered by seed
    return records;
}

MetricsSummary summarize(const std::string& variant, const std::vector<RolloutRecord>& records) {
    if (records.empty()) throw ConfigError("summarize: no records");
    MetricsSummary m;
    m.variant = variant;
    m.n = static_cast<int>(records.size());
    double succ = 0.0, rep = 0.0, time = 0.0;
    for (const auto& r : records) {
        succ += r.success ? 1.0 : 0.0;
        rep += r.repetitive;
        time += r.completion_time;
    }
    m.success_rate = 100.0 * succ / m.n;
    m.repetitive_mean = rep / m.n;
    m.completion_time_mean = time / m.n;
    return m;
}

TerminationStats termination_distribution(const std::vector<RolloutRecord>& records,
                                          double s_mean, double stroke_length, int n_bins) {
    if (records.size() < 30)
        throw ConfigError("termination_distribution: need at least 30 records");
    TerminationStats ts;
    double sum = 0.0;
    int lo = records.front().termination_step, hi = lo;
    for (const auto& r : records) {
        sum += r.termination_step;
        lo = std::min(lo, r.termination_step);
        hi = std::max(hi, r.termination_step);
    }
    double n = static_cast<double>(records.size());
    ts.mean = sum / n;
    double var = 0.0;
    double tail_cut = s_mean + 2.0 * stroke_length;
    double tail = 0.0;
    for (const auto& r : records) {
        double d = r.termination_step - ts.mean;
        var += d * d;
        if (r.termination_step > tail_cut) tail += 1.0;
    }
    ts.stddev = std::sqrt(var / n);
    ts.right_tail_mass = tail / n;
    ts.bin_lo = lo;
    ts.bin_width = std::max(1.0, std::ceil((hi - lo + 1) / static_cast<double>(n_bins)));
    ts.bin_counts.assign(static_cast<std::size_t>(n_bins), 0);
    for (const auto& r : records) {
        int b = static_cast<int>((r.termination_step - lo) / ts.bin_width);
        b = std::min(b, n_bins - 1);
        ++ts.bin_counts[static_cast<std::size_t>(b)];
    }
    return ts;
}

std::vector<EntropyPoint> conditional_entropy_curve(const ChunkSampler& sampler,
                                                    const Demonstration& probe,
                                                    const NormStats& stats, int mc_samples,
                                                    int n_bins, int stride, std::uint64_t seed,
                                                    int jobs) {
    if (mc_samples < 2 || n_bins < 2 || stride < 1)
        throw ConfigError("conditional_entropy_curve: bad parameters");
    std::vector<int> timesteps;
    for (int t = 0; t < probe.length(); t += stride) timesteps.push_back(t);
    std::vector<EntropyPoint> curve(timesteps.size());

    const double bin_lo = -3.0, bin_hi = 3.0;
    const double inv_width = n_bins / (bin_hi - bin_lo);

    parallel_for(static_cast<int>(timesteps.size()), jobs, [&](int ti) {
        int t = timesteps[static_cast<std::size_t>(ti)];
        ObservationWindow obs = make_window(probe, t);
        normalize_window(obs, stats);
        std::vector<std::vector<int>> hist(kActionDim, std::vector<int>(static_cast<std::size_t>(n_bins), 0));
        for (int m = 0; m < mc_samples; ++m) {
            std::uint64_t draw_seed = hash_combine(
                seed, hash_combine(static_cast<std::uint64_t>(t),
                                   hash_combine(fnv1a("mc"), static_cast<std::uint64_t>(m))));
            ActionChunk chunk = sampler(obs, static_cast<double>(t), draw_seed);
            for (int d = 0; d < kActionDim; ++d) {
                double raw = chunk.values[static_cast<std::size_t>(d)];  // first action row
                double z = (raw - stats.act_mean[static_cast<std::size_t>(d)]) /
                           stats.act_std[static_cast<std::size_t>(d)];
                int b = static_cast<int>(std::floor((z - bin_lo) * inv_width));
                b = std::max(0, std::min(n_bins - 1, b));
                ++hist[static_cast<std::size_t>(d)][static_cast<std::size_t>(b)];
            }
        }
        double entropy = 0.0;
        double ln_bins = std::log(static_cast<double>(n_bins));
        for (int d = 0; d < kActionDim; ++d) {
            double h = 0.0;
            int occupied = 0;
            for (int b = 0; b < n_bins; ++b) {
                int c = hist[static_cast<std::size_t>(d)][static_cast<std::size_t>(b)];
                if (c == 0) continue;
                ++occupied;
                double p = static_cast<double>(c) / mc_samples;
                h -= p * std::log(p);
            }
            h += static_cast<double>(occupied - 1) / (2.0 * mc_samples);  // Miller-Madow
            h = std::max(0.0, std::min(ln_bins, h));
            entropy += h;
        }
        curve[static_cast<std::size_t>(ti)] = {t, entropy / kActionDim, mc_samples};
    });
    return curve;
}

std::vector<EntropyPoint> conditional_entropy(const Checkpoint& ckpt, Variant variant,
                                              const Demonstration& probe, int mc_samples,
                                              int n_bins, int stride, std::uint64_t seed,
                                              int jobs) {
    NoiseSchedule schedule = ckpt.schedule();
    DdimPlan plan = ckpt.plan();
    bool use_guidance = (variant == Variant::kCfgDp || variant == Variant::kNoStep);
    bool conditioned = (variant == Variant::kCfgDp || variant == Variant::kNoCfg);
    ChunkSampler sampler = [&](const ObservationWindow& obs, double s_t, std::uint64_t draw_seed) {
        double lambda = use_guidance ? lambda_at(ckpt.guidance, s_t) : 0.0;
        return sample_chunk_lambda(ckpt.net, schedule, plan, obs, lambda, conditioned,
                                   ckpt.stats.s_mean, ckpt.stats, draw_seed);
    };
    return conditional_entropy_curve(sampler, probe, ckpt.stats, mc_samples, n_bins, stride, seed,
                                     jobs);
}

std::vector<SweepRow> sweep_lambda_max(const Checkpoint& ckpt, const std::vector<double>& values,
                                       const std::vector<Demonstration>& val_set, int trials,
                                       int pairs_per_trial, std::uint64_t seed, int jobs) {
    if (val_set.empty()) throw ConfigError("sweep_lambda_max: empty validation set");
    NoiseSchedule schedule = ckpt.schedule();
    DdimPlan plan = ckpt.plan();

    struct Pair {
        ObservationWindow obs;
        ActionChunk truth;  // normalized
        double s_t;
        std::uint64_t noise_seed;
    };
    std::vector<std::vector<Pair>> trial_pairs(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::derive(seed, "sweep_pairs", static_cast<std::uint64_t>(trial));
        for (int p = 0; p < pairs_per_trial; ++p) {
            const Demonstration& demo =
                val_set[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(val_set.size()) - 1))];
            int t = static_cast<int>(rng.uniform_int(0, demo.length() - 1));
            Pair pr;
            pr.obs = make_window(demo, t);
            normalize_window(pr.obs, ckpt.stats);
            pr.truth = make_chunk(demo, t);
            normalize_chunk(pr.truth, ckpt.stats);
            pr.s_t = static_cast<double>(t);
            pr.noise_seed = hash_combine(seed, hash_combine(fnv1a("sweep_x"),
                                                            static_cast<std::uint64_t>(trial) * 100003 +
                                                                static_cast<std::uint64_t>(p)));
            trial_pairs[static_cast<std::size_t>(trial)].push_back(std::move(pr));
        }
    }

    std::vector<SweepRow> rows(values.size() * static_cast<std::size_t>(trials));
    int n_tasks = static_cast<int>(values.size()) * trials;
    parallel_for(n_tasks, jobs, [&](int task) {
        int vi = task / trials;
        int trial = task % trials;
        GuidanceConfig guidance{values[static_cast<std::size_t>(vi)], ckpt.stats.s_mean};
        double total = 0.0;
        for (const Pair& pr : trial_pairs[static_cast<std::size_t>(trial)]) {
            ActionChunk pred = sample_chunk(ckpt.net, schedule, plan, pr.obs, guidance, pr.s_t,
                                            true, ckpt.stats.s_mean, ckpt.stats, pr.noise_seed,
                                            /*denormalize=*/false);
            double mse = 0.0;
            for (int j = 0; j < kChunkDim; ++j) {
                double d = pred.values[static_cast<std::size_t>(j)] -
                           pr.truth.values[static_cast<std::size_t>(j)];
                mse += d * d;
            }
            total += mse / kChunkDim;
        }
        rows[static_cast<std::size_t>(task)] = {values[static_cast<std::size_t>(vi)], trial,
                                                total / pairs_per_trial};
    });
    return rows;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsSummary>& rows) {
    auto out = open_csv(path);
    out << "variant,success_rate,repetitive_mean,completion_time_mean,n\n";
    for (const auto& r : rows)
        out << r.variant << "," << fmt(r.success_rate) << "," << fmt(r.repetitive_mean) << ","
            << fmt(r.completion_time_mean) << "," << r.n << "\n";
}

void write_termination_csv(const std::string& path,
                           const std::vector<std::pair<std::string, std::vector<RolloutRecord>>>&
                               per_variant) {
    auto out = open_csv(path);
    out << "variant,seed,termination_step\n";
    for (const auto& [variant, records] : per_variant)
        for (const auto& r : records)
            out << variant << "," << r.seed << "," << r.termination_step << "\n";
}

void write_entropy_csv(const std::string& path,
                       const std::vector<std::pair<std::string, std::vector<EntropyPoint>>>&
                           per_variant) {
    auto out = open_csv(path);
    out << "variant,timestep,entropy_nats\n";
    for (const auto& [variant, curve] : per_variant)
        for (const auto& p : curve) out << variant << "," << p.timestep << "," << fmt(p.entropy) << "\n";
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    auto out = open_csv(path);
    out << "lambda_max,trial,mse\n";
    for (const auto& r : rows)
        out << fmt(r.lambda_max) << "," << r.trial << "," << fmt(r.mse) << "\n";
}

}  // namespace cfgdp
