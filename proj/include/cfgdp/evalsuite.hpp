// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cfgdp/env.hpp"
#include "cfgdp/trainer.hpp"

namespace cfgdp {

enum class Variant { kCfgDp, kNoCfg, kNoStep, kDpBaseline };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);  // CFG_DP, NO_CFG, NO_STEP, DP_BASELINE
std::vector<std::string> variant_names();

struct RolloutRecord {
    std::uint64_t seed = 0;
    int termination_step = 0;
    int cycles_done = 0;
    bool success = false;
    int repetitive = 0;
    double completion_time = 0.0;
    bool failed_numeric = false;
    std::vector<double> lambdas;  // guidance factor used at each executed step
    Trajectory trajectory;
};

// Receding-horizon closed loop: replan every kActionHorizon steps, execute the
// full chunk, stop on end-zone entry or max_steps.
RolloutRecord rollout(const Checkpoint& ckpt, Variant variant, const EpisodeConfig& cfg,
                      std::uint64_t seed);

std::vector<RolloutRecord> rollout_batch(const Checkpoint& ckpt, Variant variant,
                                         const EpisodeConfig& cfg, std::uint64_t seed_base,
                                         int n, int jobs = 1);

struct MetricsSummary {
    std::string variant;
    double success_rate = 0.0;  // percent
    double repetitive_mean = 0.0;
    double completion_time_mean = 0.0;
    int n = 0;
};

MetricsSummary summarize(const std::string& variant, const std::vector<RolloutRecord>& records);

struct TerminationStats {
    double mean = 0.0;
    double stddev = 0.0;
    double right_tail_mass = 0.0;  // fraction beyond s_mean + 2 * stroke_length
    double bin_lo = 0.0;
    double bin_width = 0.0;
    std::vector<int> bin_counts;
};

// Requires at least 30 records.
TerminationStats termination_distribution(const std::vector<RolloutRecord>& records,
                                          double s_mean, double stroke_length = 30.0,
                                          int n_bins = 20);

struct EntropyPoint {
    int timestep = 0;
    double entropy = 0.0;  // nats, mean over action dimensions
    int n_samples = 0;
};

using ChunkSampler =
    std::function<ActionChunk(const ObservationWindow& obs_normalized, double s_t,
                              std::uint64_t seed)>;

// Monte-Carlo entropy of the next executed action along a probe trajectory:
// per dimension, first actions are normalized, binned uniformly over
// [-3, 3], and the plugin entropy is Miller-Madow corrected.
std::vector<EntropyPoint> conditional_entropy_curve(const ChunkSampler& sampler,
                                                    const Demonstration& probe,
                                                    const NormStats& stats, int mc_samples,
                                                    int n_bins, int stride, std::uint64_t seed,
                                                    int jobs = 1);

std::vector<EntropyPoint> conditional_entropy(const Checkpoint& ckpt, Variant variant,
                                              const Demonstration& probe, int mc_samples = 100,
                                              int n_bins = 100, int stride = 1,
                                              std::uint64_t seed = 0, int jobs = 1);

struct SweepRow {
    double lambda_max = 0.0;
    int trial = 0;
    double mse = 0.0;  // normalized full-chunk MSE
};

// Paired design: pair selection and initial-noise seeds are shared across all
// lambda_max values within a trial.
std::vector<SweepRow> sweep_lambda_max(const Checkpoint& ckpt, const std::vector<double>& values,
                                       const std::vector<Demonstration>& val_set, int trials = 10,
                                       int pairs_per_trial = 20, std::uint64_t seed = 0,
                                       int jobs = 1);

void write_metrics_csv(const std::string& path, const std::vector<MetricsSummary>& rows);
void write_termination_csv(const std::string& path,
                           const std::vector<std::pair<std::string, std::vector<RolloutRecord>>>&
                               per_variant);
void write_entropy_csv(const std::string& path,
                       const std::vector<std::pair<std::string, std::vector<EntropyPoint>>>&
                           per_variant);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace cfgdp
