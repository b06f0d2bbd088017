// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cfgdp/policy.hpp"

namespace cfgdp {

struct TrainConfig {
    int grad_steps = 20000;  // desk default; paper-scale 60000
    int batch_size = 64;
    double lr = 3e-4;
    double cond_dropout_p = 0.1;  // 0 = purely conditional, 1 = unconditional-only
    // std-dev of Gaussian noise added to normalized window features during
    // training; teaches corrective actions for slightly off-distribution states
    double obs_noise = 0.2;
    std::uint64_t seed = 0;
    int eval_every = 1000;
    int K = 50;
    double beta_start = 1e-4;
    double beta_end = 0.185;  // scaled so alpha_bar(K) < 0.01 at K = 50
    int hidden_width = 256;
    int hidden_layers = 3;
    int inference_steps = 10;
    double lambda_max = 1.10;
};

struct TrainLogRow {
    int step = 0;
    double loss = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    PolicyNet net;
    std::vector<TrainLogRow> log;
    bool aborted_numeric = false;  // NaN loss: net holds the last finite step
    std::string abort_message;
};

// Runs the denoising objective with per-item conditional dropout. Deterministic
// for a fixed config and seed; the dropout mask uses its own derived stream.
TrainResult train(const TrainConfig& config, const std::vector<Demonstration>& train_set,
                  const std::vector<Demonstration>& val_set, const NormStats& stats,
                  const PolicyNet* initial = nullptr);

// Sampled-chunk MSE (normalized units, conditional path, lambda = 1) on a
// deterministic subset of validation pairs.
double validation_chunk_mse(const PolicyNet& net, const NoiseSchedule& schedule,
                            const DdimPlan& plan, const std::vector<Demonstration>& val_set,
                            const NormStats& stats, double s_mean, std::uint64_t seed,
                            int n_pairs = 16);

struct Checkpoint {
    PolicyNet net;
    NormStats stats;
    GuidanceConfig guidance;
    TrainConfig train_config;

    NoiseSchedule schedule() const {
        return make_noise_schedule(train_config.K, train_config.beta_start,
                                   train_config.beta_end);
    }
    DdimPlan plan() const { return make_ddim_plan(schedule(), train_config.inference_steps); }
};

// Manifest at `path` (magic line + JSON) plus float32 weights at `path`.weights.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log);

}  // namespace cfgdp
