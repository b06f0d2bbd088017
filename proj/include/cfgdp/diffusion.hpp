// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cfgdp/linalg.hpp"
#include "cfgdp/schedule.hpp"

namespace cfgdp {

struct GuidanceConfig {
    double lambda_max = 1.10;
    double s_t0 = 1.0;  // expected near-completion environment step
};

// sqrt(abar_k) x0 + sqrt(1 - abar_k) eps; k = 0 returns x0 unchanged.
Vec forward_diffuse(const NoiseSchedule& schedule, const Vec& x0, int k, const Vec& noise);

// Ancestral reverse update at step k given a noise prediction and z ~ N(0, I)
// (z must be zero at k = 1).
Vec ddpm_reverse_step(const NoiseSchedule& schedule, const Vec& x_k, int k, const Vec& eps_hat,
                      const Vec& z);

// Deterministic implicit update from step k to k_prev (eta = 0).
Vec ddim_step(const NoiseSchedule& schedule, const Vec& eps_hat, const Vec& x_k, int k,
              int k_prev);

// lambda * eps_cond + (1 - lambda) * eps_uncond
Vec cfg_combine(const Vec& eps_cond, const Vec& eps_uncond, double lambda);

// lambda_max * sigmoid(s_t - s_t0)
double lambda_at(const GuidanceConfig& guidance, double s_t);

}  // namespace cfgdp
