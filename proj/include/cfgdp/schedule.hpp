// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cfgdp/linalg.hpp"

namespace cfgdp {

// Coefficients of the ancestral reverse update for one diffusion step k:
//   x_{k-1} = alpha * (x_k - gamma * eps_hat) + sigma * z
struct ReverseCoeffs {
    double alpha = 0.0;
    double gamma = 0.0;
    double sigma = 0.0;
};

struct NoiseSchedule {
    int K = 0;
    Vec betas;                          // [K], betas[i-1] is beta_i
    Vec alpha_bars;                     // [K+1], alpha_bars[0] = 1
    std::vector<ReverseCoeffs> reverse; // [K], reverse[k-1] applies at step k

    double beta(int k) const { return betas[static_cast<std::size_t>(k - 1)]; }
    double alpha_bar(int k) const { return alpha_bars[static_cast<std::size_t>(k)]; }
};

// Linear beta schedule. Requires 0 < beta_start <= beta_end < 1 and K >= 1.
NoiseSchedule make_noise_schedule(int K, double beta_start, double beta_end);

struct DdimPlan {
    int inference_steps = 10;
    std::vector<int> step_indices;  // strictly decreasing, subset of {K..1}
    double eta = 0.0;
};

// Uniformly spaced deterministic plan: K, K-K/n, ..., K/n; predecessor of the
// last index is 0.
DdimPlan make_ddim_plan(const NoiseSchedule& schedule, int inference_steps = 10);

}  // namespace cfgdp
