// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/schedule.hpp"

#include <cmath>

#include "cfgdp/errors.hpp"

namespace cfgdp {

NoiseSchedule make_noise_schedule(int K, double beta_start, double beta_end) {
    if (K < 1) throw ConfigError("make_noise_schedule: K must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("make_noise_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.K = K;
    s.betas.resize(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        double t = (K == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(K - 1);
        s.betas[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * t;
    }
    s.alpha_bars.resize(static_cast<std::size_t>(K) + 1);
    s.alpha_bars[0] = 1.0;
    for (int k = 1; k <= K; ++k)
        s.alpha_bars[static_cast<std::size_t>(k)] =
            s.alpha_bars[static_cast<std::size_t>(k - 1)] * (1.0 - s.beta(k));

    s.reverse.resize(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        double beta_k = s.beta(k);
        double abar_k = s.alpha_bar(k);
        double abar_prev = s.alpha_bar(k - 1);
        ReverseCoeffs& rc = s.reverse[static_cast<std::size_t>(k - 1)];
        rc.alpha = 1.0 / std::sqrt(1.0 - beta_k);
        rc.gamma = beta_k / std::sqrt(1.0 - abar_k);
        rc.sigma = (k == 1) ? 0.0 : std::sqrt(beta_k * (1.0 - abar_prev) / (1.0 - abar_k));
    }
    return s;
}

DdimPlan make_ddim_plan(const NoiseSchedule& schedule, int inference_steps) {
    if (inference_steps < 1 || inference_steps > schedule.K)
        throw ConfigError("make_ddim_plan: inference_steps must be in [1, K]");
    DdimPlan plan;
    plan.inference_steps = inference_steps;
    plan.step_indices.reserve(static_cast<std::size_t>(inference_steps));
    for (int i = 0; i < inference_steps; ++i) {
        int k = static_cast<int>(
            std::llround(static_cast<double>(schedule.K) * (inference_steps - i) / inference_steps));
        if (!plan.step_indices.empty() && k >= plan.step_indices.back())
            k = plan.step_indices.back() - 1;
        if (k < 1) throw ConfigError("make_ddim_plan: plan does not fit schedule");
        plan.step_indices.push_back(k);
    }
    return plan;
}

}  // namespace cfgdp
