// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "cfgdp/errors.hpp"

namespace cfgdp {

Vec forward_diffuse(const NoiseSchedule& schedule, const Vec& x0, int k, const Vec& noise) {
    if (k < 0 || k > schedule.K)
        throw std::invalid_argument("forward_diffuse: k out of range");
    if (noise.size() != x0.size())
        throw std::invalid_argument("forward_diffuse: noise length mismatch");
    double abar = schedule.alpha_bar(k);
    double a = std::sqrt(abar);
    double b = std::sqrt(1.0 - abar);
    Vec out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * noise[i];
    return out;
}

Vec ddpm_reverse_step(const NoiseSchedule& schedule, const Vec& x_k, int k, const Vec& eps_hat,
                      const Vec& z) {
    if (k < 1 || k > schedule.K)
        throw std::invalid_argument("ddpm_reverse_step: k out of range");
    if (eps_hat.size() != x_k.size() || z.size() != x_k.size())
        throw std::invalid_argument("ddpm_reverse_step: length mismatch");
    const ReverseCoeffs& rc = schedule.reverse[static_cast<std::size_t>(k - 1)];
    Vec out(x_k.size());
    for (std::size_t i = 0; i < x_k.size(); ++i)
        out[i] = rc.alpha * (x_k[i] - rc.gamma * eps_hat[i]) + rc.sigma * z[i];
    return out;
}

Vec ddim_step(const NoiseSchedule& schedule, const Vec& eps_hat, const Vec& x_k, int k,
              int k_prev) {
    if (k < 1 || k > schedule.K || k_prev < 0 || k_prev >= k)
        throw std::invalid_argument("ddim_step: need K >= k > k_prev >= 0");
    if (eps_hat.size() != x_k.size())
        throw std::invalid_argument("ddim_step: length mismatch");
    double abar_k = schedule.alpha_bar(k);
    if (abar_k <= 0.0) throw NumericError("ddim_step: alpha_bar(k) <= 0");
    double abar_prev = schedule.alpha_bar(k_prev);
    double sqrt_abar_k = std::sqrt(abar_k);
    double sqrt_one_minus_k = std::sqrt(1.0 - abar_k);
    double sqrt_abar_prev = std::sqrt(abar_prev);
    double sqrt_one_minus_prev = std::sqrt(1.0 - abar_prev);
    Vec out(x_k.size());
    for (std::size_t i = 0; i < x_k.size(); ++i) {
        double x0_pred = (x_k[i] - sqrt_one_minus_k * eps_hat[i]) / sqrt_abar_k;
        out[i] = sqrt_abar_prev * x0_pred + sqrt_one_minus_prev * eps_hat[i];
    }
    return out;
}

Vec cfg_combine(const Vec& eps_cond, const Vec& eps_uncond, double lambda) {
    if (eps_cond.size() != eps_uncond.size())
        throw std::invalid_argument("cfg_combine: length mismatch");
    Vec out(eps_cond.size());
    for (std::size_t i = 0; i < eps_cond.size(); ++i)
        out[i] = lambda * eps_cond[i] + (1.0 - lambda) * eps_uncond[i];
    return out;
}

double lambda_at(const GuidanceConfig& guidance, double s_t) {
    double x = s_t - guidance.s_t0;
    double sig;
    if (x >= 0.0) {
        sig = 1.0 / (1.0 + std::exp(-x));
    } else {
        double e = std::exp(x);
        sig = e / (1.0 + e);
    }
    return guidance.lambda_max * sig;
}

}  // namespace cfgdp
