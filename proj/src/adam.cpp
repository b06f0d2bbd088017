// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "cfgdp/errors.hpp"

namespace cfgdp {

void adam_step(AdamState& state, Vec& params, const Vec& grads) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    if (state.cfg.lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
    if (!all_finite(grads)) throw NumericError("adam_step: non-finite gradient");

    const double b1 = state.cfg.beta1;
    const double b2 = state.cfg.beta2;
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        double mhat = state.first_moment[i] / bc1;
        double vhat = state.second_moment[i] / bc2;
        params[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
}

}  // namespace cfgdp
