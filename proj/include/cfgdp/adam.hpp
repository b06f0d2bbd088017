// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cfgdp/linalg.hpp"

namespace cfgdp {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Vec first_moment;
    Vec second_moment;
    long step_count = 0;
    AdamConfig cfg;

    explicit AdamState(std::size_t n_params, AdamConfig c = {})
        : first_moment(n_params, 0.0), second_moment(n_params, 0.0), cfg(c) {}
};

// Bias-corrected Adam update over flat parameter/gradient vectors.
// Throws NumericError on non-finite gradients; params are left untouched.
void adam_step(AdamState& state, Vec& params, const Vec& grads);

}  // namespace cfgdp
