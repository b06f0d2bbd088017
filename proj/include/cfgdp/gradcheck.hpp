// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

#include "cfgdp/linalg.hpp"

namespace cfgdp {

struct GradCheckReport {
    std::size_t n_params = 0;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    bool pass = true;
};

// Compares an analytic gradient against central finite differences of loss_fn,
// coordinate by coordinate. Relative error uses max(|a|, |fd|, floor) as the
// denominator so near-zero coordinates do not dominate.
GradCheckReport grad_check(const Vec& params, const std::function<double(const Vec&)>& loss_fn,
                           const Vec& analytic_grad, double tolerance, double h = 1e-5,
                           double denom_floor = 1e-4);

}  // namespace cfgdp
