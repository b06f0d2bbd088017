// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace cfgdp {

GradCheckReport grad_check(const Vec& params, const std::function<double(const Vec&)>& loss_fn,
                           const Vec& analytic_grad, double tolerance, double h,
                           double denom_floor) {
    if (params.size() != analytic_grad.size())
        throw std::invalid_argument("grad_check: gradient size mismatch");
    GradCheckReport report;
    report.n_params = params.size();
    Vec probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        probe[i] = params[i] + h;
        double lp = loss_fn(probe);
        probe[i] = params[i] - h;
        double lm = loss_fn(probe);
        probe[i] = params[i];
        double fd = (lp - lm) / (2.0 * h);
        double a = analytic_grad[i];
        double denom = std::max({std::fabs(a), std::fabs(fd), denom_floor});
        double rel = std::fabs(a - fd) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

}  // namespace cfgdp
