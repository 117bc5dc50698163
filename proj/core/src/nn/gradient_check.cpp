/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/nn/gradient_check.cpp
 *
 * Copyright 2026 The isr authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "isr/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>

#include "isr/errors.hpp"

namespace isr::nn {

GradCheckReport gradient_check(const std::vector<ParamView>& params,
                               const std::vector<Eigen::VectorXd>& analytic_grads,
                               const std::function<double()>& loss_fn, double eps) {
    if (!(eps > 0.0)) {
        throw ValidationError("gradient_check: eps must be > 0");
    }
    if (params.size() != analytic_grads.size()) {
        throw ValidationError("gradient_check: params/grads count mismatch");
    }

    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const ParamView& view = params[p];
        const Eigen::VectorXd& grad = analytic_grads[p];
        if (grad.size() != view.size) {
            throw ValidationError("gradient_check: gradient size mismatch for '" + view.name +
                                  "'");
        }
        for (Eigen::Index i = 0; i < view.size; ++i) {
            const double saved = view.data[i];
            view.data[i] = saved + eps;
            const double lp = loss_fn();
            view.data[i] = saved - eps;
            const double lm = loss_fn();
            view.data[i] = saved;

            const double numeric = (lp - lm) / (2.0 * eps);
            const double analytic = grad[i];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-12});
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = view.name;
                report.worst_index = i;
                report.analytic_at_worst = analytic;
                report.numeric_at_worst = numeric;
            }
        }
    }
    return report;
}

} // namespace isr::nn
