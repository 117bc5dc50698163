/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/nn/gradient_check.hpp
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
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace isr::nn {

/// Mutable view of one named parameter tensor (flat storage).
struct ParamView {
    std::string name;
    double* data = nullptr;
    Eigen::Index size = 0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    Eigen::Index worst_index = -1;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

/**
 * Compares analytic gradients against central finite differences for every
 * entry of every parameter: the loss callback is re-evaluated at p +/- eps
 * and the relative error is |a - n| / max(|a|, |n|, 1e-12). Parameters are
 * restored to their original values afterwards. eps must be > 0.
 */
GradCheckReport gradient_check(const std::vector<ParamView>& params,
                               const std::vector<Eigen::VectorXd>& analytic_grads,
                               const std::function<double()>& loss_fn, double eps);

} // namespace isr::nn
