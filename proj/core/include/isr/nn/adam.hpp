/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/nn/adam.hpp
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

#include <cstdint>

#include <Eigen/Core>

namespace isr::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0; // decoupled: applied directly to the parameter
};

/// First/second moment accumulators for one parameter tensor.
struct AdamState {
    Eigen::ArrayXd m;
    Eigen::ArrayXd v;
    std::int64_t t = 0;
};

/**
 * One optimizer step: decoupled weight decay (p -= lr*wd*p) followed by the
 * bias-corrected Adam update. The state is lazily sized on first use.
 */
void adam_step(Eigen::Ref<Eigen::VectorXd> param, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, const AdamConfig& cfg);

} // namespace isr::nn
