/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/nn/adam.cpp
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
#include "isr/nn/adam.hpp"

#include <cmath>
#include <string>

#include "isr/errors.hpp"

namespace isr::nn {

void adam_step(Eigen::Ref<Eigen::VectorXd> param, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, const AdamConfig& cfg) {
    if (param.size() != grad.size()) {
        throw ValidationError("adam_step: param size " + std::to_string(param.size()) +
                              " != grad size " + std::to_string(grad.size()));
    }
    if (state.m.size() == 0) {
        state.m = Eigen::ArrayXd::Zero(param.size());
        state.v = Eigen::ArrayXd::Zero(param.size());
        state.t = 0;
    } else if (state.m.size() != param.size()) {
        throw ValidationError("adam_step: state size " + std::to_string(state.m.size()) +
                              " != param size " + std::to_string(param.size()));
    }

    if (cfg.weight_decay != 0.0) {
        param.array() -= cfg.lr * cfg.weight_decay * param.array();
    }

    state.t += 1;
    const Eigen::ArrayXd g = grad.array();
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g.square();

    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    param.array() -= cfg.lr * (state.m / bc1) / ((state.v / bc2).sqrt() + cfg.eps);
}

} // namespace isr::nn
