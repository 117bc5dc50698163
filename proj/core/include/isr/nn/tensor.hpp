/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/nn/tensor.hpp
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

#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isr/errors.hpp"

namespace isr::nn {

/// Dense row-major tensor; convolution uses the [batch, channels, h, w] layout.
struct Tensor {
    std::vector<int> shape;
    Eigen::VectorXd data; // flat, row-major

    Tensor() = default;
    Tensor(std::vector<int> s, Eigen::VectorXd d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != element_count(shape)) {
            throw ValidationError("Tensor: data length " + std::to_string(data.size()) +
                                  " != shape product " +
                                  std::to_string(element_count(shape)));
        }
    }

    static Tensor zeros(std::vector<int> s) {
        const auto count = element_count(s);
        return Tensor(std::move(s), Eigen::VectorXd::Zero(count));
    }

    static Eigen::Index element_count(const std::vector<int>& s) {
        Eigen::Index p = 1;
        for (int d : s) {
            p *= d;
        }
        return p;
    }

    Eigen::Index size() const { return data.size(); }

    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    /// Flat index for a [batch, channels, h, w] tensor.
    Eigen::Index idx4(int b, int c, int y, int x) const {
        return ((static_cast<Eigen::Index>(b) * dim(1) + c) * dim(2) + y) * dim(3) + x;
    }
};

} // namespace isr::nn
