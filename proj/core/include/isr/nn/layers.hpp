/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/nn/layers.hpp
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

#include <Eigen/Core>

#include "isr/nn/tensor.hpp"
#include "isr/rng.hpp"

namespace isr::nn {

/*
 * Batches are Eigen matrices with one sample per row. All backward passes
 * are exact analytic Jacobian products, verified against central finite
 * differences in the test suite.
 */

struct DenseLayer {
    Eigen::MatrixXd W; // out x in
    Eigen::VectorXd b; // out

    int in_dim() const { return static_cast<int>(W.cols()); }
    int out_dim() const { return static_cast<int>(W.rows()); }
};

/// Y = X W^T + b (rows are samples).
Eigen::MatrixXd dense_apply(const DenseLayer& layer, const Eigen::MatrixXd& x);

struct DenseGrads {
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dW;
    Eigen::VectorXd db;
};

DenseGrads dense_grad(const DenseLayer& layer, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& dy);

/**
 * 2D cross-correlation (no kernel flip) with zero padding. Kernels are packed
 * as out_ch x (in_ch * k * k), row index layout ic*k*k + ky*k + kx.
 */
struct ConvLayer {
    int in_ch = 1;
    int out_ch = 1;
    int ksize = 3;  // odd
    int stride = 1; // >= 1
    int pad = 0;
    Eigen::MatrixXd kernels; // out_ch x (in_ch*k*k)
    Eigen::VectorXd bias;    // out_ch

    void validate() const;
    int out_extent(int in_extent) const {
        return (in_extent + 2 * pad - ksize) / stride + 1;
    }
};

Tensor conv2d_apply(const ConvLayer& layer, const Tensor& x);

struct ConvGrads {
    Tensor dx;
    Eigen::MatrixXd dkernels;
    Eigen::VectorXd dbias;
};

ConvGrads conv2d_grad(const ConvLayer& layer, const Tensor& x, const Tensor& dy);

/// max(0, x); the subgradient at exactly 0 is taken as 0.
Eigen::MatrixXd relu_apply(const Eigen::MatrixXd& x);
Tensor relu_apply(const Tensor& x);
Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& pre_activation, const Eigen::MatrixXd& dy);
Tensor relu_grad(const Tensor& pre_activation, const Tensor& dy);

enum class DropoutMode { train, eval };

struct DropoutResult {
    Eigen::MatrixXd output;
    Eigen::MatrixXd mask; // per-element multiplier: 0 or 1/(1-ratio); all ones in eval mode
};

/**
 * Inverted dropout: in training mode each unit is zeroed with probability
 * `ratio` and survivors are scaled by 1/(1-ratio); eval mode is the identity.
 * Mask draws consume the rng row by row.
 */
DropoutResult dropout_apply(const Eigen::MatrixXd& x, double ratio, DropoutMode mode,
                            Rng& rng);

} // namespace isr::nn
