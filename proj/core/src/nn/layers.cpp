/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/nn/layers.cpp
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
#include "isr/nn/layers.hpp"

#include <string>

namespace isr::nn {

namespace {

void check_dense_input(const DenseLayer& layer, const Eigen::MatrixXd& x) {
    if (x.cols() != layer.W.cols()) {
        throw ValidationError("dense: input width " + std::to_string(x.cols()) +
                              " != layer in_dim " + std::to_string(layer.W.cols()));
    }
    if (layer.b.size() != layer.W.rows()) {
        throw ValidationError("dense: bias length " + std::to_string(layer.b.size()) +
                              " != layer out_dim " + std::to_string(layer.W.rows()));
    }
}

} // namespace

Eigen::MatrixXd dense_apply(const DenseLayer& layer, const Eigen::MatrixXd& x) {
    check_dense_input(layer, x);
    Eigen::MatrixXd y = x * layer.W.transpose();
    y.rowwise() += layer.b.transpose();
    return y;
}

DenseGrads dense_grad(const DenseLayer& layer, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& dy) {
    check_dense_input(layer, x);
    if (dy.rows() != x.rows() || dy.cols() != layer.W.rows()) {
        throw ValidationError("dense_grad: dy is " + std::to_string(dy.rows()) + "x" +
                              std::to_string(dy.cols()) + ", expected " +
                              std::to_string(x.rows()) + "x" + std::to_string(layer.W.rows()));
    }
    DenseGrads g;
    g.dx = dy * layer.W;
    g.dW = dy.transpose() * x;
    g.db = dy.colwise().sum().transpose();
    return g;
}

void ConvLayer::validate() const {
    if (ksize % 2 != 1 || ksize < 1) {
        throw ValidationError("ConvLayer: kernel size must be odd");
    }
    if (stride < 1) {
        throw ValidationError("ConvLayer: stride must be >= 1");
    }
    if (kernels.rows() != out_ch || kernels.cols() != in_ch * ksize * ksize) {
        throw ValidationError("ConvLayer: kernel matrix must be out_ch x in_ch*k*k");
    }
    if (bias.size() != out_ch) {
        throw ValidationError("ConvLayer: bias length != out_ch");
    }
}

namespace {

void check_conv_input(const ConvLayer& layer, const Tensor& x) {
    layer.validate();
    if (x.shape.size() != 4) {
        throw ValidationError("conv2d: input must be [batch, channels, h, w]");
    }
    if (x.dim(1) != layer.in_ch) {
        throw ValidationError("conv2d: input channels " + std::to_string(x.dim(1)) +
                              " != layer in_ch " + std::to_string(layer.in_ch));
    }
    if (x.dim(2) < layer.ksize || x.dim(3) < layer.ksize) {
        throw ValidationError("conv2d: spatial dims must be >= kernel size");
    }
}

// Unrolls one sample's receptive fields into a (in_ch*k*k) x (ho*wo) matrix.
Eigen::MatrixXd im2col(const ConvLayer& layer, const Tensor& x, int b, int ho, int wo) {
    const int k = layer.ksize;
    const int h = x.dim(2);
    const int w = x.dim(3);
    Eigen::MatrixXd col = Eigen::MatrixXd::Zero(layer.in_ch * k * k,
                                                static_cast<Eigen::Index>(ho) * wo);
    for (int ic = 0; ic < layer.in_ch; ++ic) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const int row = (ic * k + ky) * k + kx;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * layer.stride - layer.pad + ky;
                    if (iy < 0 || iy >= h) {
                        continue;
                    }
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * layer.stride - layer.pad + kx;
                        if (ix < 0 || ix >= w) {
                            continue;
                        }
                        col(row, static_cast<Eigen::Index>(oy) * wo + ox) =
                            x.data[x.idx4(b, ic, iy, ix)];
                    }
                }
            }
        }
    }
    return col;
}

} // namespace

Tensor conv2d_apply(const ConvLayer& layer, const Tensor& x) {
    check_conv_input(layer, x);
    const int batch = x.dim(0);
    const int ho = layer.out_extent(x.dim(2));
    const int wo = layer.out_extent(x.dim(3));
    Tensor y = Tensor::zeros({batch, layer.out_ch, ho, wo});
    for (int b = 0; b < batch; ++b) {
        const Eigen::MatrixXd col = im2col(layer, x, b, ho, wo);
        Eigen::MatrixXd out = layer.kernels * col; // out_ch x (ho*wo)
        out.colwise() += layer.bias;
        for (int oc = 0; oc < layer.out_ch; ++oc) {
            for (Eigen::Index p = 0; p < out.cols(); ++p) {
                y.data[y.idx4(b, oc, static_cast<int>(p) / wo, static_cast<int>(p) % wo)] =
                    out(oc, p);
            }
        }
    }
    return y;
}

ConvGrads conv2d_grad(const ConvLayer& layer, const Tensor& x, const Tensor& dy) {
    check_conv_input(layer, x);
    const int batch = x.dim(0);
    const int ho = layer.out_extent(x.dim(2));
    const int wo = layer.out_extent(x.dim(3));
    if (dy.shape != std::vector<int>{batch, layer.out_ch, ho, wo}) {
        throw ValidationError("conv2d_grad: dy shape mismatch");
    }
    const int k = layer.ksize;
    const int h = x.dim(2);
    const int w = x.dim(3);

    ConvGrads g;
    g.dx = Tensor::zeros(x.shape);
    g.dkernels = Eigen::MatrixXd::Zero(layer.kernels.rows(), layer.kernels.cols());
    g.dbias = Eigen::VectorXd::Zero(layer.out_ch);

    Eigen::MatrixXd dout(layer.out_ch, static_cast<Eigen::Index>(ho) * wo);
    for (int b = 0; b < batch; ++b) {
        for (int oc = 0; oc < layer.out_ch; ++oc) {
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    dout(oc, static_cast<Eigen::Index>(oy) * wo + ox) =
                        dy.data[dy.idx4(b, oc, oy, ox)];
                }
            }
        }
        const Eigen::MatrixXd col = im2col(layer, x, b, ho, wo);
        g.dkernels.noalias() += dout * col.transpose();
        g.dbias += dout.rowwise().sum();

        // col2im: scatter kernel-weighted output grads back onto the input.
        const Eigen::MatrixXd dcol = layer.kernels.transpose() * dout;
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const int row = (ic * k + ky) * k + kx;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * layer.stride - layer.pad + ky;
                        if (iy < 0 || iy >= h) {
                            continue;
                        }
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * layer.stride - layer.pad + kx;
                            if (ix < 0 || ix >= w) {
                                continue;
                            }
                            g.dx.data[g.dx.idx4(b, ic, iy, ix)] +=
                                dcol(row, static_cast<Eigen::Index>(oy) * wo + ox);
                        }
                    }
                }
            }
        }
    }
    return g;
}

Eigen::MatrixXd relu_apply(const Eigen::MatrixXd& x) {
    return x.cwiseMax(0.0);
}

Tensor relu_apply(const Tensor& x) {
    return Tensor(x.shape, x.data.cwiseMax(0.0));
}

Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& pre_activation, const Eigen::MatrixXd& dy) {
    return (pre_activation.array() > 0.0).select(dy, 0.0);
}

Tensor relu_grad(const Tensor& pre_activation, const Tensor& dy) {
    return Tensor(dy.shape, (pre_activation.data.array() > 0.0).select(dy.data, 0.0));
}

DropoutResult dropout_apply(const Eigen::MatrixXd& x, double ratio, DropoutMode mode,
                            Rng& rng) {
    if (!(ratio >= 0.0 && ratio < 1.0)) {
        throw ValidationError("dropout: ratio must be in [0, 1)");
    }
    DropoutResult r;
    if (mode == DropoutMode::eval || ratio == 0.0) {
        r.output = x;
        r.mask = Eigen::MatrixXd::Ones(x.rows(), x.cols());
        return r;
    }
    const double keep_scale = 1.0 / (1.0 - ratio);
    r.mask.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            r.mask(i, j) = rng.uniform() < ratio ? 0.0 : keep_scale;
        }
    }
    r.output = x.cwiseProduct(r.mask);
    return r;
}

} // namespace isr::nn
