/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/trainer.hpp
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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isr/nn/gradient_check.hpp"
#include "isr/nn/layers.hpp"
#include "isr/rng.hpp"
#include "isr/shape_model.hpp"

namespace isr {

enum class Precision { f32, f64 };

/**
 * Architecture of the joint model: an autoencoder over vectorized 3D shapes
 * whose single affine decoder is the learned shape basis, and a CNN mapping
 * grayscale images into the same latent space.
 */
struct NetworkSpec {
    int input_dim = 0;  // 3n
    int latent_dim = 16;
    std::vector<int> encoder_hidden = {512, 128};
    bool linear_encoder = false; // skip ReLU between encoder layers
    int image_size = 32;
    std::vector<int> conv_channels = {8, 16, 32};
    int conv_kernel = 3;
    int conv_stride = 2;
    int fc4_units = 128;
    double dropout_ratio = 0.6; // after fc4, training mode only

    void validate() const;
    /// Flattened dimension after the conv stack.
    int conv_output_dim() const;
    /// Stable hash of the architecture, stored in checkpoints.
    std::uint64_t hash() const;
};

struct TrainConfig {
    int batch_size = 32;
    double lr = 1e-4;
    double lambda_couple = 1.0;
    int epochs = 10;
    std::uint64_t seed = 1;
    double weight_decay = 5e-4;
    double dropout = 0.6;
    Precision precision = Precision::f64;
    bool deterministic = true;

    void validate() const;
};

/// All parameters of the joint model. Parameter tensors are visited in a
/// fixed order (decoder, encoder, convs, fc4, fc5) by param_views().
struct JointNetwork {
    NetworkSpec spec;
    std::vector<nn::DenseLayer> encoder; // hidden layers + latent head
    nn::DenseLayer decoder;              // latent_dim -> input_dim
    std::vector<nn::ConvLayer> convs;
    nn::DenseLayer fc4;
    nn::DenseLayer fc5;

    /// Fresh network; decoder bias starts at `mean_shape`, weights are small
    /// seeded normals (He scaling for the hidden/conv layers).
    static JointNetwork init(const NetworkSpec& spec, const Eigen::VectorXd& mean_shape,
                             Rng& rng);

    std::vector<nn::ParamView> param_views();

    /// decode(z) = decoder.W z + decoder.b, the learned affine shape map.
    Eigen::VectorXd decode(const Eigen::VectorXd& z) const;
    Eigen::MatrixXd decode_batch(const Eigen::MatrixXd& z) const;

    /// Encoder forward for one vectorized shape (eval semantics; no dropout
    /// exists on this path).
    Eigen::VectorXd encode(const Eigen::VectorXd& x) const;

    /// CNN forward in eval mode (dropout = identity) for one image tensor
    /// [1, 1, s, s]; throws NumericError naming the layer if activations
    /// become non-finite.
    Eigen::VectorXd cnn_eval(const nn::Tensor& image) const;
};

/// Mean of squared coordinate differences, sum((x_i - x_hat_i)^2) / 3n.
double loss_j1(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat);

/// Mean of squared latent differences, sum((z_i - y_i)^2) / d.
double loss_j2(const LatentCode& z, const LatentCode& y);

/// Training data already in tensor form: one shape row per sample plus the
/// matching image stack. Images may be empty when lambda_couple == 0.
struct TrainingSet {
    Eigen::MatrixXd shapes; // count x 3n
    nn::Tensor images;      // [count, 1, s, s]

    int count() const { return static_cast<int>(shapes.rows()); }
};

/// Per-batch forward state kept for the backward pass.
struct JointForward {
    // autoencoder
    std::vector<Eigen::MatrixXd> enc_inputs; // input to each encoder layer
    std::vector<Eigen::MatrixXd> enc_pre;    // pre-activations
    Eigen::MatrixXd z;                       // batch x latent
    Eigen::MatrixXd x_hat;                   // batch x 3n
    // cnn
    std::vector<nn::Tensor> conv_inputs;
    std::vector<nn::Tensor> conv_pre;
    Eigen::MatrixXd flat;
    Eigen::MatrixXd fc4_pre;
    Eigen::MatrixXd fc4_act;
    nn::DropoutResult dropout;
    Eigen::MatrixXd y; // batch x latent
    // losses (means over the batch)
    double j1 = 0.0;
    double j2 = 0.0;
    double loss = 0.0;
    bool cnn_ran = false;
};

/**
 * Joint loss L = J1(x, decode(encode(x))) + lambda * J2(encode(x), cnn(image))
 * averaged over the batch. When lambda == 0 the CNN is skipped entirely and
 * its gradients are exact zeros.
 */
JointForward joint_forward(const JointNetwork& net, const Eigen::MatrixXd& x_batch,
                           const nn::Tensor& images, double lambda, nn::DropoutMode mode,
                           Rng* rng);

/// Gradients aligned with param_views() order.
std::vector<Eigen::VectorXd> joint_backward(const JointNetwork& net,
                                            const Eigen::MatrixXd& x_batch,
                                            const JointForward& fwd, double lambda);

struct EpochLog {
    int epoch = 0;
    double j1 = 0.0;
    double j2 = 0.0;
    double total = 0.0;
};

struct TrainedModel {
    JointNetwork net;
    Eigen::VectorXd mean_shape; // training-set mean of the shape rows
    std::string manifest_hash;  // hex hash of the dataset manifest, or ""
    double final_j1 = 0.0;
    double final_j2 = 0.0;
    double final_loss = 0.0;
    TrainConfig config;
};

struct TrainResult {
    TrainedModel model;
    std::vector<EpochLog> history;
};

/**
 * Shuffled mini-batch Adam on the joint loss. Deterministic given the seed:
 * the run is strictly sequential, with fixed parameter-update order. Aborts
 * with NumericError naming the batch when the loss turns non-finite. With
 * precision == f32 the final parameters are rounded to f32 so that
 * checkpoints round-trip bit-identically.
 */
TrainResult train_joint(const TrainingSet& data, const NetworkSpec& spec,
                        const TrainConfig& cfg, const std::string& manifest_hash = "");

/// The learned shape space: mean = decoder bias, basis = decoder weights.
ShapeModel extract_shape_model(const TrainedModel& trained);

void write_loss_csv(const std::string& path, const std::vector<EpochLog>& history);

} // namespace isr
