/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/trainer.cpp
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
#include "isr/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "isr/errors.hpp"
#include "isr/nn/adam.hpp"

namespace isr {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m)
{
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t len)
{
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i)
    {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
}

template <typename T>
void fnv_mix_value(std::uint64_t& h, const T& value)
{
    fnv_mix(h, &value, sizeof(value));
}

nn::DenseLayer make_dense(int in_dim, int out_dim, double weight_std, Rng& rng)
{
    nn::DenseLayer layer;
    layer.W.resize(out_dim, in_dim);
    for (int r = 0; r < out_dim; ++r)
        for (int c = 0; c < in_dim; ++c)
            layer.W(r, c) = rng.normal(0.0, weight_std);
    layer.b = Eigen::VectorXd::Zero(out_dim);
    return layer;
}

nn::ConvLayer make_conv(int in_ch, int out_ch, int ksize, int stride, Rng& rng)
{
    nn::ConvLayer layer;
    layer.in_ch = in_ch;
    layer.out_ch = out_ch;
    layer.ksize = ksize;
    layer.stride = stride;
    layer.pad = ksize / 2;
    const int fan_in = in_ch * ksize * ksize;
    const double std = std::sqrt(2.0 / fan_in);
    layer.kernels.resize(out_ch, fan_in);
    for (int r = 0; r < out_ch; ++r)
        for (int c = 0; c < fan_in; ++c)
            layer.kernels(r, c) = rng.normal(0.0, std);
    layer.bias = Eigen::VectorXd::Zero(out_ch);
    return layer;
}

void round_to_f32(double* data, Eigen::Index size)
{
    for (Eigen::Index i = 0; i < size; ++i)
        data[i] = static_cast<double>(static_cast<float>(data[i]));
}

} // namespace

void NetworkSpec::validate() const
{
    if (input_dim <= 0)
        throw ValidationError("network spec: input_dim must be positive, got " +
                              std::to_string(input_dim));
    if (latent_dim <= 0)
        throw ValidationError("network spec: latent_dim must be positive, got " +
                              std::to_string(latent_dim));
    for (int h : encoder_hidden)
        if (h <= 0)
            throw ValidationError("network spec: encoder hidden width must be positive, got " +
                                  std::to_string(h));
    if (image_size <= 0)
        throw ValidationError("network spec: image_size must be positive");
    if (conv_channels.empty())
        throw ValidationError("network spec: at least one conv layer is required");
    for (int c : conv_channels)
        if (c <= 0)
            throw ValidationError("network spec: conv channel count must be positive");
    if (conv_kernel <= 0 || conv_kernel % 2 == 0)
        throw ValidationError("network spec: conv kernel must be odd and positive, got " +
                              std::to_string(conv_kernel));
    if (conv_stride <= 0)
        throw ValidationError("network spec: conv stride must be positive");
    if (fc4_units <= 0)
        throw ValidationError("network spec: fc4_units must be positive");
    if (!(dropout_ratio >= 0.0 && dropout_ratio < 1.0))
        throw ValidationError("network spec: dropout_ratio must lie in [0, 1)");
    // The conv stack must not shrink the image away.
    int extent = image_size;
    for (std::size_t i = 0; i < conv_channels.size(); ++i)
    {
        extent = (extent + 2 * (conv_kernel / 2) - conv_kernel) / conv_stride + 1;
        if (extent <= 0)
            throw ValidationError("network spec: conv stack reduces the image to nothing at layer " +
                                  std::to_string(i + 1));
    }
}

int NetworkSpec::conv_output_dim() const
{
    int extent = image_size;
    for (std::size_t i = 0; i < conv_channels.size(); ++i)
        extent = (extent + 2 * (conv_kernel / 2) - conv_kernel) / conv_stride + 1;
    return conv_channels.back() * extent * extent;
}

std::uint64_t NetworkSpec::hash() const
{
    std::uint64_t h = 14695981039346656037ULL;
    fnv_mix_value(h, input_dim);
    fnv_mix_value(h, latent_dim);
    const auto hidden_count = static_cast<std::uint64_t>(encoder_hidden.size());
    fnv_mix_value(h, hidden_count);
    for (int w : encoder_hidden)
        fnv_mix_value(h, w);
    const int linear_flag = linear_encoder ? 1 : 0;
    fnv_mix_value(h, linear_flag);
    fnv_mix_value(h, image_size);
    const auto conv_count = static_cast<std::uint64_t>(conv_channels.size());
    fnv_mix_value(h, conv_count);
    for (int c : conv_channels)
        fnv_mix_value(h, c);
    fnv_mix_value(h, conv_kernel);
    fnv_mix_value(h, conv_stride);
    fnv_mix_value(h, fc4_units);
    fnv_mix_value(h, dropout_ratio);
    return h;
}

void TrainConfig::validate() const
{
    if (batch_size <= 0)
        throw ValidationError("train config: batch_size must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr))
        throw ValidationError("train config: learning rate must be positive and finite");
    if (!(lambda_couple >= 0.0) || !std::isfinite(lambda_couple))
        throw ValidationError("train config: lambda must be non-negative and finite");
    if (epochs < 0)
        throw ValidationError("train config: epochs must be non-negative");
    if (!(weight_decay >= 0.0))
        throw ValidationError("train config: weight_decay must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw ValidationError("train config: dropout must lie in [0, 1)");
}

JointNetwork JointNetwork::init(const NetworkSpec& spec, const Eigen::VectorXd& mean_shape,
                                Rng& rng)
{
    spec.validate();
    if (mean_shape.size() != spec.input_dim)
        throw ValidationError("network init: mean shape length " +
                              std::to_string(mean_shape.size()) + " does not match input_dim " +
                              std::to_string(spec.input_dim));

    JointNetwork net;
    net.spec = spec;

    // Encoder: hidden stack then the latent head, He-scaled.
    int in_dim = spec.input_dim;
    for (int width : spec.encoder_hidden)
    {
        net.encoder.push_back(make_dense(in_dim, width, std::sqrt(2.0 / in_dim), rng));
        in_dim = width;
    }
    net.encoder.push_back(make_dense(in_dim, spec.latent_dim, std::sqrt(1.0 / in_dim), rng));

    // Decoder starts at the mean shape so that decode(0) is already a sane
    // reconstruction; weights are small so early latents stay near it.
    net.decoder = make_dense(spec.latent_dim, spec.input_dim, 0.01, rng);
    net.decoder.b = mean_shape;

    int channels = 1;
    for (int out_ch : spec.conv_channels)
    {
        net.convs.push_back(make_conv(channels, out_ch, spec.conv_kernel, spec.conv_stride, rng));
        channels = out_ch;
    }

    const int conv_dim = spec.conv_output_dim();
    net.fc4 = make_dense(conv_dim, spec.fc4_units, std::sqrt(2.0 / conv_dim), rng);
    net.fc5 = make_dense(spec.fc4_units, spec.latent_dim, std::sqrt(1.0 / spec.fc4_units), rng);
    return net;
}

std::vector<nn::ParamView> JointNetwork::param_views()
{
    std::vector<nn::ParamView> views;
    auto add = [&views](const std::string& name, Eigen::MatrixXd& m) {
        views.push_back({name, m.data(), m.size()});
    };
    auto addv = [&views](const std::string& name, Eigen::VectorXd& v) {
        views.push_back({name, v.data(), v.size()});
    };
    add("decoder.W", decoder.W);
    addv("decoder.b", decoder.b);
    for (std::size_t i = 0; i < encoder.size(); ++i)
    {
        add("encoder" + std::to_string(i + 1) + ".W", encoder[i].W);
        addv("encoder" + std::to_string(i + 1) + ".b", encoder[i].b);
    }
    for (std::size_t i = 0; i < convs.size(); ++i)
    {
        add("conv" + std::to_string(i + 1) + ".kernels", convs[i].kernels);
        addv("conv" + std::to_string(i + 1) + ".bias", convs[i].bias);
    }
    add("fc4.W", fc4.W);
    addv("fc4.b", fc4.b);
    add("fc5.W", fc5.W);
    addv("fc5.b", fc5.b);
    return views;
}

Eigen::VectorXd JointNetwork::decode(const Eigen::VectorXd& z) const
{
    if (z.size() != spec.latent_dim)
        throw ValidationError("decode: latent length " + std::to_string(z.size()) +
                              " does not match latent_dim " + std::to_string(spec.latent_dim));
    return decoder.W * z + decoder.b;
}

Eigen::MatrixXd JointNetwork::decode_batch(const Eigen::MatrixXd& z) const
{
    if (z.cols() != spec.latent_dim)
        throw ValidationError("decode: latent width does not match latent_dim");
    return nn::dense_apply(decoder, z);
}

Eigen::VectorXd JointNetwork::encode(const Eigen::VectorXd& x) const
{
    if (x.size() != spec.input_dim)
        throw ValidationError("encode: input length " + std::to_string(x.size()) +
                              " does not match input_dim " + std::to_string(spec.input_dim));
    Eigen::VectorXd cur = x;
    for (std::size_t i = 0; i < encoder.size(); ++i)
    {
        cur = encoder[i].W * cur + encoder[i].b;
        const bool is_head = (i + 1 == encoder.size());
        if (!is_head && !spec.linear_encoder)
            cur = cur.cwiseMax(0.0);
    }
    return cur;
}

Eigen::VectorXd JointNetwork::cnn_eval(const nn::Tensor& image) const
{
    if (image.shape.size() != 4 || image.dim(0) != 1 || image.dim(1) != 1 ||
        image.dim(2) != spec.image_size || image.dim(3) != spec.image_size)
        throw ValidationError("cnn: expected one image of shape [1, 1, " +
                              std::to_string(spec.image_size) + ", " +
                              std::to_string(spec.image_size) + "]");

    nn::Tensor cur = image;
    for (std::size_t i = 0; i < convs.size(); ++i)
    {
        cur = nn::conv2d_apply(convs[i], cur);
        cur = nn::relu_apply(cur);
        if (!cur.data.allFinite())
            throw NumericError("cnn: non-finite activations after conv layer " +
                               std::to_string(i + 1));
    }
    Eigen::MatrixXd flat(1, cur.data.size());
    flat.row(0) = cur.data.transpose();
    Eigen::MatrixXd a4 = nn::relu_apply(nn::dense_apply(fc4, flat));
    if (!a4.allFinite())
        throw NumericError("cnn: non-finite activations after layer fc4");
    // Dropout is identity in eval mode.
    Eigen::MatrixXd y = nn::dense_apply(fc5, a4);
    if (!y.allFinite())
        throw NumericError("cnn: non-finite activations after layer fc5");
    return y.row(0).transpose();
}

double loss_j1(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat)
{
    if (x.size() != x_hat.size())
        throw ValidationError("loss_j1: length mismatch " + std::to_string(x.size()) + " vs " +
                              std::to_string(x_hat.size()));
    if (x.size() == 0)
        throw ValidationError("loss_j1: empty vectors");
    return (x - x_hat).squaredNorm() / static_cast<double>(x.size());
}

double loss_j2(const LatentCode& z, const LatentCode& y)
{
    if (z.dim() != y.dim())
        throw ValidationError("loss_j2: latent dimension mismatch " + std::to_string(z.dim()) +
                              " vs " + std::to_string(y.dim()));
    if (z.dim() == 0)
        throw ValidationError("loss_j2: empty latent codes");
    return (z.values - y.values).squaredNorm() / static_cast<double>(z.dim());
}

JointForward joint_forward(const JointNetwork& net, const Eigen::MatrixXd& x_batch,
                           const nn::Tensor& images, double lambda, nn::DropoutMode mode,
                           Rng* rng)
{
    const auto batch = static_cast<int>(x_batch.rows());
    if (batch == 0)
        throw ValidationError("joint forward: empty batch");
    if (x_batch.cols() != net.spec.input_dim)
        throw ValidationError("joint forward: shape width " + std::to_string(x_batch.cols()) +
                              " does not match input_dim " + std::to_string(net.spec.input_dim));

    JointForward fwd;

    // Autoencoder path.
    Eigen::MatrixXd cur = x_batch;
    for (std::size_t i = 0; i < net.encoder.size(); ++i)
    {
        fwd.enc_inputs.push_back(cur);
        Eigen::MatrixXd pre = nn::dense_apply(net.encoder[i], cur);
        fwd.enc_pre.push_back(pre);
        const bool is_head = (i + 1 == net.encoder.size());
        cur = (is_head || net.spec.linear_encoder) ? pre : nn::relu_apply(pre);
    }
    fwd.z = cur;
    fwd.x_hat = nn::dense_apply(net.decoder, fwd.z);

    const double dim = static_cast<double>(net.spec.input_dim);
    fwd.j1 = (fwd.x_hat - x_batch).squaredNorm() / (batch * dim);

    // CNN path; skipped entirely when the coupling weight is zero.
    if (lambda != 0.0)
    {
        const int s = net.spec.image_size;
        if (images.shape.size() != 4 || images.dim(0) != batch || images.dim(1) != 1 ||
            images.dim(2) != s || images.dim(3) != s)
            throw ValidationError("joint forward: image tensor must be [batch, 1, " +
                                  std::to_string(s) + ", " + std::to_string(s) + "]");
        if (mode == nn::DropoutMode::train && rng == nullptr &&
            net.spec.dropout_ratio > 0.0)
            throw ValidationError("joint forward: training-mode dropout needs an rng");

        nn::Tensor t = images;
        for (const auto& conv : net.convs)
        {
            fwd.conv_inputs.push_back(t);
            nn::Tensor pre = nn::conv2d_apply(conv, t);
            fwd.conv_pre.push_back(pre);
            t = nn::relu_apply(pre);
        }
        const int chw = net.spec.conv_output_dim();
        fwd.flat.resize(batch, chw);
        for (int b = 0; b < batch; ++b)
            fwd.flat.row(b) = t.data.segment(static_cast<Eigen::Index>(b) * chw, chw).transpose();

        fwd.fc4_pre = nn::dense_apply(net.fc4, fwd.flat);
        fwd.fc4_act = nn::relu_apply(fwd.fc4_pre);
        Rng unused_rng(0); // eval mode and ratio 0 never draw
        fwd.dropout = nn::dropout_apply(fwd.fc4_act, net.spec.dropout_ratio, mode,
                                        rng != nullptr ? *rng : unused_rng);
        fwd.y = nn::dense_apply(net.fc5, fwd.dropout.output);

        const double lat = static_cast<double>(net.spec.latent_dim);
        fwd.j2 = (fwd.z - fwd.y).squaredNorm() / (batch * lat);
        fwd.cnn_ran = true;
    }

    fwd.loss = fwd.j1 + lambda * fwd.j2;
    return fwd;
}

std::vector<Eigen::VectorXd> joint_backward(const JointNetwork& net,
                                            const Eigen::MatrixXd& x_batch,
                                            const JointForward& fwd, double lambda)
{
    const auto batch = static_cast<int>(x_batch.rows());
    const double dim = static_cast<double>(net.spec.input_dim);
    const double lat = static_cast<double>(net.spec.latent_dim);

    // d J1 / d x_hat for the batch-mean of per-coordinate squared error.
    Eigen::MatrixXd d_xhat = (2.0 / (batch * dim)) * (fwd.x_hat - x_batch);
    nn::DenseGrads dec = nn::dense_grad(net.decoder, fwd.z, d_xhat);

    Eigen::MatrixXd dz = dec.dx;
    Eigen::MatrixXd dy;
    if (fwd.cnn_ran)
    {
        // J2 pulls the latent toward the CNN output and vice versa.
        const double scale = 2.0 * lambda / (batch * lat);
        dz += scale * (fwd.z - fwd.y);
        dy = scale * (fwd.y - fwd.z);
    }

    // Encoder backward.
    std::vector<Eigen::MatrixXd> enc_dW(net.encoder.size());
    std::vector<Eigen::VectorXd> enc_db(net.encoder.size());
    Eigen::MatrixXd d_cur = dz;
    for (int i = static_cast<int>(net.encoder.size()) - 1; i >= 0; --i)
    {
        const bool is_head = (i + 1 == static_cast<int>(net.encoder.size()));
        Eigen::MatrixXd d_pre = (is_head || net.spec.linear_encoder)
                                    ? d_cur
                                    : nn::relu_grad(fwd.enc_pre[i], d_cur);
        nn::DenseGrads g = nn::dense_grad(net.encoder[i], fwd.enc_inputs[i], d_pre);
        enc_dW[i] = std::move(g.dW);
        enc_db[i] = std::move(g.db);
        d_cur = std::move(g.dx);
    }

    // CNN backward; exact zeros when the coupling was off.
    std::vector<Eigen::MatrixXd> conv_dk(net.convs.size());
    std::vector<Eigen::VectorXd> conv_db(net.convs.size());
    Eigen::MatrixXd fc4_dW, fc5_dW;
    Eigen::VectorXd fc4_db, fc5_db;
    if (fwd.cnn_ran)
    {
        nn::DenseGrads g5 = nn::dense_grad(net.fc5, fwd.dropout.output, dy);
        fc5_dW = std::move(g5.dW);
        fc5_db = std::move(g5.db);
        Eigen::MatrixXd d_drop = g5.dx.cwiseProduct(fwd.dropout.mask);
        Eigen::MatrixXd d_fc4pre = nn::relu_grad(fwd.fc4_pre, d_drop);
        nn::DenseGrads g4 = nn::dense_grad(net.fc4, fwd.flat, d_fc4pre);
        fc4_dW = std::move(g4.dW);
        fc4_db = std::move(g4.db);

        // Unflatten to the last conv activation shape.
        const nn::Tensor& last_pre = fwd.conv_pre.back();
        nn::Tensor d_act = nn::Tensor::zeros(last_pre.shape);
        const int chw = net.spec.conv_output_dim();
        for (int b = 0; b < batch; ++b)
            d_act.data.segment(static_cast<Eigen::Index>(b) * chw, chw) =
                g4.dx.row(b).transpose();

        for (int i = static_cast<int>(net.convs.size()) - 1; i >= 0; --i)
        {
            nn::Tensor d_pre = nn::relu_grad(fwd.conv_pre[i], d_act);
            nn::ConvGrads g = nn::conv2d_grad(net.convs[i], fwd.conv_inputs[i], d_pre);
            conv_dk[i] = std::move(g.dkernels);
            conv_db[i] = std::move(g.dbias);
            d_act = std::move(g.dx);
        }
    }
    else
    {
        for (std::size_t i = 0; i < net.convs.size(); ++i)
        {
            conv_dk[i] = Eigen::MatrixXd::Zero(net.convs[i].kernels.rows(),
                                               net.convs[i].kernels.cols());
            conv_db[i] = Eigen::VectorXd::Zero(net.convs[i].bias.size());
        }
        fc4_dW = Eigen::MatrixXd::Zero(net.fc4.W.rows(), net.fc4.W.cols());
        fc4_db = Eigen::VectorXd::Zero(net.fc4.b.size());
        fc5_dW = Eigen::MatrixXd::Zero(net.fc5.W.rows(), net.fc5.W.cols());
        fc5_db = Eigen::VectorXd::Zero(net.fc5.b.size());
    }

    // Same order as JointNetwork::param_views().
    std::vector<Eigen::VectorXd> grads;
    grads.push_back(flatten(dec.dW));
    grads.push_back(dec.db);
    for (std::size_t i = 0; i < net.encoder.size(); ++i)
    {
        grads.push_back(flatten(enc_dW[i]));
        grads.push_back(enc_db[i]);
    }
    for (std::size_t i = 0; i < net.convs.size(); ++i)
    {
        grads.push_back(flatten(conv_dk[i]));
        grads.push_back(conv_db[i]);
    }
    grads.push_back(flatten(fc4_dW));
    grads.push_back(fc4_db);
    grads.push_back(flatten(fc5_dW));
    grads.push_back(fc5_db);
    return grads;
}

TrainResult train_joint(const TrainingSet& data, const NetworkSpec& spec, const TrainConfig& cfg,
                        const std::string& manifest_hash)
{
    cfg.validate();
    const int count = data.count();
    if (count <= 0)
        throw ValidationError("train: training set is empty");

    NetworkSpec live_spec = spec;
    if (live_spec.input_dim == 0)
        live_spec.input_dim = static_cast<int>(data.shapes.cols());
    live_spec.dropout_ratio = cfg.dropout;
    live_spec.validate();
    if (data.shapes.cols() != live_spec.input_dim)
        throw ValidationError("train: shape width " + std::to_string(data.shapes.cols()) +
                              " does not match input_dim " + std::to_string(live_spec.input_dim));
    if (cfg.lambda_couple != 0.0)
    {
        if (data.images.shape.size() != 4 || data.images.dim(0) != count ||
            data.images.dim(1) != 1 || data.images.dim(2) != live_spec.image_size ||
            data.images.dim(3) != live_spec.image_size)
            throw ValidationError("train: image tensor must be [count, 1, s, s] matching the "
                                  "image_size when the coupling weight is non-zero");
    }

    Rng rng(cfg.seed);
    Eigen::VectorXd mean_shape = data.shapes.colwise().mean().transpose();
    JointNetwork net = JointNetwork::init(live_spec, mean_shape, rng);

    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;
    std::vector<nn::AdamState> states(net.param_views().size());

    const int img_pix = live_spec.image_size * live_spec.image_size;
    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch)
    {
        rng.shuffle(order);
        double sum_j1 = 0.0, sum_j2 = 0.0, sum_loss = 0.0;
        int batch_index = 0;
        for (int start = 0; start < count; start += cfg.batch_size, ++batch_index)
        {
            const int b = std::min(cfg.batch_size, count - start);
            Eigen::MatrixXd x(b, live_spec.input_dim);
            nn::Tensor imgs;
            if (cfg.lambda_couple != 0.0)
                imgs = nn::Tensor::zeros({b, 1, live_spec.image_size, live_spec.image_size});
            for (int r = 0; r < b; ++r)
            {
                const int id = order[start + r];
                x.row(r) = data.shapes.row(id);
                if (cfg.lambda_couple != 0.0)
                    imgs.data.segment(static_cast<Eigen::Index>(r) * img_pix, img_pix) =
                        data.images.data.segment(static_cast<Eigen::Index>(id) * img_pix,
                                                 img_pix);
            }

            JointForward fwd = joint_forward(net, x, imgs, cfg.lambda_couple,
                                             nn::DropoutMode::train, &rng);
            if (!std::isfinite(fwd.loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index));

            std::vector<Eigen::VectorXd> grads = joint_backward(net, x, fwd, cfg.lambda_couple);
            std::vector<nn::ParamView> views = net.param_views();
            for (std::size_t p = 0; p < views.size(); ++p)
            {
                Eigen::Map<Eigen::VectorXd> param(views[p].data, views[p].size);
                adam_step(param, grads[p], states[p], adam);
            }

            sum_j1 += fwd.j1 * b;
            sum_j2 += fwd.j2 * b;
            sum_loss += fwd.loss * b;
        }
        EpochLog log;
        log.epoch = epoch;
        log.j1 = sum_j1 / count;
        log.j2 = sum_j2 / count;
        log.total = sum_loss / count;
        result.history.push_back(log);
    }

    if (cfg.precision == Precision::f32)
    {
        for (nn::ParamView& v : net.param_views())
            round_to_f32(v.data, v.size);
        round_to_f32(mean_shape.data(), mean_shape.size());
    }

    result.model.net = std::move(net);
    result.model.mean_shape = std::move(mean_shape);
    result.model.manifest_hash = manifest_hash;
    result.model.config = cfg;
    if (!result.history.empty())
    {
        result.model.final_j1 = result.history.back().j1;
        result.model.final_j2 = result.history.back().j2;
        result.model.final_loss = result.history.back().total;
    }
    return result;
}

ShapeModel extract_shape_model(const TrainedModel& trained)
{
    ShapeModel model;
    model.mean = trained.net.decoder.b;
    model.basis = trained.net.decoder.W;
    model.coeff_sigma = Eigen::VectorXd::Ones(trained.net.spec.latent_dim);
    model.validate();
    return model;
}

void write_loss_csv(const std::string& path, const std::vector<EpochLog>& history)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open loss log for writing: " + path);
    out << "epoch,j1,j2,total\n";
    out << std::setprecision(17);
    for (const EpochLog& log : history)
        out << log.epoch << ',' << log.j1 << ',' << log.j2 << ',' << log.total << '\n';
    if (!out)
        throw IoError("failed while writing loss log: " + path);
}

} // namespace isr
