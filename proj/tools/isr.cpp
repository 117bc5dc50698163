/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: tools/isr.cpp
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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "isr/checkpoint.hpp"
#include "isr/datagen.hpp"
#include "isr/errors.hpp"
#include "isr/evaluation_pipeline.hpp"
#include "isr/ply_io.hpp"
#include "isr/reconstruction.hpp"
#include "isr/trainer.hpp"

namespace fs = std::filesystem;

namespace {

/// Config files are flat JSON objects whose keys are the long option names
/// of the subcommand; explicit command-line flags always win. Applied by
/// hand at callback time because the option values must already be parsed
/// to know which flags were given.
void apply_json_config(CLI::App* cmd, const std::string& path)
{
    if (path.empty())
        return;
    std::ifstream in(path);
    if (!in)
        throw isr::IoError("missing config file: " + path);
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw isr::ValidationError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object())
        throw isr::ValidationError("config file must hold a JSON object");

    for (const auto& [key, value] : j.items())
    {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config")
            throw isr::ValidationError("config: unknown key '" + key + "' for subcommand " +
                                       cmd->get_name());
        if (opt->count() > 0)
            continue; // the explicit flag wins
        if (value.is_array())
            for (const auto& elem : value)
                opt->add_result(elem.is_string() ? elem.get<std::string>() : elem.dump());
        else
            opt->add_result(value.is_string() ? value.get<std::string>() : value.dump());
        opt->run_callback();
    }
}

/// Registers --config and wires the subcommand callback so the config file
/// is folded in before `run` sees the argument struct.
template <typename Run>
void wire_config_and_run(CLI::App* cmd, std::string& config_path, Run run)
{
    cmd->add_option("--config", config_path,
                    "JSON config file; explicit flags override its values");
    cmd->callback([cmd, &config_path, run]() {
        apply_json_config(cmd, config_path);
        run();
    });
}

/// "1,4,7..10" -> {1, 4, 7, 8, 9, 10}
std::vector<int> parse_id_list(const std::string& text)
{
    std::vector<int> ids;
    std::size_t pos = 0;
    while (pos < text.size())
    {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos)
            comma = text.size();
        const std::string tok = text.substr(pos, comma - pos);
        const std::size_t dots = tok.find("..");
        try
        {
            if (dots == std::string::npos)
            {
                ids.push_back(std::stoi(tok));
            }
            else
            {
                const int lo = std::stoi(tok.substr(0, dots));
                const int hi = std::stoi(tok.substr(dots + 2));
                if (hi < lo)
                    throw isr::ValidationError("--ids: descending range '" + tok + "'");
                for (int i = lo; i <= hi; ++i)
                    ids.push_back(i);
            }
        }
        catch (const isr::ValidationError&)
        {
            throw;
        }
        catch (const std::exception&)
        {
            throw isr::ValidationError("--ids: cannot parse '" + tok + "'");
        }
        pos = comma + 1;
    }
    return ids;
}

isr::Split parse_split(const std::string& name)
{
    if (name == "train")
        return isr::Split::train;
    if (name == "test")
        return isr::Split::test;
    if (name == "all")
        return isr::Split::all;
    throw isr::ValidationError("--split must be train, test or all, got '" + name + "'");
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::string config;
    std::string out;
    int count = 200;
    double pose_fraction = 0.2;
    double max_yaw = 90.0;
    std::uint64_t seed = 7;
    double split_train = 0.9;
    double split_test = 0.1;
    int grid = 39;
    int d_true = 10;
    double sigma0 = 1.0;
    double basis_scale = 6.0;
    std::uint64_t gt_seed = 20240901;
    int resolution = 32;
    double ambient = 0.2;
    int splat_radius = 1;
    std::vector<double> light = {0.0, 0.0, 1.0};
    bool force = false;
};

void run_gen_data(const GenDataArgs& a)
{
    isr::GroundTruthConfig gt_cfg;
    gt_cfg.n_grid = a.grid;
    gt_cfg.d_true = a.d_true;
    gt_cfg.sigma0 = a.sigma0;
    gt_cfg.basis_scale = a.basis_scale;
    gt_cfg.seed = a.gt_seed;

    isr::RenderConfig render_cfg;
    render_cfg.resolution = a.resolution;
    render_cfg.ambient = a.ambient;
    render_cfg.splat_radius = a.splat_radius;
    if (a.light.size() != 3)
        throw isr::ValidationError("--light needs three components");
    Eigen::Vector3d light(a.light[0], a.light[1], a.light[2]);
    if (light.norm() <= 0.0)
        throw isr::ValidationError("--light must be a nonzero direction");
    render_cfg.light_dir = light.normalized();

    isr::GenerateConfig gen_cfg;
    gen_cfg.count = a.count;
    gen_cfg.pose_fraction = a.pose_fraction;
    gen_cfg.max_yaw_deg = a.max_yaw;
    gen_cfg.seed = a.seed;
    gen_cfg.split_train = a.split_train;
    gen_cfg.split_test = a.split_test;

    if (a.force && fs::exists(a.out))
        fs::remove_all(a.out);

    const isr::GroundTruthModel gt = isr::build_ground_truth_model(gt_cfg);
    isr::generate_dataset(gt, render_cfg, gen_cfg, a.out);
    std::cout << "wrote " << a.count << " samples to " << a.out << " (" << gt.model.vertex_count()
              << " vertices, " << a.d_true << " coefficients, " << a.resolution << "x"
              << a.resolution << "px)\n";
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out;
    std::string loss_log;
    int epochs = 10;
    int batch = 32;
    double lr = 1e-4;
    double lambda = 1.0;
    std::uint64_t seed = 1;
    double weight_decay = 5e-4;
    double dropout = 0.6;
    std::string precision = "f64";
    int latent = 16;
    std::vector<int> hidden = {512, 128};
    bool linear_encoder = false;
    std::vector<int> conv_channels = {8, 16, 32};
    int conv_kernel = 3;
    int conv_stride = 2;
    int fc4 = 128;
};

void run_train(const TrainArgs& a)
{
    if (a.lambda == 0.0)
        std::cerr << "warning: coupling weight is 0; the image network receives no "
                     "gradient and reconstruction from images will not work\n";

    const isr::Dataset data = isr::load_dataset(a.data);

    isr::NetworkSpec spec;
    spec.input_dim = 3 * data.manifest.n;
    spec.latent_dim = a.latent;
    spec.encoder_hidden = a.hidden;
    spec.linear_encoder = a.linear_encoder;
    spec.image_size = data.manifest.resolution;
    spec.conv_channels = a.conv_channels;
    spec.conv_kernel = a.conv_kernel;
    spec.conv_stride = a.conv_stride;
    spec.fc4_units = a.fc4;

    isr::TrainConfig cfg;
    cfg.batch_size = a.batch;
    cfg.lr = a.lr;
    cfg.lambda_couple = a.lambda;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.weight_decay = a.weight_decay;
    cfg.dropout = a.dropout;
    if (a.precision == "f32")
        cfg.precision = isr::Precision::f32;
    else if (a.precision == "f64")
        cfg.precision = isr::Precision::f64;
    else
        throw isr::ValidationError("--precision must be f32 or f64, got '" + a.precision + "'");

    const isr::TrainingSet set = isr::make_training_set(data, isr::Split::train);
    std::cout << "training on " << set.count() << " samples (" << spec.input_dim
              << " coordinates, latent " << spec.latent_dim << ", batch " << cfg.batch_size
              << ", " << cfg.epochs << " epochs)\n";

    isr::TrainResult result = isr::train_joint(set, spec, cfg, data.manifest_hash);
    isr::save_checkpoint(a.out, result.model);

    const std::string log_path = a.loss_log.empty() ? a.out + ".losses.csv" : a.loss_log;
    isr::write_loss_csv(log_path, result.history);

    std::cout << "final losses: j1 " << result.model.final_j1 << ", j2 " << result.model.final_j2
              << ", total " << result.model.final_loss << '\n';
    std::cout << "checkpoint " << a.out << ", loss log " << log_path << '\n';
}

// ------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string config;
    std::string model;
    std::string data;
    std::string image;
    std::string ids_text;
    std::string out;
};

void run_reconstruct(const ReconstructArgs& a)
{
    const isr::TrainedModel model = isr::load_checkpoint(a.model);
    fs::create_directories(a.out);

    std::vector<isr::ReconstructionResult> results;

    if (!a.image.empty())
    {
        const isr::GrayImage img = isr::load_pgm(a.image);
        results.push_back(isr::reconstruct(model, img));
        const std::string stem = fs::path(a.image).stem().string();
        isr::save_ply(fs::path(a.out) / (stem + "_recon.ply"), results.back().cloud);
        std::cout << "wrote " << (fs::path(a.out) / (stem + "_recon.ply")).string() << '\n';
    }
    else
    {
        if (a.data.empty())
            throw isr::ValidationError("reconstruct needs --data (or a single --image)");
        const isr::Dataset data = isr::load_dataset(a.data);
        std::vector<int> ids = a.ids_text.empty() ? isr::split_ids(data, isr::Split::test)
                                                  : parse_id_list(a.ids_text);
        if (ids.empty())
            throw isr::ValidationError("reconstruct: no ids selected");
        const int res = data.manifest.resolution;
        isr::TriangleMesh mesh = data.bundle.mesh;
        for (int id : ids)
        {
            if (id < 0 || id >= data.manifest.count)
                throw isr::ValidationError("reconstruct: id " + std::to_string(id) +
                                           " outside 0.." +
                                           std::to_string(data.manifest.count - 1));
            isr::GrayImage img(res, res);
            img.pixels = data.images.data.segment(
                static_cast<Eigen::Index>(id) * res * res, static_cast<Eigen::Index>(res) * res);
            results.push_back(isr::reconstruct(model, img, id));
            mesh.cloud = results.back().cloud;
            char name[32];
            std::snprintf(name, sizeof(name), "recon_%05d.ply", id);
            isr::save_ply(fs::path(a.out) / name, mesh);
        }
        std::cout << "wrote " << ids.size() << " reconstructions to " << a.out << '\n';
    }

    isr::write_latents_csv((fs::path(a.out) / "latents.csv").string(), results);
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string config;
    std::string model;
    std::string data;
    std::string out;
    std::string split = "test";
    bool pose_sweep = false;
    std::string sweep_angles; // comma list; empty = stepped default range
    double sweep_step = 15.0;
    int sweep_samples = 20;
    double sweep_min = -90.0;
    double sweep_max = 90.0;
    std::uint64_t sweep_seed = 99;
    bool direct = false;
    int direct_epochs = 10;
};

std::vector<double> parse_angle_list(const std::string& text)
{
    std::vector<double> angles;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        if (item.empty())
            continue;
        try
        {
            std::size_t used = 0;
            angles.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        }
        catch (const std::exception&)
        {
            throw isr::ValidationError("pose sweep: bad angle '" + item + "'");
        }
    }
    return angles;
}

void run_evaluate(const EvaluateArgs& a)
{
    const isr::TrainedModel model = isr::load_checkpoint(a.model);
    const isr::Dataset data = isr::load_dataset(a.data);
    const isr::Split split = parse_split(a.split);

    const isr::EvaluationReport report = isr::evaluate_model(model, data, split, a.out);
    std::cout << "evaluated " << report.samples.size() << " samples (" << a.split << " split)\n"
              << "  mean per-vertex mse:   " << report.mean_mse << '\n'
              << "  mean-shape baseline:   " << report.baseline_mean_mse << '\n'
              << "  normal angles (deg):   mean " << report.mean_angle_deg << ", median "
              << report.median_angle_deg << ", p95 " << report.p95_angle_deg << '\n';

    if (a.pose_sweep)
    {
        const auto sweep =
            a.sweep_angles.empty()
                ? isr::pose_sweep(model, data.bundle, a.sweep_samples, a.sweep_min,
                                  a.sweep_max, a.sweep_step, a.sweep_seed)
                : isr::pose_sweep(model, data.bundle, a.sweep_samples,
                                  parse_angle_list(a.sweep_angles), a.sweep_seed);
        const std::string path = (fs::path(a.out) / "pose_sweep.csv").string();
        isr::write_pose_sweep_csv(path, sweep);
        std::cout << "pose sweep written to " << path << '\n';
    }

    if (a.direct)
    {
        isr::TrainConfig cfg;
        cfg.epochs = a.direct_epochs;
        isr::NetworkSpec base;
        base.conv_channels = model.net.spec.conv_channels;
        base.conv_kernel = model.net.spec.conv_kernel;
        base.conv_stride = model.net.spec.conv_stride;
        base.fc4_units = model.net.spec.fc4_units;
        const isr::DirectRegressionReport direct =
            isr::train_direct_regression(data, cfg, base, split);
        nlohmann::json j;
        j["joint_mean_mse"] = report.mean_mse;
        j["joint_mean_angle_deg"] = report.mean_angle_deg;
        j["joint_angle_histogram"] = report.angle_histogram;
        j["direct_regression_mean_mse"] = direct.mean_mse;
        j["direct_regression_mean_angle_deg"] = direct.mean_angle_deg;
        j["direct_regression_angle_histogram"] = direct.angle_histogram;
        j["direct_epochs"] = a.direct_epochs;
        const std::string path = (fs::path(a.out) / "direct_vs_joint.json").string();
        std::ofstream out(path, std::ios::trunc);
        if (!out)
            throw isr::IoError("cannot open for writing: " + path);
        out << j.dump(2) << '\n';
        std::cout << "direct-regression baseline: mean mse " << direct.mean_mse
                  << " (joint: " << report.mean_mse << "), written to " << path << '\n';
    }
}

// ------------------------------------------------------------------ verify

struct VerifyState {
    int failures = 0;

    void report(const std::string& name, bool ok, const std::string& detail = "")
    {
        if (ok)
        {
            std::cout << "PASS " << name << '\n';
        }
        else
        {
            ++failures;
            std::cout << "FAIL " << name << (detail.empty() ? "" : " (" + detail + ")") << '\n';
        }
    }
};

bool fault_requested(const char* name)
{
    const char* value = std::getenv("ISR_VERIFY_BREAK");
    return value != nullptr && std::string(value) == name;
}

void verify_dense_backward(VerifyState& state)
{
    isr::Rng rng(11);
    isr::nn::DenseLayer layer;
    layer.W.resize(4, 5);
    for (Eigen::Index i = 0; i < layer.W.size(); ++i)
        layer.W.data()[i] = rng.normal();
    layer.b.resize(4);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i)
        layer.b[i] = rng.normal();
    Eigen::MatrixXd x(3, 5), target(3, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < target.size(); ++i)
        target.data()[i] = rng.normal();

    auto loss_fn = [&]() {
        return 0.5 * (isr::nn::dense_apply(layer, x) - target).squaredNorm();
    };
    Eigen::MatrixXd dy = isr::nn::dense_apply(layer, x) - target;
    isr::nn::DenseGrads grads = isr::nn::dense_grad(layer, x, dy);
    if (fault_requested("dense_backward"))
        grads.dW(0, 0) += 1e-3; // fault injection hook for the test suite
    std::vector<isr::nn::ParamView> params = {{"W", layer.W.data(), layer.W.size()},
                                              {"b", layer.b.data(), layer.b.size()}};
    std::vector<Eigen::VectorXd> analytic = {
        Eigen::Map<const Eigen::VectorXd>(grads.dW.data(), grads.dW.size()), grads.db};
    const auto report = isr::nn::gradient_check(params, analytic, loss_fn, 1e-6);
    state.report("dense backward matches finite differences",
                 report.max_rel_error < 1e-5,
                 "max rel err " + std::to_string(report.max_rel_error) + " at " +
                     report.worst_param);
}

void verify_conv_backward(VerifyState& state)
{
    isr::Rng rng(12);
    isr::nn::ConvLayer layer;
    layer.in_ch = 2;
    layer.out_ch = 3;
    layer.ksize = 3;
    layer.stride = 2;
    layer.pad = 1;
    layer.kernels.resize(3, 2 * 9);
    for (Eigen::Index i = 0; i < layer.kernels.size(); ++i)
        layer.kernels.data()[i] = rng.normal();
    layer.bias.resize(3);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
        layer.bias[i] = rng.normal();

    isr::nn::Tensor x = isr::nn::Tensor::zeros({2, 2, 7, 7});
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
        x.data[i] = rng.normal();
    isr::nn::Tensor target = isr::nn::Tensor::zeros({2, 3, 4, 4});
    for (Eigen::Index i = 0; i < target.data.size(); ++i)
        target.data[i] = rng.normal();

    auto loss_fn = [&]() {
        return 0.5 * (isr::nn::conv2d_apply(layer, x).data - target.data).squaredNorm();
    };
    isr::nn::Tensor dy = isr::nn::conv2d_apply(layer, x);
    dy.data -= target.data;
    isr::nn::ConvGrads grads = isr::nn::conv2d_grad(layer, x, dy);
    std::vector<isr::nn::ParamView> params = {
        {"kernels", layer.kernels.data(), layer.kernels.size()},
        {"bias", layer.bias.data(), layer.bias.size()},
        {"input", x.data.data(), x.data.size()}};
    std::vector<Eigen::VectorXd> analytic = {
        Eigen::Map<const Eigen::VectorXd>(grads.dkernels.data(), grads.dkernels.size()),
        grads.dbias, grads.dx.data};
    const auto report = isr::nn::gradient_check(params, analytic, loss_fn, 1e-6);
    state.report("conv backward matches finite differences",
                 report.max_rel_error < 1e-5,
                 "max rel err " + std::to_string(report.max_rel_error) + " at " +
                     report.worst_param);
}

void verify_joint_backward(VerifyState& state)
{
    isr::NetworkSpec spec;
    spec.input_dim = 12;
    spec.latent_dim = 3;
    spec.encoder_hidden = {6};
    spec.image_size = 8;
    spec.conv_channels = {2, 3};
    spec.fc4_units = 5;
    spec.dropout_ratio = 0.0; // finite differences need a deterministic loss

    isr::Rng rng(13);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(spec.input_dim);
    isr::JointNetwork net = isr::JointNetwork::init(spec, mean, rng);
    // Nudge every parameter (including the zero-init biases) so that no
    // pre-activation sits exactly on a ReLU kink; the loss must be
    // differentiable at the point where finite differences are taken.
    for (isr::nn::ParamView& v : net.param_views())
        for (Eigen::Index i = 0; i < v.size; ++i)
            v.data[i] += rng.normal(0.0, 0.05);
    Eigen::MatrixXd x(4, spec.input_dim);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x.data()[i] = rng.normal();
    isr::nn::Tensor imgs = isr::nn::Tensor::zeros({4, 1, 8, 8});
    for (Eigen::Index i = 0; i < imgs.data.size(); ++i)
        imgs.data[i] = rng.uniform();

    const double lambda = 1.0;
    auto loss_fn = [&]() {
        return isr::joint_forward(net, x, imgs, lambda, isr::nn::DropoutMode::train, nullptr)
            .loss;
    };
    const isr::JointForward fwd =
        isr::joint_forward(net, x, imgs, lambda, isr::nn::DropoutMode::train, nullptr);
    const std::vector<Eigen::VectorXd> grads = isr::joint_backward(net, x, fwd, lambda);
    const auto report = isr::nn::gradient_check(net.param_views(), grads, loss_fn, 1e-6);
    state.report("joint loss backward matches finite differences",
                 report.max_rel_error < 1e-5,
                 "max rel err " + std::to_string(report.max_rel_error) + " at " +
                     report.worst_param);
}

void verify_linear_ae_matches_pca(VerifyState& state)
{
    // Low-rank-ish gaussian data; a converged linear autoencoder must span
    // the dominant principal subspace.
    isr::Rng rng(14);
    const int count = 240, dim = 24, latent = 3;
    Eigen::MatrixXd factors(dim, latent);
    for (Eigen::Index i = 0; i < factors.size(); ++i)
        factors.data()[i] = rng.normal();
    Eigen::MatrixXd x(count, dim);
    for (int r = 0; r < count; ++r)
    {
        Eigen::VectorXd z(latent);
        for (int k = 0; k < latent; ++k)
            z[k] = rng.normal(0.0, 3.0 / (k + 1));
        Eigen::VectorXd noise(dim);
        for (int k = 0; k < dim; ++k)
            noise[k] = rng.normal(0.0, 0.05);
        x.row(r) = (factors * z + noise).transpose();
    }

    isr::NetworkSpec spec;
    spec.input_dim = dim;
    spec.latent_dim = latent;
    spec.encoder_hidden = {};
    spec.linear_encoder = true;
    isr::TrainConfig cfg;
    cfg.batch_size = count;
    cfg.lr = 0.02;
    cfg.lambda_couple = 0.0;
    cfg.epochs = 600;
    cfg.seed = 5;
    cfg.weight_decay = 0.0;
    cfg.dropout = 0.0;
    const isr::TrainResult result = isr::train_joint({x, {}}, spec, cfg);

    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    Eigen::MatrixXd pca = svd.matrixV().leftCols(latent);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(result.model.net.decoder.W);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, latent);
    Eigen::JacobiSVD<Eigen::MatrixXd> overlap(q.transpose() * pca);
    const double worst_cos = overlap.singularValues().minCoeff();
    const double angle_deg = std::acos(std::clamp(worst_cos, -1.0, 1.0)) * 180.0 / M_PI;
    state.report("converged linear autoencoder spans the principal subspace",
                 angle_deg < 5.0,
                 "largest principal angle " + std::to_string(angle_deg) + " deg");
}

void verify_procrustes_recovery(VerifyState& state)
{
    isr::Rng rng(15);
    const int n = 50;
    Eigen::VectorXd coords(3 * n);
    for (Eigen::Index i = 0; i < coords.size(); ++i)
        coords[i] = rng.normal(0.0, 10.0);
    const isr::PointCloud source{coords};

    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = 0.8;
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    isr::SimilarityTransform truth;
    truth.rotation = rot;
    truth.scale = 1.7;
    truth.translation = Eigen::Vector3d(4.0, -2.0, 9.0);
    const isr::PointCloud target = truth.apply(source);

    const isr::ProcrustesResult fit = isr::procrustes_align(source, target);
    const double rot_err = (fit.transform.rotation - rot).cwiseAbs().maxCoeff();
    const double scale_err = std::abs(fit.transform.scale - truth.scale);
    const double trans_err =
        (fit.transform.translation - truth.translation).cwiseAbs().maxCoeff();
    const double resid = (fit.aligned.coords - target.coords).cwiseAbs().maxCoeff();
    const bool ok = rot_err < 1e-9 && scale_err < 1e-9 && trans_err < 1e-9 && resid < 1e-9;
    state.report("similarity alignment recovers a known transform", ok,
                 "rot " + std::to_string(rot_err) + ", scale " + std::to_string(scale_err) +
                     ", trans " + std::to_string(trans_err) + ", resid " +
                     std::to_string(resid));
}

void verify_normals(VerifyState& state)
{
    // A flat square in the xy plane: every vertex normal is exactly +z.
    isr::TriangleMesh square;
    square.cloud = isr::PointCloud::from_points({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}});
    square.faces = {{0, 1, 2}, {0, 2, 3}};
    const auto normals = isr::vertex_normals(square);
    bool ok = true;
    for (const auto& nrm : normals)
        ok = ok && (nrm - Eigen::Vector3d(0, 0, 1)).cwiseAbs().maxCoeff() < 1e-12 &&
             isr::normal_angle(nrm, Eigen::Vector3d(0, 0, 1)) < 1e-9;
    state.report("flat-square vertex normals are exactly +z", ok);
}

void verify_determinism(VerifyState& state)
{
    isr::Rng a(42), b(42);
    bool ok = true;
    for (int i = 0; i < 1000; ++i)
        ok = ok && a.normal() == b.normal() && a.uniform() == b.uniform();
    state.report("seeded rng streams are identical", ok);

    isr::GroundTruthConfig cfg;
    cfg.n_grid = 15;
    const isr::GroundTruthModel gt = isr::build_ground_truth_model(cfg);
    isr::RenderConfig rc;
    const isr::GrayImage img1 = isr::render_orthographic(gt.mesh, rc);
    const isr::GrayImage img2 = isr::render_orthographic(gt.mesh, rc);
    state.report("rendering is deterministic", img1.pixels == img2.pixels);
}

int run_verify()
{
    VerifyState state;
    verify_dense_backward(state);
    verify_conv_backward(state);
    verify_joint_backward(state);
    verify_linear_ae_matches_pca(state);
    verify_procrustes_recovery(state);
    verify_normals(state);
    verify_determinism(state);
    if (state.failures > 0)
    {
        std::cout << state.failures << " check(s) failed\n";
        return 1;
    }
    std::cout << "all checks passed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Joint shape-space learning for single-image 3D reconstruction"};
    app.require_subcommand(1);
    app.footer("Defaults are desk-scale so everything runs in minutes on a laptop.\n"
               "The full-scale reference configuration uses 10000 training samples,\n"
               "latent dimension 280, batch size 60, dropout 0.6 and weight decay 5e-4\n"
               "on 32x32 grayscale images.");

    GenDataArgs gen;
    CLI::App* gen_cmd =
        app.add_subcommand("gen-data", "Generate a synthetic shape/image dataset");
    gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();
    gen_cmd->add_option("--count", gen.count, "Number of samples")->capture_default_str();
    gen_cmd->add_option("--pose-fraction", gen.pose_fraction,
                        "Fraction rendered at a random yaw")->capture_default_str();
    gen_cmd->add_option("--max-yaw", gen.max_yaw, "Yaw range bound in degrees")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();
    gen_cmd->add_option("--split-train", gen.split_train, "Training split fraction")->capture_default_str();
    gen_cmd->add_option("--split-test", gen.split_test, "Test split fraction")->capture_default_str();
    gen_cmd->add_option("--grid", gen.grid, "Vertices per grid side (n = grid^2)")->capture_default_str();
    gen_cmd->add_option("--d-true", gen.d_true, "Generating basis dimension")->capture_default_str();
    gen_cmd->add_option("--sigma0", gen.sigma0, "Coefficient prior scale")->capture_default_str();
    gen_cmd->add_option("--basis-scale", gen.basis_scale,
                        "Per-vertex RMS displacement of each basis column (mm)")->capture_default_str();
    gen_cmd->add_option("--gt-seed", gen.gt_seed, "Ground-truth model seed")->capture_default_str();
    gen_cmd->add_option("--resolution", gen.resolution, "Image resolution in pixels")->capture_default_str();
    gen_cmd->add_option("--ambient", gen.ambient, "Ambient light term")->capture_default_str();
    gen_cmd->add_option("--splat-radius", gen.splat_radius, "Vertex splat radius")->capture_default_str();
    gen_cmd->add_option("--light", gen.light, "Light direction x y z")->expected(3);
    gen_cmd->add_flag("--force", gen.force, "Replace an existing output directory");
    wire_config_and_run(gen_cmd, gen.config, [&gen]() { run_gen_data(gen); });

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "Train the joint model on a dataset");
    train_cmd->add_option("--data", train.data, "Dataset directory")->required();
    train_cmd->add_option("--out", train.out, "Checkpoint output path")->required();
    train_cmd->add_option("--loss-log", train.loss_log,
                          "Per-epoch loss CSV (default <out>.losses.csv)");
    train_cmd->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--batch", train.batch, "Mini-batch size")->capture_default_str();
    train_cmd->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--lambda", train.lambda, "Coupling weight between the two losses")->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "Training seed")->capture_default_str();
    train_cmd->add_option("--weight-decay", train.weight_decay, "Decoupled weight decay")->capture_default_str();
    train_cmd->add_option("--dropout", train.dropout, "Dropout ratio after fc4")->capture_default_str();
    train_cmd->add_option("--precision", train.precision, "Checkpoint precision: f32 or f64")->capture_default_str();
    train_cmd->add_option("--latent", train.latent, "Latent dimension")->capture_default_str();
    train_cmd->add_option("--hidden", train.hidden, "Encoder hidden widths")->capture_default_str()
        ->delimiter(',');
    train_cmd->add_flag("--linear-encoder", train.linear_encoder,
                        "Disable encoder activations (linear autoencoder)");
    train_cmd->add_option("--conv-channels", train.conv_channels, "Conv channels per layer")->capture_default_str()
        ->delimiter(',');
    train_cmd->add_option("--conv-kernel", train.conv_kernel, "Conv kernel size (odd)")->capture_default_str();
    train_cmd->add_option("--conv-stride", train.conv_stride, "Conv stride")->capture_default_str();
    train_cmd->add_option("--fc4", train.fc4, "Width of the dense layer after the convs")->capture_default_str();
    wire_config_and_run(train_cmd, train.config, [&train]() { run_train(train); });

    ReconstructArgs rec;
    CLI::App* rec_cmd =
        app.add_subcommand("reconstruct", "Reconstruct 3D shapes from dataset images");
    rec_cmd->add_option("--model", rec.model, "Checkpoint path")->required();
    rec_cmd->add_option("--data", rec.data, "Dataset directory");
    rec_cmd->add_option("--image", rec.image, "Reconstruct a single PGM image instead");
    rec_cmd->add_option("--ids", rec.ids_text,
                        "Sample ids, e.g. 1,4,7..10 (default: the whole test split)");
    rec_cmd->add_option("--out", rec.out, "Output directory")->required();
    wire_config_and_run(rec_cmd, rec.config, [&rec]() { run_reconstruct(rec); });

    EvaluateArgs eval;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "Evaluate a checkpoint against ground truth");
    eval_cmd->add_option("--model", eval.model, "Checkpoint path")->required();
    eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();
    eval_cmd->add_option("--out", eval.out, "Report output directory")->required();
    eval_cmd->add_option("--split", eval.split, "Split to evaluate: train, test or all")->capture_default_str();
    CLI::Option* sweep_opt =
        eval_cmd
            ->add_option("--pose-sweep", eval.sweep_angles,
                         "Also measure error as a function of yaw; optional comma list of "
                         "angles, default sweep-min..sweep-max stepped by sweep-step")
            ->expected(0, 1);
    eval_cmd->add_option("--sweep-step", eval.sweep_step, "Yaw step in degrees")->capture_default_str();
    eval_cmd->add_option("--sweep-samples", eval.sweep_samples, "Shapes per yaw angle")->capture_default_str();
    eval_cmd->add_option("--sweep-min", eval.sweep_min, "Sweep start angle")->capture_default_str();
    eval_cmd->add_option("--sweep-max", eval.sweep_max, "Sweep end angle")->capture_default_str();
    eval_cmd->add_option("--sweep-seed", eval.sweep_seed, "Sweep sampling seed")->capture_default_str();
    eval_cmd->add_flag("--direct", eval.direct,
                       "Also train the direct coefficient-regression baseline");
    eval_cmd->add_option("--direct-epochs", eval.direct_epochs,
                         "Epochs for the direct baseline")->capture_default_str();
    wire_config_and_run(eval_cmd, eval.config, [&eval, sweep_opt]() {
        // a bare --pose-sweep stores one empty result; a config-file `true` the string
        eval.pose_sweep = sweep_opt->count() > 0;
        if (eval.sweep_angles == "true")
            eval.sweep_angles.clear();
        run_evaluate(eval);
    });

    CLI::App* verify_cmd = app.add_subcommand(
        "verify", "Run the fast self-check battery (gradients, alignment, determinism)");
    int verify_result = 0;
    verify_cmd->callback([&verify_result]() { verify_result = run_verify(); });

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e);
    }
    catch (const isr::ValidationError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    catch (const isr::IoError& e)
    {
        std::cerr << "io error: " << e.what() << '\n';
        return 2;
    }
    catch (const isr::NumericError& e)
    {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return verify_result;
}
