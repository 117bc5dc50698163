/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/evaluation_pipeline.cpp
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
#include "isr/evaluation_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>

#include <json.hpp>

#include "isr/errors.hpp"
#include "isr/nn/adam.hpp"
#include "isr/reconstruction.hpp"
#include "isr/rng.hpp"

namespace fs = std::filesystem;

namespace isr {

namespace {

GrayImage image_from_tensor(const nn::Tensor& images, int id, int res)
{
    GrayImage img(res, res);
    img.pixels = images.data.segment(static_cast<Eigen::Index>(id) * res * res,
                                     static_cast<Eigen::Index>(res) * res);
    return img;
}

double sorted_quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty())
        return 0.0;
    const auto m = static_cast<double>(sorted.size());
    auto k = static_cast<std::ptrdiff_t>(std::ceil(q * m)) - 1;
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
    return sorted[static_cast<std::size_t>(k)];
}

std::string heatmap_name(int id)
{
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%05d_err.pgm", id);
    return buf;
}

// 36 equal bins over [0, 180] degrees; 180 itself lands in the last bin.
std::vector<int> pooled_histogram(const std::vector<double>& angles)
{
    std::vector<int> hist(36, 0);
    for (double a : angles)
    {
        int bin = static_cast<int>(a / 180.0 * 36.0);
        bin = std::clamp(bin, 0, 35);
        ++hist[static_cast<std::size_t>(bin)];
    }
    return hist;
}

} // namespace

EvaluationReport evaluate_model(const TrainedModel& model, const Dataset& data, Split split,
                                const std::string& out_dir)
{
    const std::vector<int> ids = split_ids(data, split);
    if (ids.empty())
        throw ValidationError("evaluate: the chosen split is empty");
    const int res = data.manifest.resolution;
    if (model.net.spec.image_size != res)
        throw ValidationError("evaluate: network expects " +
                              std::to_string(model.net.spec.image_size) +
                              "px images, the dataset stores " + std::to_string(res) + "px");

    if (!out_dir.empty())
        fs::create_directories(fs::path(out_dir) / "images");

    TriangleMesh recon_mesh = data.bundle.mesh;
    TriangleMesh truth_mesh = data.bundle.mesh;
    const PointCloud mean_cloud{model.mean_shape};

    EvaluationReport report;
    std::vector<double> all_angles;
    all_angles.reserve(ids.size() * static_cast<std::size_t>(data.manifest.n));

    for (int id : ids)
    {
        const GrayImage img = image_from_tensor(data.images, id, res);
        const ReconstructionResult recon = reconstruct(model, img, id);
        const PointCloud truth{data.shapes.row(id).transpose()};

        const ProcrustesResult fit = procrustes_align(recon.cloud, truth);
        const VertexErrorMap errs = per_vertex_mse(fit.aligned, truth);
        const ProcrustesResult base_fit = procrustes_align(mean_cloud, truth);
        const VertexErrorMap base_errs = per_vertex_mse(base_fit.aligned, truth);

        recon_mesh.cloud = fit.aligned;
        truth_mesh.cloud = truth;
        const NormalAngleDistribution angles =
            normal_angle_distribution(recon_mesh, truth_mesh);

        SampleEval se;
        se.id = id;
        se.mean_mse = errs.mean();
        se.baseline_mse = base_errs.mean();
        se.mean_angle_deg = angles.mean_deg;
        se.p95_angle_deg = angles.p95_deg;
        report.samples.push_back(se);

        for (Eigen::Index k = 0; k < angles.angles_deg.size(); ++k)
            all_angles.push_back(angles.angles_deg[k]);

        if (!out_dir.empty())
        {
            const VertexErrorMap scaled = scale_map_01(errs);
            const GrayImage heat =
                render_vertex_values(truth_mesh, scaled.values, data.bundle.render_cfg);
            save_pgm(fs::path(out_dir) / "images" / heatmap_name(id), heat);
        }
    }

    for (const SampleEval& se : report.samples)
    {
        report.mean_mse += se.mean_mse;
        report.baseline_mean_mse += se.baseline_mse;
    }
    report.mean_mse /= static_cast<double>(report.samples.size());
    report.baseline_mean_mse /= static_cast<double>(report.samples.size());

    report.mean_angle_deg =
        std::accumulate(all_angles.begin(), all_angles.end(), 0.0) /
        static_cast<double>(all_angles.size());
    report.angle_histogram = pooled_histogram(all_angles);
    std::sort(all_angles.begin(), all_angles.end());
    report.median_angle_deg = sorted_quantile(all_angles, 0.5);
    report.p95_angle_deg = sorted_quantile(all_angles, 0.95);

    if (!out_dir.empty())
        write_evaluation_report(report, out_dir);
    return report;
}

void write_evaluation_report(const EvaluationReport& report, const std::string& out_dir)
{
    fs::create_directories(out_dir);
    {
        std::ofstream csv(fs::path(out_dir) / "per_sample.csv", std::ios::trunc);
        if (!csv)
            throw IoError("cannot open for writing: " + out_dir + "/per_sample.csv");
        csv << "id,mean_mse,baseline_mse,mean_angle_deg,p95_angle_deg\n";
        csv << std::setprecision(17);
        for (const SampleEval& se : report.samples)
            csv << se.id << ',' << se.mean_mse << ',' << se.baseline_mse << ','
                << se.mean_angle_deg << ',' << se.p95_angle_deg << '\n';
        if (!csv)
            throw IoError("failed while writing per_sample.csv");
    }
    {
        nlohmann::json j;
        j["count"] = report.samples.size();
        j["mean_mse"] = report.mean_mse;
        j["baseline_mean_mse"] = report.baseline_mean_mse;
        j["mean_angle_deg"] = report.mean_angle_deg;
        j["median_angle_deg"] = report.median_angle_deg;
        j["p95_angle_deg"] = report.p95_angle_deg;
        j["angle_histogram"] = report.angle_histogram;
        std::ofstream js(fs::path(out_dir) / "summary.json", std::ios::trunc);
        if (!js)
            throw IoError("cannot open for writing: " + out_dir + "/summary.json");
        js << j.dump(2) << '\n';
        if (!js)
            throw IoError("failed while writing summary.json");
    }
}

std::vector<PoseSweepPoint> pose_sweep(const TrainedModel& model, const GroundTruthBundle& gt,
                                       int samples_per_angle,
                                       const std::vector<double>& angles_deg,
                                       std::uint64_t seed)
{
    if (samples_per_angle <= 0)
        throw ValidationError("pose sweep: samples_per_angle must be positive");
    for (double angle : angles_deg)
        Pose{angle}.validate();

    // One fixed set of shapes reused at every angle isolates the pose effect.
    const std::vector<LatentCode> zs = sample_coefficients(gt.model, samples_per_angle, seed);
    std::vector<PointCloud> truths;
    truths.reserve(zs.size());
    for (const LatentCode& z : zs)
        truths.push_back(synthesize_shape(gt.model, z));

    TriangleMesh view = gt.mesh;
    std::vector<PoseSweepPoint> sweep;
    for (double angle : angles_deg)
    {
        double sum = 0.0;
        for (const PointCloud& truth : truths)
        {
            view.cloud = rotate_yaw(truth, Pose{angle});
            const GrayImage img = render_orthographic(view, gt.render_cfg);
            const ReconstructionResult recon = reconstruct(model, img);
            const ProcrustesResult fit = procrustes_align(recon.cloud, truth);
            sum += per_vertex_mse(fit.aligned, truth).mean();
        }
        sweep.push_back({angle, sum / samples_per_angle});
    }
    return sweep;
}

std::vector<PoseSweepPoint> pose_sweep(const TrainedModel& model, const GroundTruthBundle& gt,
                                       int samples_per_angle, double min_deg, double max_deg,
                                       double step_deg, std::uint64_t seed)
{
    if (!(step_deg > 0.0))
        throw ValidationError("pose sweep: step must be positive");
    if (min_deg > max_deg)
        throw ValidationError("pose sweep: min angle exceeds max angle");
    std::vector<double> angles;
    for (double angle = min_deg; angle <= max_deg + 1e-9; angle += step_deg)
        angles.push_back(angle);
    return pose_sweep(model, gt, samples_per_angle, angles, seed);
}

void write_pose_sweep_csv(const std::string& path, const std::vector<PoseSweepPoint>& sweep)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    out << "angle_deg,mean_mse\n";
    out << std::setprecision(17);
    for (const PoseSweepPoint& p : sweep)
        out << p.angle_deg << ',' << p.mean_mse << '\n';
    if (!out)
        throw IoError("failed while writing: " + path);
}

DirectRegressionReport train_direct_regression(const Dataset& data, const TrainConfig& cfg,
                                               const NetworkSpec& base_spec, Split eval_split)
{
    cfg.validate();
    const std::vector<int> train_ids = split_ids(data, Split::train);
    if (train_ids.empty())
        throw ValidationError("direct regression: empty training split");
    const int d = data.manifest.d_true;
    const int res = data.manifest.resolution;

    // Same CNN, but its head regresses the true generating coefficients.
    NetworkSpec spec = base_spec;
    spec.latent_dim = d;
    spec.image_size = res;
    spec.input_dim = 1; // the autoencoder half is unused
    spec.encoder_hidden.clear();
    spec.dropout_ratio = cfg.dropout;
    spec.validate();

    Rng rng(cfg.seed);
    JointNetwork net = JointNetwork::init(spec, Eigen::VectorXd::Zero(1), rng);

    // Only the CNN tensors take part: convs, fc4, fc5 (the tail of the
    // parameter order, after decoder W/b and one encoder layer W/b).
    const std::size_t skip = 4;
    std::vector<nn::AdamState> states(net.param_views().size() - skip);
    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;

    const Eigen::Index pix = static_cast<Eigen::Index>(res) * res;
    std::vector<int> order = train_ids;
    const int count = static_cast<int>(order.size());

    DirectRegressionReport report;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch)
    {
        rng.shuffle(order);
        double sum_loss = 0.0;
        int batch_index = 0;
        for (int start = 0; start < count; start += cfg.batch_size, ++batch_index)
        {
            const int b = std::min(cfg.batch_size, count - start);
            nn::Tensor imgs = nn::Tensor::zeros({b, 1, res, res});
            Eigen::MatrixXd target(b, d);
            for (int r = 0; r < b; ++r)
            {
                const int id = order[static_cast<std::size_t>(start + r)];
                imgs.data.segment(static_cast<Eigen::Index>(r) * pix, pix) =
                    data.images.data.segment(static_cast<Eigen::Index>(id) * pix, pix);
                target.row(r) = data.coeffs.row(id);
            }

            // Forward through the conv stack, fc4, dropout, fc5.
            std::vector<nn::Tensor> conv_inputs, conv_pre;
            nn::Tensor t = imgs;
            for (const auto& conv : net.convs)
            {
                conv_inputs.push_back(t);
                nn::Tensor pre = nn::conv2d_apply(conv, t);
                conv_pre.push_back(pre);
                t = nn::relu_apply(pre);
            }
            const int chw = spec.conv_output_dim();
            Eigen::MatrixXd flat(b, chw);
            for (int r = 0; r < b; ++r)
                flat.row(r) =
                    t.data.segment(static_cast<Eigen::Index>(r) * chw, chw).transpose();
            Eigen::MatrixXd fc4_pre = nn::dense_apply(net.fc4, flat);
            Eigen::MatrixXd fc4_act = nn::relu_apply(fc4_pre);
            nn::DropoutResult drop =
                nn::dropout_apply(fc4_act, spec.dropout_ratio, nn::DropoutMode::train, rng);
            Eigen::MatrixXd y = nn::dense_apply(net.fc5, drop.output);

            const double loss = (y - target).squaredNorm() / (b * static_cast<double>(d));
            if (!std::isfinite(loss))
                throw NumericError("direct regression: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index));

            // Backward.
            Eigen::MatrixXd dy = (2.0 / (b * static_cast<double>(d))) * (y - target);
            nn::DenseGrads g5 = nn::dense_grad(net.fc5, drop.output, dy);
            Eigen::MatrixXd d_drop = g5.dx.cwiseProduct(drop.mask);
            Eigen::MatrixXd d_fc4pre = nn::relu_grad(fc4_pre, d_drop);
            nn::DenseGrads g4 = nn::dense_grad(net.fc4, flat, d_fc4pre);
            nn::Tensor d_act = nn::Tensor::zeros(conv_pre.back().shape);
            for (int r = 0; r < b; ++r)
                d_act.data.segment(static_cast<Eigen::Index>(r) * chw, chw) =
                    g4.dx.row(r).transpose();
            std::vector<Eigen::MatrixXd> conv_dk(net.convs.size());
            std::vector<Eigen::VectorXd> conv_db(net.convs.size());
            for (int i = static_cast<int>(net.convs.size()) - 1; i >= 0; --i)
            {
                nn::Tensor d_pre = nn::relu_grad(conv_pre[static_cast<std::size_t>(i)], d_act);
                nn::ConvGrads g = nn::conv2d_grad(net.convs[static_cast<std::size_t>(i)],
                                                  conv_inputs[static_cast<std::size_t>(i)],
                                                  d_pre);
                conv_dk[static_cast<std::size_t>(i)] = std::move(g.dkernels);
                conv_db[static_cast<std::size_t>(i)] = std::move(g.dbias);
                d_act = std::move(g.dx);
            }

            std::vector<Eigen::VectorXd> grads;
            for (std::size_t i = 0; i < net.convs.size(); ++i)
            {
                grads.emplace_back(Eigen::Map<const Eigen::VectorXd>(conv_dk[i].data(),
                                                                     conv_dk[i].size()));
                grads.push_back(conv_db[i]);
            }
            grads.emplace_back(Eigen::Map<const Eigen::VectorXd>(g4.dW.data(), g4.dW.size()));
            grads.push_back(g4.db);
            grads.emplace_back(Eigen::Map<const Eigen::VectorXd>(g5.dW.data(), g5.dW.size()));
            grads.push_back(g5.db);

            std::vector<nn::ParamView> views = net.param_views();
            for (std::size_t p = 0; p < grads.size(); ++p)
            {
                Eigen::Map<Eigen::VectorXd> param(views[skip + p].data, views[skip + p].size);
                adam_step(param, grads[p], states[p], adam);
            }
            sum_loss += loss * b;
        }
        EpochLog log;
        log.epoch = epoch;
        log.j2 = sum_loss / count;
        log.total = log.j2;
        report.history.push_back(log);
    }

    // Evaluate: regress coefficients, decode through the ground-truth basis,
    // align and measure exactly like evaluate_model.
    const std::vector<int> eval_ids = split_ids(data, eval_split);
    if (eval_ids.empty())
        throw ValidationError("direct regression: empty evaluation split");
    TriangleMesh pred_mesh = data.bundle.mesh;
    TriangleMesh truth_mesh = data.bundle.mesh;
    std::vector<double> all_angles;
    all_angles.reserve(eval_ids.size() * static_cast<std::size_t>(data.manifest.n));
    double sum_mse = 0.0;
    for (int id : eval_ids)
    {
        const GrayImage img = image_from_tensor(data.images, id, res);
        nn::Tensor one = nn::Tensor::zeros({1, 1, res, res});
        one.data = img.pixels;
        const Eigen::VectorXd y = net.cnn_eval(one);
        const PointCloud pred =
            synthesize_shape(data.bundle.model, LatentCode(y));
        const PointCloud truth{data.shapes.row(id).transpose()};
        const ProcrustesResult fit = procrustes_align(pred, truth);
        sum_mse += per_vertex_mse(fit.aligned, truth).mean();

        pred_mesh.cloud = fit.aligned;
        truth_mesh.cloud = truth;
        const NormalAngleDistribution angles =
            normal_angle_distribution(pred_mesh, truth_mesh);
        for (Eigen::Index k = 0; k < angles.angles_deg.size(); ++k)
            all_angles.push_back(angles.angles_deg[k]);
    }
    report.mean_mse = sum_mse / static_cast<double>(eval_ids.size());
    report.mean_angle_deg =
        std::accumulate(all_angles.begin(), all_angles.end(), 0.0) /
        static_cast<double>(all_angles.size());
    report.angle_histogram = pooled_histogram(all_angles);
    return report;
}

} // namespace isr
