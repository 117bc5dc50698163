/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: tests/test_pipeline.cpp
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
#include <doctest.h>

#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "isr/errors.hpp"
#include "isr/evaluation_pipeline.hpp"
#include "isr/reconstruction.hpp"
#include "test_support.hpp"

using namespace isr;
namespace fs = std::filesystem;

namespace {

// One small dataset shared by most cases; variance comes from the default
// basis scale, geometry from a 10x10 grid rendered at 16 px.
fs::path make_dataset(const std::string& name, int count, double basis_scale,
                      double pose_fraction = 0.0)
{
    const fs::path dir = test::scratch_dir(name) / "d";
    GroundTruthConfig gcfg;
    gcfg.n_grid = 10;
    gcfg.d_true = 4;
    gcfg.basis_scale = basis_scale;
    RenderConfig rcfg;
    rcfg.resolution = 16;
    GenerateConfig cfg;
    cfg.count = count;
    cfg.pose_fraction = pose_fraction;
    cfg.seed = 77;
    generate_dataset(build_ground_truth_model(gcfg), rcfg, cfg, dir.string());
    return dir;
}

NetworkSpec small_spec(const Dataset& data)
{
    NetworkSpec spec;
    spec.input_dim = 3 * data.manifest.n;
    spec.latent_dim = 4;
    spec.encoder_hidden = {16};
    spec.image_size = data.manifest.resolution;
    spec.conv_channels = {2, 3};
    spec.fc4_units = 8;
    spec.dropout_ratio = 0.0;
    return spec;
}

TrainedModel quick_train(const Dataset& data, int epochs)
{
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 8;
    cfg.lr = 1e-3;
    cfg.dropout = 0.0;
    cfg.seed = 5;
    return train_joint(make_training_set(data, Split::train), small_spec(data), cfg,
                       data.manifest_hash)
        .model;
}

std::vector<std::vector<double>> read_csv_rows(const fs::path& path, int columns)
{
    std::ifstream in(path);
    REQUIRE_MESSAGE(static_cast<bool>(in), "cannot open " << path.string());
    std::string header;
    std::getline(in, header);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line))
    {
        std::stringstream ss(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(ss, field, ','))
            row.push_back(std::stod(field));
        REQUIRE(static_cast<int>(row.size()) == columns);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

TEST_CASE("an identity pipeline scores corpus mean mse zero")
{
    // zero shape variance: every stored sample equals the f32 mean shape, and
    // a decoder with W = 0 and b = that shape reproduces the truth exactly
    const fs::path dir = make_dataset("pipe_identity", 6, 0.0);
    const Dataset data = load_dataset(dir.string());

    Rng rng(1);
    const Eigen::VectorXd truth_shape = data.shapes.row(0).transpose();
    JointNetwork net = JointNetwork::init(small_spec(data), truth_shape, rng);
    net.decoder.W.setZero();
    TrainedModel model;
    model.net = net;
    model.mean_shape = truth_shape;

    const EvaluationReport report = evaluate_model(model, data, Split::all);
    CHECK(report.samples.size() == 6);
    CHECK(report.mean_mse <= 1e-15);
    CHECK(report.baseline_mean_mse <= 1e-15);
    CHECK(report.mean_angle_deg <= 1e-6);
}

TEST_CASE("report aggregates equal a recomputation from the per-sample values")
{
    const fs::path dir = make_dataset("pipe_report", 10, 6.0);
    const Dataset data = load_dataset(dir.string());
    const TrainedModel model = quick_train(data, 1);
    const fs::path out = test::scratch_dir("pipe_report_out");

    const EvaluationReport report =
        evaluate_model(model, data, Split::all, out.string());
    REQUIRE(report.samples.size() == 10);

    double mean = 0.0, baseline = 0.0;
    for (const SampleEval& se : report.samples)
    {
        mean += se.mean_mse;
        baseline += se.baseline_mse;
    }
    CHECK(report.mean_mse == doctest::Approx(mean / 10.0).epsilon(1e-12));
    CHECK(report.baseline_mean_mse == doctest::Approx(baseline / 10.0).epsilon(1e-12));

    // the baseline equals an independent alignment of the training mean
    const PointCloud mean_cloud{model.mean_shape};
    for (const SampleEval& se : report.samples)
    {
        const PointCloud truth{data.shapes.row(se.id).transpose()};
        const ProcrustesResult fit = procrustes_align(mean_cloud, truth);
        const double expect = per_vertex_mse(fit.aligned, truth).mean();
        CHECK(se.baseline_mse == doctest::Approx(expect).epsilon(1e-9));
    }

    // files: per-sample csv rows sum to the written aggregates
    const auto rows = read_csv_rows(out / "per_sample.csv", 5);
    REQUIRE(rows.size() == 10);
    double csv_mean = 0.0;
    for (const auto& row : rows)
        csv_mean += row[1];
    CHECK(csv_mean / 10.0 == doctest::Approx(report.mean_mse).epsilon(1e-9));

    CHECK(fs::exists(out / "summary.json"));
    const std::string summary = test::read_file_bytes(out / "summary.json");
    CHECK(summary.find("mean_mse") != std::string::npos);
    CHECK(summary.find("angle_histogram") != std::string::npos);

    // one heatmap per evaluated sample, rescaled into [0,1]
    for (const SampleEval& se : report.samples)
    {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%05d_err.pgm", se.id);
        CHECK(fs::exists(out / "images" / buf));
    }

    // pooled angle histogram covers every vertex of every sample
    int total = 0;
    for (int c : report.angle_histogram)
        total += c;
    CHECK(total == 10 * data.manifest.n);
}

TEST_CASE("evaluating an empty split is rejected")
{
    const fs::path dir = make_dataset("pipe_empty", 5, 6.0);
    Dataset data = load_dataset(dir.string());
    data.manifest.split_test = 0.0; // no test rows
    const TrainedModel model = quick_train(data, 0);
    CHECK_THROWS_AS(evaluate_model(model, data, Split::test), ValidationError);
}

TEST_CASE("pose sweep: empty list, duplicates and a recompute cross-check")
{
    const fs::path dir = make_dataset("pipe_sweep", 8, 6.0);
    const Dataset data = load_dataset(dir.string());
    const TrainedModel model = quick_train(data, 1);

    CHECK(pose_sweep(model, data.bundle, 3, std::vector<double>{}, 42).empty());

    const auto dup = pose_sweep(model, data.bundle, 3, {30.0, 30.0, -15.0}, 42);
    REQUIRE(dup.size() == 3);
    CHECK(dup[0].mean_mse == dup[1].mean_mse); // duplicates are identical
    CHECK(dup[0].angle_deg == 30.0);

    // manual recompute of one angle, same seed and sample count
    const auto zs = sample_coefficients(data.bundle.model, 3, 42);
    TriangleMesh view = data.bundle.mesh;
    double sum = 0.0;
    for (const LatentCode& z : zs)
    {
        const PointCloud truth = synthesize_shape(data.bundle.model, z);
        view.cloud = rotate_yaw(truth, Pose{-15.0});
        const GrayImage img = render_orthographic(view, data.bundle.render_cfg);
        const ReconstructionResult recon = reconstruct(model, img);
        const ProcrustesResult fit = procrustes_align(recon.cloud, truth);
        sum += per_vertex_mse(fit.aligned, truth).mean();
    }
    CHECK(dup[2].mean_mse == sum / 3.0);

    CHECK_THROWS_AS(pose_sweep(model, data.bundle, 3, {95.0}, 42), ValidationError);
    CHECK_THROWS_AS(pose_sweep(model, data.bundle, 0, {10.0}, 42), ValidationError);

    const fs::path out = test::scratch_dir("pipe_sweep_out");
    write_pose_sweep_csv((out / "sweep.csv").string(), dup);
    const auto rows = read_csv_rows(out / "sweep.csv", 2);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2][0] == -15.0);
    CHECK(rows[2][1] == dup[2].mean_mse);
}

TEST_CASE("zero-epoch direct regression reconstructs near the mean shape")
{
    const fs::path dir = make_dataset("pipe_direct0", 30, 6.0);
    const Dataset data = load_dataset(dir.string());
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.dropout = 0.0;
    NetworkSpec base = small_spec(data);
    const DirectRegressionReport report =
        train_direct_regression(data, cfg, base, Split::test);
    CHECK(report.history.empty());

    // init-decode oracle: untrained outputs are small, so the decoded shapes
    // sit near the generating mean; their error tracks the mean-shape error
    const PointCloud mean_cloud{data.bundle.model.mean};
    double baseline = 0.0;
    const auto ids = split_ids(data, Split::test);
    for (int id : ids)
    {
        const PointCloud truth{data.shapes.row(id).transpose()};
        const ProcrustesResult fit = procrustes_align(mean_cloud, truth);
        baseline += per_vertex_mse(fit.aligned, truth).mean();
    }
    baseline /= static_cast<double>(ids.size());
    CHECK(report.mean_mse > 0.25 * baseline);
    CHECK(report.mean_mse < 2.5 * baseline);
}

TEST_CASE("direct regression is reproducible and its loss falls with training")
{
    const fs::path dir = make_dataset("pipe_direct", 40, 6.0);
    const Dataset data = load_dataset(dir.string());
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 8;
    cfg.lr = 1e-3;
    cfg.dropout = 0.0;
    cfg.seed = 3;
    NetworkSpec base = small_spec(data);

    const DirectRegressionReport a = train_direct_regression(data, cfg, base, Split::test);
    const DirectRegressionReport b = train_direct_regression(data, cfg, base, Split::test);
    CHECK(a.mean_mse == b.mean_mse);
    REQUIRE(a.history.size() == 10);
    CHECK(a.history.back().j2 == b.history.back().j2);

    CHECK(a.history.back().j2 < a.history.front().j2);

    // side-by-side materials: pooled histogram covers the evaluated vertices
    int total = 0;
    for (int c : a.angle_histogram)
        total += c;
    CHECK(total == static_cast<int>(split_ids(data, Split::test).size()) *
                       data.manifest.n);
    CHECK(std::isfinite(a.mean_angle_deg));
}
