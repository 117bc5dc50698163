/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: tests/test_datagen.cpp
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

#include <cstdio>
#include <fstream>
#include <regex>
#include <string>

#include "isr/datagen.hpp"
#include "isr/errors.hpp"
#include "test_support.hpp"

using namespace isr;
namespace fs = std::filesystem;

namespace {

GroundTruthModel small_gt()
{
    GroundTruthConfig cfg;
    cfg.n_grid = 10;
    cfg.d_true = 4;
    return build_ground_truth_model(cfg);
}

RenderConfig small_render()
{
    RenderConfig cfg;
    cfg.resolution = 16;
    return cfg;
}

void generate_small(const fs::path& dir, int count, double pose_fraction,
                    std::uint64_t seed = 7)
{
    GenerateConfig cfg;
    cfg.count = count;
    cfg.pose_fraction = pose_fraction;
    cfg.seed = seed;
    generate_dataset(small_gt(), small_render(), cfg, dir.string());
}

std::string image_name(int id)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d.pgm", id);
    return buf;
}

} // namespace

TEST_CASE("pose fraction 0.2 of 10 samples poses exactly 2, fraction 0 poses none")
{
    const fs::path dir = test::scratch_dir("gen_posed");
    generate_small(dir / "a", 10, 0.2);
    const Dataset data = load_dataset((dir / "a").string());
    REQUIRE(data.manifest.count == 10);
    int posed = 0;
    for (Eigen::Index i = 0; i < data.yaw_deg.size(); ++i)
        if (data.yaw_deg(i) != 0.0)
        {
            ++posed;
            CHECK(std::abs(data.yaw_deg(i)) <= 90.0);
        }
    CHECK(posed == 2);

    generate_small(dir / "b", 10, 0.0);
    const Dataset frontal = load_dataset((dir / "b").string());
    CHECK(frontal.yaw_deg.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical config and seed give byte-identical dataset directories")
{
    const fs::path dir = test::scratch_dir("gen_determinism");
    generate_small(dir / "a", 8, 0.25);
    generate_small(dir / "b", 8, 0.25);
    for (const char* name :
         {"manifest.json", "gt_model.bin", "shapes.f32", "coeffs.f32", "poses.csv"})
        CHECK_MESSAGE(test::same_file_bytes(dir / "a" / name, dir / "b" / name), name);
    for (int id = 0; id < 8; ++id)
        CHECK(test::same_file_bytes(dir / "a" / "images" / image_name(id),
                                    dir / "b" / "images" / image_name(id)));
}

TEST_CASE("stored coefficients are the f32 rounding of the seeded prior draw")
{
    const fs::path dir = test::scratch_dir("gen_coeffs");
    generate_small(dir / "d", 6, 0.0, 21);
    const Dataset data = load_dataset((dir / "d").string());

    // independent re-draw from the generating model with the manifest seed
    const auto codes =
        sample_coefficients(data.bundle.model, data.manifest.count, data.manifest.seed);
    REQUIRE(static_cast<int>(codes.size()) == data.manifest.count);
    for (int i = 0; i < data.manifest.count; ++i)
        for (int k = 0; k < data.manifest.d_true; ++k)
        {
            const double expected =
                static_cast<double>(static_cast<float>(codes[static_cast<std::size_t>(i)]
                                                           .values(k)));
            CHECK(data.coeffs(i, k) == expected);
        }
}

TEST_CASE("stored shapes match synthesizing the stored coefficients within f32 noise")
{
    const fs::path dir = test::scratch_dir("gen_shapes");
    generate_small(dir / "d", 5, 0.4, 3);
    const Dataset data = load_dataset((dir / "d").string());
    for (int i = 0; i < data.manifest.count; ++i)
    {
        const PointCloud synth =
            synthesize_shape(data.bundle.model, LatentCode(data.coeffs.row(i).transpose()));
        const double max_err =
            (synth.coords - data.shapes.row(i).transpose()).cwiseAbs().maxCoeff();
        CHECK(max_err <= 1e-4); // f32 rounding of coords and coefficients
    }
}

TEST_CASE("re-rendering a loaded sample reproduces its stored image byte for byte")
{
    const fs::path dir = test::scratch_dir("gen_rerender");
    generate_small(dir / "d", 6, 0.5, 5);
    const Dataset data = load_dataset((dir / "d").string());
    TriangleMesh mesh = data.bundle.mesh;
    for (int id = 0; id < data.manifest.count; ++id)
    {
        mesh.cloud = PointCloud{data.shapes.row(id).transpose()};
        if (data.yaw_deg(id) != 0.0)
            mesh.cloud = rotate_yaw(mesh.cloud, Pose{data.yaw_deg(id)});
        const GrayImage img = render_orthographic(mesh, data.bundle.render_cfg);
        save_pgm(dir / "rerender.pgm", img);
        CHECK_MESSAGE(
            test::same_file_bytes(dir / "rerender.pgm", dir / "d" / "images" / image_name(id)),
            "sample " << id);
    }
}

TEST_CASE("loaded image tensors mirror the stored pgm files")
{
    const fs::path dir = test::scratch_dir("gen_images");
    generate_small(dir / "d", 3, 0.0, 9);
    const Dataset data = load_dataset((dir / "d").string());
    const int res = data.manifest.resolution;
    const GrayImage img = load_pgm(dir / "d" / "images" / image_name(1));
    const Eigen::VectorXd from_tensor =
        data.images.data.segment(static_cast<Eigen::Index>(1) * res * res,
                                 static_cast<Eigen::Index>(res) * res);
    CHECK(img.pixels == from_tensor);
}

TEST_CASE("generation refuses to overwrite an existing directory")
{
    const fs::path dir = test::scratch_dir("gen_exists");
    generate_small(dir / "d", 3, 0.0);
    CHECK_THROWS_AS(generate_small(dir / "d", 3, 0.0), IoError);
}

TEST_CASE("a truncated shapes file is reported with expected and actual byte counts")
{
    const fs::path dir = test::scratch_dir("gen_truncated");
    generate_small(dir / "d", 4, 0.0);
    const auto path = dir / "d" / "shapes.f32";
    const auto full = test::read_file_bytes(path);
    std::ofstream(path, std::ios::binary | std::ios::trunc)
        << full.substr(0, full.size() / 2);
    try
    {
        load_dataset((dir / "d").string());
        FAIL("expected IoError");
    }
    catch (const IoError& e)
    {
        const std::string msg = e.what();
        CHECK(msg.find("bytes") != std::string::npos);
        CHECK(msg.find(std::to_string(full.size())) != std::string::npos);
        CHECK(msg.find(std::to_string(full.size() / 2)) != std::string::npos);
    }
}

TEST_CASE("zero-count and unknown-version manifests are rejected at load")
{
    const fs::path dir = test::scratch_dir("gen_manifest");
    generate_small(dir / "d", 3, 0.0);
    const auto manifest_path = dir / "d" / "manifest.json";
    const std::string original = test::read_file_bytes(manifest_path);

    std::string zero = std::regex_replace(original, std::regex("\"count\": 3"),
                                          "\"count\": 0");
    REQUIRE(zero != original);
    std::ofstream(manifest_path, std::ios::trunc) << zero;
    CHECK_THROWS_AS(load_dataset((dir / "d").string()), ValidationError);

    std::string bumped = std::regex_replace(original, std::regex("\"version\": 1"),
                                            "\"version\": 2");
    REQUIRE(bumped != original);
    std::ofstream(manifest_path, std::ios::trunc) << bumped;
    CHECK_THROWS_AS(load_dataset((dir / "d").string()), ValidationError);

    std::ofstream(manifest_path, std::ios::trunc) << "not json";
    CHECK_THROWS_AS(load_dataset((dir / "d").string()), ValidationError);
}

TEST_CASE("missing files are io errors naming the path")
{
    const fs::path dir = test::scratch_dir("gen_missing");
    generate_small(dir / "d", 3, 0.0);
    fs::remove(dir / "d" / "coeffs.f32");
    CHECK_THROWS_WITH_AS(load_dataset((dir / "d").string()),
                         doctest::Contains("coeffs.f32"), IoError);
    CHECK_THROWS_AS(load_dataset((dir / "nowhere").string()), IoError);
}

TEST_CASE("the split is contiguous and the training set mirrors the rows")
{
    const fs::path dir = test::scratch_dir("gen_split");
    GenerateConfig cfg;
    cfg.count = 10;
    cfg.pose_fraction = 0.0;
    cfg.split_train = 0.8;
    cfg.split_test = 0.2;
    generate_dataset(small_gt(), small_render(), cfg, (dir / "d").string());
    const Dataset data = load_dataset((dir / "d").string());

    CHECK(data.test_count() == 2);
    CHECK(data.train_count() == 8);
    CHECK(split_ids(data, Split::train) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(split_ids(data, Split::test) == std::vector<int>{8, 9});
    CHECK(split_ids(data, Split::all).size() == 10);

    const TrainingSet train = make_training_set(data, Split::train);
    REQUIRE(train.count() == 8);
    CHECK(train.shapes.row(3) == data.shapes.row(3));
    const int res = data.manifest.resolution;
    CHECK(train.images.data.segment(0, res * res) ==
          data.images.data.segment(0, res * res));

    const TrainingSet test_set = make_training_set(data, Split::test);
    REQUIRE(test_set.count() == 2);
    CHECK(test_set.shapes.row(0) == data.shapes.row(8));
}

TEST_CASE("the ground-truth bundle round-trips exactly")
{
    const fs::path dir = test::scratch_dir("bundle");
    GroundTruthBundle bundle;
    const GroundTruthModel gt = small_gt();
    bundle.model = gt.model;
    bundle.mesh = gt.mesh;
    bundle.render_cfg = small_render();
    save_bundle((dir / "gt.bin").string(), bundle);
    const GroundTruthBundle back = load_bundle((dir / "gt.bin").string());
    CHECK(back.model.mean == bundle.model.mean);
    CHECK(back.model.basis == bundle.model.basis);
    CHECK(back.model.coeff_sigma == bundle.model.coeff_sigma);
    CHECK(back.mesh.cloud.coords == bundle.mesh.cloud.coords);
    CHECK(back.mesh.faces == bundle.mesh.faces);
    CHECK(back.render_cfg.resolution == bundle.render_cfg.resolution);
    CHECK(back.render_cfg.light_dir == bundle.render_cfg.light_dir);

    // a rewrite of the loaded bundle is byte-identical
    save_bundle((dir / "gt2.bin").string(), back);
    CHECK(test::same_file_bytes(dir / "gt.bin", dir / "gt2.bin"));
}

TEST_CASE("file hashes use 64-bit fnv-1a")
{
    const fs::path dir = test::scratch_dir("hash");
    std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
    // published fnv-1a reference value for "abc"
    CHECK(file_hash_hex((dir / "abc.txt").string()) == "e71fa2190541574b");
}

TEST_CASE("generate config validation rejects out-of-range fractions")
{
    GenerateConfig cfg;
    cfg.pose_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = GenerateConfig{};
    cfg.count = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = GenerateConfig{};
    cfg.split_train = 0.5;
    cfg.split_test = 0.6; // sums above 1
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
