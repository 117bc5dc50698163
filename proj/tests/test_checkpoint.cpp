/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: tests/test_checkpoint.cpp
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
#include <sstream>

#include "isr/checkpoint.hpp"
#include "isr/errors.hpp"
#include "isr/reconstruction.hpp"
#include "test_support.hpp"

using namespace isr;
namespace fs = std::filesystem;

namespace {

NetworkSpec tiny_spec()
{
    NetworkSpec spec;
    spec.input_dim = 12;
    spec.latent_dim = 3;
    spec.encoder_hidden = {6};
    spec.image_size = 8;
    spec.conv_channels = {2, 3};
    spec.fc4_units = 5;
    spec.dropout_ratio = 0.0;
    return spec;
}

TrainedModel tiny_model(Precision precision, std::uint64_t seed)
{
    const NetworkSpec spec = tiny_spec();
    Rng rng(seed);
    TrainingSet data;
    data.shapes.resize(16, spec.input_dim);
    for (Eigen::Index i = 0; i < data.shapes.size(); ++i)
        data.shapes.data()[i] = rng.normal();
    data.images = nn::Tensor::zeros({16, 1, spec.image_size, spec.image_size});
    for (Eigen::Index i = 0; i < data.images.data.size(); ++i)
        data.images.data(i) = rng.uniform();
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    cfg.dropout = 0.0;
    cfg.precision = precision;
    cfg.seed = seed;
    return train_joint(data, spec, cfg, "cafebabe00000000").model;
}

bool params_equal(TrainedModel& a, TrainedModel& b)
{
    auto va = a.net.param_views();
    auto vb = b.net.param_views();
    if (va.size() != vb.size())
        return false;
    for (std::size_t p = 0; p < va.size(); ++p)
    {
        if (va[p].size != vb[p].size)
            return false;
        for (Eigen::Index i = 0; i < va[p].size; ++i)
            if (va[p].data[i] != vb[p].data[i])
                return false;
    }
    return a.mean_shape == b.mean_shape;
}

GrayImage random_image(int size, std::uint64_t seed)
{
    Rng rng(seed);
    GrayImage img(size, size);
    for (Eigen::Index i = 0; i < img.pixels.size(); ++i)
        img.pixels(i) = rng.uniform();
    return img;
}

} // namespace

TEST_CASE("checkpoints round-trip bit-identically at both precisions")
{
    const fs::path dir = test::scratch_dir("ckpt_roundtrip");
    for (Precision precision : {Precision::f64, Precision::f32})
    {
        TrainedModel model = tiny_model(precision, 1);
        const fs::path a = dir / (precision == Precision::f64 ? "m64.isrm" : "m32.isrm");
        save_checkpoint(a.string(), model);

        TrainedModel back = load_checkpoint(a.string());
        CHECK(params_equal(model, back));
        CHECK(back.manifest_hash == "cafebabe00000000");
        CHECK(back.final_loss == model.final_loss);
        CHECK(back.config.epochs == model.config.epochs);
        CHECK(back.net.spec.hash() == model.net.spec.hash());

        // saving the loaded model reproduces the file byte for byte
        const fs::path b = dir / "again.isrm";
        save_checkpoint(b.string(), back);
        CHECK(test::same_file_bytes(a, b));
    }
}

TEST_CASE("a wrong magic is an io error naming the mismatch")
{
    const fs::path dir = test::scratch_dir("ckpt_magic");
    TrainedModel model = tiny_model(Precision::f64, 2);
    const fs::path path = dir / "model.isrm";
    save_checkpoint(path.string(), model);

    std::string bytes = test::read_file_bytes(path);
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_WITH_AS(load_checkpoint(path.string()), doctest::Contains("magic"),
                         IoError);

    std::ofstream(dir / "junk.isrm", std::ios::binary) << "PK\x03\x04 something";
    CHECK_THROWS_AS(load_checkpoint((dir / "junk.isrm").string()), IoError);
}

TEST_CASE("truncated and padded checkpoints are io errors")
{
    const fs::path dir = test::scratch_dir("ckpt_trunc");
    TrainedModel model = tiny_model(Precision::f64, 3);
    const fs::path path = dir / "model.isrm";
    save_checkpoint(path.string(), model);
    const std::string bytes = test::read_file_bytes(path);

    std::ofstream(dir / "short.isrm", std::ios::binary)
        << bytes.substr(0, bytes.size() - 16);
    CHECK_THROWS_AS(load_checkpoint((dir / "short.isrm").string()), IoError);

    std::ofstream(dir / "long.isrm", std::ios::binary) << bytes << "extra";
    CHECK_THROWS_AS(load_checkpoint((dir / "long.isrm").string()), IoError);
}

TEST_CASE("an unsupported version is a validation error")
{
    const fs::path dir = test::scratch_dir("ckpt_version");
    TrainedModel model = tiny_model(Precision::f64, 4);
    const fs::path path = dir / "model.isrm";
    save_checkpoint(path.string(), model);
    std::string bytes = test::read_file_bytes(path);
    bytes[4] = 2; // little-endian u32 version right after the magic
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS(load_checkpoint(path.string()), ValidationError);
}

TEST_CASE("reconstruction equals decoding the network's own latent")
{
    TrainedModel model = tiny_model(Precision::f64, 5);
    const GrayImage img = random_image(model.net.spec.image_size, 6);
    const ReconstructionResult res = reconstruct(model, img, 17);
    CHECK(res.source_id == 17);
    REQUIRE(res.latent.size() == model.net.spec.latent_dim);

    const ShapeModel extracted = extract_shape_model(model);
    const PointCloud expect = synthesize_shape(extracted, LatentCode(res.latent));
    CHECK((res.cloud.coords - expect.coords).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reconstruction is deterministic and batch equals single, bitwise")
{
    TrainedModel model = tiny_model(Precision::f64, 7);
    std::vector<GrayImage> images;
    for (std::uint64_t s = 0; s < 4; ++s)
        images.push_back(random_image(model.net.spec.image_size, 20 + s));

    const ReconstructionResult twice_a = reconstruct(model, images[0]);
    const ReconstructionResult twice_b = reconstruct(model, images[0]);
    CHECK(twice_a.latent == twice_b.latent);
    CHECK(twice_a.cloud.coords == twice_b.cloud.coords);

    const auto batch = reconstruct_batch(model, images, {3, 1, 4, 1});
    REQUIRE(batch.size() == images.size());
    CHECK(batch[2].source_id == 4);
    for (std::size_t i = 0; i < images.size(); ++i)
    {
        const ReconstructionResult single = reconstruct(model, images[i]);
        CHECK(batch[i].latent == single.latent);
        CHECK(batch[i].cloud.coords == single.cloud.coords);
    }

    const auto empty = reconstruct_batch(model, {}, {});
    CHECK(empty.empty());
}

TEST_CASE("reconstruction rejects images of the wrong resolution")
{
    TrainedModel model = tiny_model(Precision::f64, 8);
    CHECK_THROWS_AS(reconstruct(model, random_image(model.net.spec.image_size + 1, 9)),
                    ValidationError);
}

TEST_CASE("latent csv lists ids and codes at full precision")
{
    const fs::path dir = test::scratch_dir("latents_csv");
    TrainedModel model = tiny_model(Precision::f64, 10);
    std::vector<GrayImage> images = {random_image(model.net.spec.image_size, 11),
                                     random_image(model.net.spec.image_size, 12)};
    const auto results = reconstruct_batch(model, images, {5, 9});
    const std::string path = (dir / "latents.csv").string();
    write_latents_csv(path, results);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "id,y0,y1,y2");
    for (const auto& res : results)
    {
        std::string line;
        REQUIRE(std::getline(in, line));
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        CHECK(std::stoi(field) == res.source_id);
        for (Eigen::Index k = 0; k < res.latent.size(); ++k)
        {
            std::getline(ss, field, ',');
            CHECK(std::stod(field) == res.latent(k)); // 17 digits round-trip
        }
    }
}
