/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/datagen.hpp
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

#include "isr/renderer.hpp"
#include "isr/shape_model.hpp"
#include "isr/trainer.hpp"

namespace isr {

/**
 * Dataset layout on disk (all under one directory):
 *   manifest.json     counts, dims and split fractions (keys below)
 *   gt_model.bin      the generating model + topology + render settings
 *   shapes.f32        count * 3n little-endian f32, sample-major
 *   coeffs.f32        count * d_true little-endian f32, sample-major
 *   poses.csv         header "id,yaw_deg", one row per sample
 *   images/           00000.pgm ... binary PGM, resolution x resolution
 *
 * Shapes and coefficients are rounded to f32 before the images are rendered,
 * so re-rendering a loaded sample reproduces its stored PGM byte for byte.
 */
struct DatasetManifest {
    int count = 0;
    int d_true = 0;
    int n = 0; // vertices per shape
    int resolution = 0;
    double pose_fraction = 0.0;
    std::uint64_t seed = 0;
    double split_train = 0.0;
    double split_test = 0.0;
    int version = 1;

    void validate() const;
};

/// Everything needed to reproduce and extend a dataset: the generating shape
/// model, its triangulation and the render settings. Stored as gt_model.bin.
struct GroundTruthBundle {
    ShapeModel model;
    TriangleMesh mesh;
    RenderConfig render_cfg;
};

void save_bundle(const std::string& path, const GroundTruthBundle& bundle);
GroundTruthBundle load_bundle(const std::string& path);

struct GenerateConfig {
    int count = 200;
    double pose_fraction = 0.2; // fraction rendered at a random yaw
    double max_yaw_deg = 90.0;
    std::uint64_t seed = 7;
    double split_train = 0.9;
    double split_test = 0.1;

    void validate() const;
};

/**
 * Samples coefficient vectors from the model prior, synthesizes the shapes,
 * renders one image per sample (a seeded subset at a uniform random yaw, the
 * rest frontal) and writes the directory layout above. The directory appears
 * atomically: everything is staged in a sibling temp directory and renamed
 * into place. Fails if out_dir already exists.
 */
void generate_dataset(const GroundTruthModel& gt, const RenderConfig& render_cfg,
                      const GenerateConfig& cfg, const std::string& out_dir);

/// A dataset held in memory. Shape and coefficient entries are f32-valued
/// doubles; image pixels are the stored 8-bit levels mapped to [0, 1].
struct Dataset {
    DatasetManifest manifest;
    GroundTruthBundle bundle;
    Eigen::MatrixXd shapes; // count x 3n
    Eigen::MatrixXd coeffs; // count x d_true
    Eigen::VectorXd yaw_deg;
    nn::Tensor images; // [count, 1, res, res]
    std::string manifest_hash;

    int test_count() const;
    int train_count() const { return manifest.count - test_count(); }
};

/**
 * Loads and cross-checks a dataset directory. Distinct failures: a missing
 * file names its path (IoError), a payload size mismatch names expected and
 * actual byte counts (IoError), an unsupported manifest version or zero count
 * is rejected up front (ValidationError).
 */
Dataset load_dataset(const std::string& dir);

/// Deterministic contiguous split: the last round(split_test * count)
/// samples are the test set, the rest train.
enum class Split { train, test, all };

std::vector<int> split_ids(const Dataset& data, Split split);

TrainingSet make_training_set(const Dataset& data, Split split);

/// FNV-1a hash of a file's raw bytes, as fixed-width hex.
std::string file_hash_hex(const std::string& path);

} // namespace isr
