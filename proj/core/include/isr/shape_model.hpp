/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/shape_model.hpp
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

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "isr/errors.hpp"

namespace isr {

/**
 * A set of n vertices in 3-space. Coordinates are held in vectorized order
 * (x1, y1, z1, ..., xn, yn, zn), which is also the layout fed to the
 * autoencoder and stored on disk.
 */
struct PointCloud {
    Eigen::VectorXd coords; // length 3n

    PointCloud() = default;
    explicit PointCloud(Eigen::VectorXd c);

    int vertex_count() const { return static_cast<int>(coords.size()) / 3; }

    Eigen::Vector3d point(int i) const { return coords.segment<3>(3 * i); }
    void set_point(int i, const Eigen::Vector3d& p) { coords.segment<3>(3 * i) = p; }

    Eigen::Vector3d centroid() const;

    static PointCloud from_points(const std::vector<Eigen::Vector3d>& pts);
    std::vector<Eigen::Vector3d> to_points() const;
};

/**
 * A point cloud with a fixed triangulation. Faces are vertex-index triples,
 * counterclockwise when viewed from outside the surface.
 */
struct TriangleMesh {
    PointCloud cloud;
    std::vector<std::array<int, 3>> faces;

    /// Checks index bounds, degenerate faces and isolated vertices.
    void validate() const;
};

/// Coefficient vector in a shape space (z for the AE latent, y for the CNN output).
struct LatentCode {
    Eigen::VectorXd values;

    LatentCode() = default;
    explicit LatentCode(Eigen::VectorXd v) : values(std::move(v)) {}

    int dim() const { return static_cast<int>(values.size()); }
};

/**
 * Linear shape space over 3n coordinates: any instance is
 * mean + basis * z for a d-vector of coefficients z.
 *
 * coeff_sigma holds the per-coefficient prior standard deviations used when
 * sampling synthetic shapes. Units are nominal millimeters.
 */
struct ShapeModel {
    Eigen::VectorXd mean;        // 3n
    Eigen::MatrixXd basis;       // 3n x d, columns are basis vectors
    Eigen::VectorXd coeff_sigma; // d

    int vertex_count() const { return static_cast<int>(mean.size()) / 3; }
    int dim() const { return static_cast<int>(basis.cols()); }

    void validate() const;
};

/**
 * Evaluates the linear shape model at a coefficient vector:
 * result = mean + sum_i basis_i * z_i, accumulated column by column.
 * Throws ValidationError on a dimension mismatch.
 */
PointCloud synthesize_shape(const ShapeModel& model, const LatentCode& z);

/// Configuration for the procedural ground-truth model.
struct GroundTruthConfig {
    int n_grid = 39;      // vertices per grid side; n = n_grid^2
    int d_true = 10;      // basis dimension
    double sigma0 = 1.0;  // prior std of coefficient i is sigma0 / (i + 1)
    double basis_scale = 6.0; // per-vertex RMS displacement of each column, mm
    std::uint64_t seed = 20240901;
};

struct GroundTruthModel {
    ShapeModel model;
    TriangleMesh mesh; // mean shape with its triangulation
};

/**
 * Builds a self-contained stand-in for a licensed face database: a face-like
 * heightfield (elliptical dome with nose/brow/chin bumps) over a regular
 * n_grid x n_grid triangulated grid, plus d_true smooth displacement-field
 * basis columns made of fixed-seed Gaussian radial bumps. Columns are
 * normalized to basis_scale mm RMS per vertex and are linearly independent;
 * the same config always produces byte-identical output.
 */
GroundTruthModel build_ground_truth_model(const GroundTruthConfig& cfg);

/**
 * Draws `count` independent coefficient vectors, entry i ~ N(0, sigma_i^2)
 * with the model's coeff_sigma schedule. Deterministic per seed.
 */
std::vector<LatentCode> sample_coefficients(const ShapeModel& model, int count,
                                            std::uint64_t seed);

} // namespace isr
