/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/evaluation.hpp
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

#include <vector>

#include <Eigen/Core>

#include "isr/shape_model.hpp"

namespace isr {

/// Rigid motion plus uniform scale: p -> scale * rotation * p + translation.
struct SimilarityTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity(); // orthonormal, det +1
    double scale = 1.0;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return scale * (rotation * p) + translation;
    }
    PointCloud apply(const PointCloud& cloud) const;
};

struct ProcrustesResult {
    SimilarityTransform transform;
    PointCloud aligned; // transform applied to the source
};

/**
 * Closed-form similarity alignment of source onto target (least squares over
 * rotation, uniform scale and translation; reflections are excluded by the
 * sign fix on the smallest singular value). Clouds must have equal vertex
 * counts in corresponding order, n >= 3. Throws ValidationError when the
 * centered target has rank < 2 or the source is fully coincident.
 */
ProcrustesResult procrustes_align(const PointCloud& source, const PointCloud& target);

/// Per-vertex squared errors, non-negative, in squared model units.
struct VertexErrorMap {
    Eigen::VectorXd values;

    double mean() const { return values.size() == 0 ? 0.0 : values.mean(); }
};

/// value_i = squared Euclidean distance between vertex i of a and of b.
VertexErrorMap per_vertex_mse(const PointCloud& a, const PointCloud& b);

/// Affine rescale to [0, 1]: (v - min) / (max - min); a constant map becomes all zeros.
VertexErrorMap scale_map_01(const VertexErrorMap& map);

/**
 * Per-vertex unit normals: each face contributes its unnormalized cross
 * product (P2-P1) x (P3-P1) to its three corners; the accumulated sum is then
 * normalized. A zero accumulated sum yields (0,0,1) with a warning on stderr.
 */
std::vector<Eigen::Vector3d> vertex_normals(const TriangleMesh& mesh);

/// Angle between two nonzero vectors in degrees, in [0, 180]. The normalized
/// dot product is clamped to [-1, 1] so roundoff can never raise a domain error.
double normal_angle(const Eigen::Vector3d& n1, const Eigen::Vector3d& n2);

struct NormalAngleDistribution {
    Eigen::VectorXd angles_deg; // per vertex, in [0, 180]
    std::vector<int> histogram; // fixed-width bins over [0, 180]
    double mean_deg = 0.0;
    double median_deg = 0.0;
    double p95_deg = 0.0;
};

/**
 * Per-vertex angles between corresponding vertex normals of two meshes with
 * identical topology, plus a fixed-width histogram (default 36 bins).
 */
NormalAngleDistribution normal_angle_distribution(const TriangleMesh& recon,
                                                  const TriangleMesh& truth,
                                                  int bins = 36);

} // namespace isr
