/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/renderer.hpp
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

#include <filesystem>

#include <Eigen/Core>

#include "isr/shape_model.hpp"

namespace isr {

/// Head pose: rotation about the vertical (y) axis, in [-90, +90] degrees.
struct Pose {
    double yaw_deg = 0.0;

    void validate() const;
};

/// Single-channel image, row-major, origin top-left, values in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    Eigen::VectorXd pixels; // width * height

    GrayImage() = default;
    GrayImage(int w, int h) : width(w), height(h), pixels(Eigen::VectorXd::Zero(w * h)) {}

    double& at(int x, int y) { return pixels[y * width + x]; }
    double at(int x, int y) const { return pixels[y * width + x]; }
};

/**
 * Orthographic render settings. The viewport is a fixed model-space box in
 * x/y so that shape-size variation stays visible across a corpus; it is
 * normally the ground-truth base mesh bounds plus a 10% margin.
 */
struct RenderConfig {
    int resolution = 32;
    double view_min_x = -99.0;
    double view_max_x = 99.0;
    double view_min_y = -132.0;
    double view_max_y = 132.0;
    Eigen::Vector3d light_dir = Eigen::Vector3d(0.0, 0.0, 1.0); // unit
    double ambient = 0.2;
    int splat_radius = 1;

    void validate() const;
};

/**
 * Rotates the cloud about its centroid by yaw about the y axis:
 * x' = x cos t + z sin t, y' = y, z' = -x sin t + z cos t.
 */
PointCloud rotate_yaw(const PointCloud& cloud, const Pose& pose);

/**
 * Orthographic point-splat render. The camera looks along -z; each vertex is
 * projected linearly from the viewport to pixel coordinates (image y flipped)
 * and splats a square of side 2*splat_radius+1. A per-pixel z-buffer keeps
 * the vertex with the largest z. Intensity is Lambertian:
 * clamp(ambient + (1-ambient) * max(0, n . light_dir), 0, 1) with vertex
 * normals computed on the given mesh. Uncovered pixels are 0.
 */
GrayImage render_orthographic(const TriangleMesh& mesh, const RenderConfig& cfg);

/**
 * Same splat/z-buffer pass but with a caller-supplied per-vertex intensity
 * (already in [0,1]) instead of shading. Used for error heatmaps.
 */
GrayImage render_vertex_values(const TriangleMesh& mesh, const Eigen::VectorXd& values,
                               const RenderConfig& cfg);

/// PGM (P5, 8-bit, maxval 255) image I/O; quantization is round(255 * v).
void save_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage load_pgm(const std::filesystem::path& path);

} // namespace isr
