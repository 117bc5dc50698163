/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/shape_model.cpp
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
#include "isr/shape_model.hpp"

#include <cmath>
#include <string>

#include "isr/rng.hpp"

namespace isr {

PointCloud::PointCloud(Eigen::VectorXd c) : coords(std::move(c)) {
    if (coords.size() % 3 != 0) {
        throw ValidationError("PointCloud: coordinate vector length " +
                              std::to_string(coords.size()) + " is not a multiple of 3");
    }
    if (!coords.allFinite()) {
        throw ValidationError("PointCloud: non-finite coordinate");
    }
}

Eigen::Vector3d PointCloud::centroid() const {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    const int n = vertex_count();
    for (int i = 0; i < n; ++i) {
        c += point(i);
    }
    return c / static_cast<double>(n);
}

PointCloud PointCloud::from_points(const std::vector<Eigen::Vector3d>& pts) {
    Eigen::VectorXd c(3 * static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        c.segment<3>(3 * static_cast<Eigen::Index>(i)) = pts[i];
    }
    return PointCloud(std::move(c));
}

std::vector<Eigen::Vector3d> PointCloud::to_points() const {
    std::vector<Eigen::Vector3d> pts(vertex_count());
    for (int i = 0; i < vertex_count(); ++i) {
        pts[static_cast<std::size_t>(i)] = point(i);
    }
    return pts;
}

void TriangleMesh::validate() const {
    const int n = cloud.vertex_count();
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (const auto& f : faces) {
        for (int idx : f) {
            if (idx < 0 || idx >= n) {
                throw ValidationError("TriangleMesh: face index " + std::to_string(idx) +
                                      " out of range [0, " + std::to_string(n) + ")");
            }
            used[static_cast<std::size_t>(idx)] = 1;
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            throw ValidationError("TriangleMesh: degenerate face with repeated vertex index");
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!used[static_cast<std::size_t>(i)]) {
            throw ValidationError("TriangleMesh: vertex " + std::to_string(i) +
                                  " belongs to no face");
        }
    }
}

void ShapeModel::validate() const {
    if (mean.size() % 3 != 0 || vertex_count() < 3) {
        throw ValidationError("ShapeModel: mean must hold at least 3 vertices");
    }
    if (basis.rows() != mean.size() || basis.cols() < 1) {
        throw ValidationError("ShapeModel: basis must be 3n x d with d >= 1 (got " +
                              std::to_string(basis.rows()) + " x " +
                              std::to_string(basis.cols()) + ", 3n = " +
                              std::to_string(mean.size()) + ")");
    }
    if (!basis.allFinite() || !mean.allFinite()) {
        throw ValidationError("ShapeModel: non-finite entry");
    }
    if (coeff_sigma.size() != basis.cols()) {
        throw ValidationError("ShapeModel: coeff_sigma length " +
                              std::to_string(coeff_sigma.size()) + " != d = " +
                              std::to_string(basis.cols()));
    }
}

PointCloud synthesize_shape(const ShapeModel& model, const LatentCode& z) {
    if (z.dim() != model.dim()) {
        throw ValidationError("synthesize_shape: coefficient dimension mismatch, expected " +
                              std::to_string(model.dim()) + ", got " +
                              std::to_string(z.dim()));
    }
    Eigen::VectorXd out = model.mean;
    for (int i = 0; i < model.dim(); ++i) {
        if (z.values[i] != 0.0) {
            out += model.basis.col(i) * z.values[i];
        }
    }
    PointCloud cloud;
    cloud.coords = std::move(out);
    return cloud;
}

namespace {

double gauss2(double x, double y, double cx, double cy, double sx, double sy) {
    const double dx = (x - cx) / sx;
    const double dy = (y - cy) / sy;
    return std::exp(-(dx * dx + dy * dy));
}

// Face-like heightfield: elliptical dome plus nose, brow, chin, cheeks and
// eye sockets, all smooth Gaussians. Units are nominal millimeters.
double face_height(double x, double y) {
    double z = 40.0 * gauss2(x, y, 0.0, 0.0, 70.0, 95.0);
    z += 16.0 * gauss2(x, y, 0.0, -10.0, 14.0, 20.0);   // nose
    z += 6.0 * gauss2(x, y, 0.0, 42.0, 45.0, 12.0);     // brow
    z += 7.0 * gauss2(x, y, 0.0, -88.0, 20.0, 16.0);    // chin
    z += 4.0 * gauss2(x, y, 38.0, -15.0, 22.0, 26.0);   // cheeks
    z += 4.0 * gauss2(x, y, -38.0, -15.0, 22.0, 26.0);
    z -= 4.0 * gauss2(x, y, 28.0, 30.0, 13.0, 10.0);    // eye sockets
    z -= 4.0 * gauss2(x, y, -28.0, 30.0, 13.0, 10.0);
    return z;
}

} // namespace

GroundTruthModel build_ground_truth_model(const GroundTruthConfig& cfg) {
    if (cfg.d_true < 1) {
        throw ValidationError("build_ground_truth_model: d_true must be >= 1");
    }
    if (cfg.n_grid < 8) {
        throw ValidationError("build_ground_truth_model: n_grid must be >= 8");
    }

    const int g = cfg.n_grid;
    const int n = g * g;
    const double half_w = 90.0;  // face half-width, mm
    const double half_h = 120.0; // face half-height, mm

    Eigen::VectorXd mean(3 * n);
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            const int i = r * g + c;
            const double x = -half_w + 2.0 * half_w * c / (g - 1);
            const double y = half_h - 2.0 * half_h * r / (g - 1);
            mean[3 * i + 0] = x;
            mean[3 * i + 1] = y;
            mean[3 * i + 2] = face_height(x, y);
        }
    }

    // Two triangles per grid cell, counterclockwise seen from +z.
    std::vector<std::array<int, 3>> faces;
    faces.reserve(2 * static_cast<std::size_t>(g - 1) * static_cast<std::size_t>(g - 1));
    for (int r = 0; r + 1 < g; ++r) {
        for (int c = 0; c + 1 < g; ++c) {
            const int a = r * g + c;
            const int b = r * g + c + 1;
            const int lo = (r + 1) * g + c;
            const int hi = (r + 1) * g + c + 1;
            faces.push_back({a, lo, b});
            faces.push_back({b, lo, hi});
        }
    }

    // Basis columns: sums of Gaussian radial bumps displacing vertices along a
    // z-dominant direction, normalized to basis_scale mm RMS per vertex.
    Rng rng(cfg.seed);
    Eigen::MatrixXd basis(3 * n, cfg.d_true);
    constexpr int bumps_per_column = 3;
    for (int j = 0; j < cfg.d_true; ++j) {
        Eigen::VectorXd col = Eigen::VectorXd::Zero(3 * n);
        for (int k = 0; k < bumps_per_column; ++k) {
            const double cx = rng.uniform(-0.72, 0.72) * half_w;
            const double cy = rng.uniform(-0.72, 0.72) * half_h;
            const double sigma = rng.uniform(0.18, 0.40) * half_w;
            const double amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0);
            Eigen::Vector3d dir(0.3 * rng.normal(), 0.3 * rng.normal(), 1.0);
            dir.normalize();
            for (int i = 0; i < n; ++i) {
                const double x = mean[3 * i + 0];
                const double y = mean[3 * i + 1];
                const double dx = x - cx;
                const double dy = y - cy;
                const double w = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                col.segment<3>(3 * i) += w * dir;
            }
        }
        col *= cfg.basis_scale * std::sqrt(static_cast<double>(n)) / col.norm();
        basis.col(j) = col;
    }

    Eigen::VectorXd sigma(cfg.d_true);
    for (int i = 0; i < cfg.d_true; ++i) {
        sigma[i] = cfg.sigma0 / static_cast<double>(i + 1);
    }

    GroundTruthModel result;
    result.model.mean = mean;
    result.model.basis = std::move(basis);
    result.model.coeff_sigma = std::move(sigma);
    result.mesh.cloud.coords = std::move(mean);
    result.mesh.faces = std::move(faces);
    result.model.validate();
    result.mesh.validate();
    return result;
}

std::vector<LatentCode> sample_coefficients(const ShapeModel& model, int count,
                                            std::uint64_t seed) {
    if (count < 1) {
        throw ValidationError("sample_coefficients: count must be >= 1");
    }
    Rng rng(seed);
    std::vector<LatentCode> codes;
    codes.reserve(static_cast<std::size_t>(count));
    const int d = model.dim();
    for (int s = 0; s < count; ++s) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) {
            v[i] = rng.normal(0.0, model.coeff_sigma[i]);
        }
        codes.emplace_back(std::move(v));
    }
    return codes;
}

} // namespace isr
