/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/renderer.cpp
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
#include "isr/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "isr/errors.hpp"
#include "isr/evaluation.hpp"

namespace isr {

void Pose::validate() const {
    if (!(yaw_deg >= -90.0 && yaw_deg <= 90.0)) {
        throw ValidationError("Pose: yaw " + std::to_string(yaw_deg) +
                              " outside [-90, +90] degrees");
    }
}

void RenderConfig::validate() const {
    if (resolution < 8) {
        throw ValidationError("RenderConfig: resolution must be >= 8");
    }
    if (std::abs(light_dir.norm() - 1.0) > 1e-9) {
        throw ValidationError("RenderConfig: light_dir must have unit norm");
    }
    if (!(ambient >= 0.0 && ambient < 1.0)) {
        throw ValidationError("RenderConfig: ambient must be in [0, 1)");
    }
    if (!(view_max_x > view_min_x) || !(view_max_y > view_min_y)) {
        throw ValidationError("RenderConfig: degenerate viewport");
    }
    if (splat_radius < 0) {
        throw ValidationError("RenderConfig: splat_radius must be >= 0");
    }
}

PointCloud rotate_yaw(const PointCloud& cloud, const Pose& pose) {
    pose.validate();
    const double theta = pose.yaw_deg * std::numbers::pi / 180.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const Eigen::Vector3d c = cloud.centroid();
    PointCloud out;
    out.coords.resize(cloud.coords.size());
    const int n = cloud.vertex_count();
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d p = cloud.point(i) - c;
        out.coords[3 * i + 0] = c.x() + p.x() * ct + p.z() * st;
        out.coords[3 * i + 1] = c.y() + p.y();
        out.coords[3 * i + 2] = c.z() - p.x() * st + p.z() * ct;
    }
    return out;
}

namespace {

// Shared splat + z-buffer pass; `intensity` gives the value written wherever
// a vertex wins the depth test.
GrayImage splat_pass(const TriangleMesh& mesh, const RenderConfig& cfg,
                     const Eigen::VectorXd& intensity) {
    cfg.validate();
    const int n = mesh.cloud.vertex_count();
    if (n == 0) {
        throw ValidationError("render: empty mesh");
    }
    const int res = cfg.resolution;
    GrayImage img(res, res);
    std::vector<double> zbuf(static_cast<std::size_t>(res) * res,
                             -std::numeric_limits<double>::infinity());

    const double sx = (res - 1) / (cfg.view_max_x - cfg.view_min_x);
    const double sy = (res - 1) / (cfg.view_max_y - cfg.view_min_y);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d p = mesh.cloud.point(i);
        const int px = static_cast<int>(std::lround((p.x() - cfg.view_min_x) * sx));
        const int py = (res - 1) - static_cast<int>(std::lround((p.y() - cfg.view_min_y) * sy));
        for (int dy = -cfg.splat_radius; dy <= cfg.splat_radius; ++dy) {
            for (int dx = -cfg.splat_radius; dx <= cfg.splat_radius; ++dx) {
                const int x = px + dx;
                const int y = py + dy;
                if (x < 0 || x >= res || y < 0 || y >= res) {
                    continue;
                }
                const std::size_t idx = static_cast<std::size_t>(y) * res + x;
                if (p.z() > zbuf[idx]) {
                    zbuf[idx] = p.z();
                    img.pixels[static_cast<Eigen::Index>(idx)] = intensity[i];
                }
            }
        }
    }
    return img;
}

} // namespace

GrayImage render_orthographic(const TriangleMesh& mesh, const RenderConfig& cfg) {
    const std::vector<Eigen::Vector3d> normals = vertex_normals(mesh);
    const int n = mesh.cloud.vertex_count();
    Eigen::VectorXd intensity(n);
    for (int i = 0; i < n; ++i) {
        const double diffuse = std::max(0.0, normals[static_cast<std::size_t>(i)].dot(cfg.light_dir));
        intensity[i] = std::clamp(cfg.ambient + (1.0 - cfg.ambient) * diffuse, 0.0, 1.0);
    }
    return splat_pass(mesh, cfg, intensity);
}

GrayImage render_vertex_values(const TriangleMesh& mesh, const Eigen::VectorXd& values,
                               const RenderConfig& cfg) {
    if (values.size() != mesh.cloud.vertex_count()) {
        throw ValidationError("render_vertex_values: expected " +
                              std::to_string(mesh.cloud.vertex_count()) + " values, got " +
                              std::to_string(values.size()));
    }
    return splat_pass(mesh, cfg, values);
}

void save_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("save_pgm: cannot open " + path.string() + " for writing");
    }
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    std::vector<unsigned char> bytes(static_cast<std::size_t>(image.width) * image.height);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = std::clamp(image.pixels[static_cast<Eigen::Index>(i)], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("save_pgm: write failed for " + path.string());
    }
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("load_pgm: cannot open " + path.string());
    }
    std::string magic;
    in >> magic;
    if (magic != "P5") {
        throw IoError("load_pgm: " + path.string() + " is not a P5 PGM (magic '" + magic + "')");
    }
    int w = 0;
    int h = 0;
    int maxval = 0;
    in >> w >> h >> maxval;
    if (!in || w <= 0 || h <= 0 || maxval != 255) {
        throw IoError("load_pgm: unsupported PGM header in " + path.string());
    }
    in.get(); // single whitespace after maxval
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw IoError("load_pgm: truncated pixel data in " + path.string());
    }
    GrayImage img(w, h);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        img.pixels[static_cast<Eigen::Index>(i)] = bytes[i] / 255.0;
    }
    return img;
}

} // namespace isr
