/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/evaluation.cpp
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
#include "isr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "isr/errors.hpp"

namespace isr {

PointCloud SimilarityTransform::apply(const PointCloud& cloud) const {
    PointCloud out;
    out.coords.resize(cloud.coords.size());
    for (int i = 0; i < cloud.vertex_count(); ++i) {
        out.set_point(i, apply(cloud.point(i)));
    }
    return out;
}

ProcrustesResult procrustes_align(const PointCloud& source, const PointCloud& target) {
    const int n = source.vertex_count();
    if (n != target.vertex_count()) {
        throw ValidationError("procrustes_align: vertex counts differ (" +
                              std::to_string(n) + " vs " +
                              std::to_string(target.vertex_count()) + ")");
    }
    if (n < 3) {
        throw ValidationError("procrustes_align: need at least 3 vertices");
    }

    const Eigen::Vector3d mu_s = source.centroid();
    const Eigen::Vector3d mu_t = target.centroid();

    Eigen::MatrixXd sc(n, 3);
    Eigen::MatrixXd tc(n, 3);
    for (int i = 0; i < n; ++i) {
        sc.row(i) = (source.point(i) - mu_s).transpose();
        tc.row(i) = (target.point(i) - mu_t).transpose();
    }
    const double var_s = sc.squaredNorm() / static_cast<double>(n);
    if (var_s <= 0.0) {
        throw ValidationError("procrustes_align: source points are all coincident");
    }

    // A collinear or coincident target leaves the rotation underdetermined.
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> tsvd(tc);
        const auto& tsv = tsvd.singularValues();
        int rank = 0;
        for (int i = 0; i < tsv.size(); ++i) {
            if (tsv[i] > 1e-9 * tsv[0]) {
                ++rank;
            }
        }
        if (rank < 2) {
            throw ValidationError("procrustes_align: degenerate target configuration (rank " +
                                  std::to_string(rank) + " < 2)");
        }
    }

    const Eigen::Matrix3d cov = tc.transpose() * sc / static_cast<double>(n);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();

    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
        d[2] = -1.0;
    }
    SimilarityTransform t;
    t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    t.scale = sv.dot(d) / var_s;
    t.translation = mu_t - t.scale * (t.rotation * mu_s);

    ProcrustesResult result;
    result.transform = t;
    result.aligned = t.apply(source);
    return result;
}

VertexErrorMap per_vertex_mse(const PointCloud& a, const PointCloud& b) {
    const int n = a.vertex_count();
    if (n != b.vertex_count()) {
        throw ValidationError("per_vertex_mse: vertex counts differ (" + std::to_string(n) +
                              " vs " + std::to_string(b.vertex_count()) + ")");
    }
    VertexErrorMap map;
    map.values.resize(n);
    for (int i = 0; i < n; ++i) {
        map.values[i] = (a.point(i) - b.point(i)).squaredNorm();
    }
    return map;
}

VertexErrorMap scale_map_01(const VertexErrorMap& map) {
    VertexErrorMap out;
    if (map.values.size() == 0) {
        return out;
    }
    const double lo = map.values.minCoeff();
    const double hi = map.values.maxCoeff();
    if (hi == lo) {
        out.values = Eigen::VectorXd::Zero(map.values.size());
    } else {
        out.values = (map.values.array() - lo) / (hi - lo);
    }
    return out;
}

std::vector<Eigen::Vector3d> vertex_normals(const TriangleMesh& mesh) {
    const int n = mesh.cloud.vertex_count();
    std::vector<Eigen::Vector3d> acc(static_cast<std::size_t>(n), Eigen::Vector3d::Zero());
    for (const auto& f : mesh.faces) {
        const Eigen::Vector3d p1 = mesh.cloud.point(f[0]);
        const Eigen::Vector3d v = mesh.cloud.point(f[1]) - p1;
        const Eigen::Vector3d w = mesh.cloud.point(f[2]) - p1;
        const Eigen::Vector3d normal(v.y() * w.z() - v.z() * w.y(),
                                     v.z() * w.x() - v.x() * w.z(),
                                     v.x() * w.y() - v.y() * w.x());
        for (int idx : f) {
            acc[static_cast<std::size_t>(idx)] += normal;
        }
    }
    for (int i = 0; i < n; ++i) {
        const double len = acc[static_cast<std::size_t>(i)].norm();
        if (len == 0.0) {
            std::cerr << "vertex_normals: zero accumulated normal at vertex " << i
                      << ", substituting (0,0,1)\n";
            acc[static_cast<std::size_t>(i)] = Eigen::Vector3d(0.0, 0.0, 1.0);
        } else {
            acc[static_cast<std::size_t>(i)] /= len;
        }
    }
    return acc;
}

double normal_angle(const Eigen::Vector3d& n1, const Eigen::Vector3d& n2) {
    const double l1 = n1.norm();
    const double l2 = n2.norm();
    if (l1 == 0.0 || l2 == 0.0) {
        throw ValidationError("normal_angle: zero-length vector");
    }
    const double c = std::clamp(n1.dot(n2) / (l1 * l2), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

NormalAngleDistribution normal_angle_distribution(const TriangleMesh& recon,
                                                  const TriangleMesh& truth, int bins) {
    if (recon.faces != truth.faces) {
        throw ValidationError("normal_angle_distribution: meshes must share topology");
    }
    if (bins < 1) {
        throw ValidationError("normal_angle_distribution: bins must be >= 1");
    }
    const auto nr = vertex_normals(recon);
    const auto nt = vertex_normals(truth);
    const int n = recon.cloud.vertex_count();

    NormalAngleDistribution dist;
    dist.angles_deg.resize(n);
    dist.histogram.assign(static_cast<std::size_t>(bins), 0);
    for (int i = 0; i < n; ++i) {
        const double a = normal_angle(nr[static_cast<std::size_t>(i)],
                                      nt[static_cast<std::size_t>(i)]);
        dist.angles_deg[i] = a;
        int bin = static_cast<int>(a / 180.0 * bins);
        bin = std::clamp(bin, 0, bins - 1); // a == 180 lands in the last bin
        ++dist.histogram[static_cast<std::size_t>(bin)];
    }

    dist.mean_deg = dist.angles_deg.mean();
    Eigen::VectorXd sorted = dist.angles_deg;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&sorted](double q) {
        const int m = static_cast<int>(sorted.size());
        const int idx = std::min(m - 1, static_cast<int>(std::ceil(q * m)) - 1);
        return sorted[std::max(0, idx)];
    };
    dist.median_deg = quantile(0.5);
    dist.p95_deg = quantile(0.95);
    return dist;
}

} // namespace isr
