/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/ply_io.cpp
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
#include "isr/ply_io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "isr/errors.hpp"

namespace isr {

namespace {

void write_ply_impl(const std::filesystem::path& path, const PointCloud& cloud,
                    const std::vector<std::array<int, 3>>* faces) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("save_ply: cannot open " + path.string() + " for writing");
    }
    const int n = cloud.vertex_count();
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << n << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (faces != nullptr) {
        out << "element face " << faces->size() << "\n";
        out << "property list uchar int vertex_indices\n";
    }
    out << "end_header\n";
    out.precision(17);
    for (int i = 0; i < n; ++i) {
        out << cloud.coords[3 * i] << ' ' << cloud.coords[3 * i + 1] << ' '
            << cloud.coords[3 * i + 2] << '\n';
    }
    if (faces != nullptr) {
        for (const auto& f : *faces) {
            out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
        }
    }
    if (!out) {
        throw IoError("save_ply: write failed for " + path.string());
    }
}

} // namespace

void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
    write_ply_impl(path, mesh.cloud, &mesh.faces);
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) {
    write_ply_impl(path, cloud, nullptr);
}

TriangleMesh load_ply(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_ply: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "ply") {
        throw IoError("load_ply: " + path.string() + " is not a PLY file");
    }
    long vertex_count = -1;
    long face_count = 0;
    bool ascii = false;
    while (std::getline(in, line)) {
        if (line == "end_header") {
            break;
        }
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = (fmt == "ascii");
        } else if (tok == "element") {
            std::string what;
            long count = 0;
            ls >> what >> count;
            if (what == "vertex") {
                vertex_count = count;
            } else if (what == "face") {
                face_count = count;
            }
        }
        // property lines and comments are accepted as written by save_ply
    }
    if (!ascii) {
        throw IoError("load_ply: only ascii PLY is supported: " + path.string());
    }
    if (vertex_count < 0) {
        throw IoError("load_ply: missing vertex element in " + path.string());
    }

    TriangleMesh mesh;
    mesh.cloud.coords.resize(3 * vertex_count);
    for (long i = 0; i < vertex_count; ++i) {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;
        if (!(in >> x >> y >> z)) {
            throw IoError("load_ply: expected " + std::to_string(vertex_count) +
                          " vertices, failed at vertex " + std::to_string(i) + " in " +
                          path.string());
        }
        mesh.cloud.coords[3 * i] = x;
        mesh.cloud.coords[3 * i + 1] = y;
        mesh.cloud.coords[3 * i + 2] = z;
    }
    mesh.faces.reserve(static_cast<std::size_t>(face_count));
    for (long i = 0; i < face_count; ++i) {
        int k = 0;
        int a = 0;
        int b = 0;
        int c = 0;
        if (!(in >> k >> a >> b >> c) || k != 3) {
            throw IoError("load_ply: malformed face " + std::to_string(i) + " in " +
                          path.string());
        }
        mesh.faces.push_back({a, b, c});
    }
    return mesh;
}

PointCloud load_ply_cloud(const std::filesystem::path& path) {
    return load_ply(path).cloud;
}

} // namespace isr
