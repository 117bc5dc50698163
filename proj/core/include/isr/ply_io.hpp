/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/ply_io.hpp
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

#include "isr/shape_model.hpp"

namespace isr {

/// Writes an ascii PLY (vertex x/y/z, optional face vertex_indices).
/// Coordinates are printed with 17 significant digits so a load round-trips.
void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh);
void save_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// Reads an ascii PLY written by save_ply (or compatible). The face list may
/// be empty for bare point clouds. Throws IoError on malformed input.
TriangleMesh load_ply(const std::filesystem::path& path);

PointCloud load_ply_cloud(const std::filesystem::path& path);

} // namespace isr
