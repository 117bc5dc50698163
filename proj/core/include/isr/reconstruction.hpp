/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/reconstruction.hpp
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

#include <string>
#include <vector>

#include "isr/renderer.hpp"
#include "isr/shape_model.hpp"
#include "isr/trainer.hpp"

namespace isr {

struct ReconstructionResult {
    int source_id = -1;     // caller-supplied sample id, -1 if none
    Eigen::VectorXd latent; // CNN output y
    PointCloud cloud;       // decode(y)
};

/**
 * Single-image 3D reconstruction: CNN (eval mode, dropout off) maps the
 * image to a latent code, the decoder maps the code to coordinates. The
 * image must match the network's input resolution. Non-finite activations
 * raise NumericError naming the layer.
 */
ReconstructionResult reconstruct(const TrainedModel& model, const GrayImage& image,
                                 int source_id = -1);

/// Reconstructions are independent per image; results are bitwise equal to
/// calling reconstruct() one image at a time.
std::vector<ReconstructionResult> reconstruct_batch(const TrainedModel& model,
                                                    const std::vector<GrayImage>& images,
                                                    const std::vector<int>& source_ids);

/// One row per result: id, then the latent entries. Header "id,y0,y1,...".
void write_latents_csv(const std::string& path,
                       const std::vector<ReconstructionResult>& results);

} // namespace isr
