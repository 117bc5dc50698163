/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/reconstruction.cpp
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
#include "isr/reconstruction.hpp"

#include <fstream>
#include <iomanip>

#include "isr/errors.hpp"

namespace isr {

ReconstructionResult reconstruct(const TrainedModel& model, const GrayImage& image,
                                 int source_id)
{
    const int s = model.net.spec.image_size;
    if (image.width != s || image.height != s)
        throw ValidationError("reconstruct: image is " + std::to_string(image.width) + "x" +
                              std::to_string(image.height) + ", the network expects " +
                              std::to_string(s) + "x" + std::to_string(s));

    nn::Tensor input = nn::Tensor::zeros({1, 1, s, s});
    input.data = image.pixels;

    ReconstructionResult result;
    result.source_id = source_id;
    result.latent = model.net.cnn_eval(input);
    Eigen::VectorXd coords = model.net.decode(result.latent);
    if (!coords.allFinite())
        throw NumericError("reconstruct: non-finite coordinates after the decoder");
    result.cloud = PointCloud(std::move(coords));
    return result;
}

std::vector<ReconstructionResult> reconstruct_batch(const TrainedModel& model,
                                                    const std::vector<GrayImage>& images,
                                                    const std::vector<int>& source_ids)
{
    if (!source_ids.empty() && source_ids.size() != images.size())
        throw ValidationError("reconstruct: got " + std::to_string(source_ids.size()) +
                              " ids for " + std::to_string(images.size()) + " images");
    std::vector<ReconstructionResult> results;
    results.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i)
        results.push_back(reconstruct(model, images[i],
                                      source_ids.empty() ? -1 : source_ids[i]));
    return results;
}

void write_latents_csv(const std::string& path,
                       const std::vector<ReconstructionResult>& results)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    const Eigen::Index dim = results.empty() ? 0 : results.front().latent.size();
    out << "id";
    for (Eigen::Index k = 0; k < dim; ++k)
        out << ",y" << k;
    out << '\n';
    out << std::setprecision(17);
    for (const ReconstructionResult& r : results)
    {
        out << r.source_id;
        for (Eigen::Index k = 0; k < r.latent.size(); ++k)
            out << ',' << r.latent[k];
        out << '\n';
    }
    if (!out)
        throw IoError("failed while writing: " + path);
}

} // namespace isr
