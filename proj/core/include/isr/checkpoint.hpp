/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/checkpoint.hpp
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

#include "isr/trainer.hpp"

namespace isr {

/**
 * Model checkpoint, binary, little-endian:
 *   magic "ISRM", u32 version (1)
 *   u8 precision (0 = f32, 1 = f64)
 *   u32 input_dim, u32 latent_dim, u64 architecture hash
 *   u32 metadata length, then that many bytes of JSON (architecture, train
 *     config, final losses, dataset manifest hash)
 *   u64 tensor count, then per tensor: u32 name length, name bytes,
 *     u64 element count, elements at the stored precision
 *
 * Tensors appear in the fixed parameter order (decoder, encoder layers, conv
 * layers, fc4, fc5) with the training mean shape last. The file is staged
 * next to `path` and renamed into place, so readers never see a partial
 * checkpoint. Saving and loading round-trip parameters bit-identically; at
 * f32 the trainer has already rounded the in-memory parameters.
 */
void save_checkpoint(const std::string& path, const TrainedModel& model);

/// Rebuilds the network from the stored architecture and fills every tensor.
/// A wrong magic or a truncated/oversized payload is an IoError naming the
/// problem; an unknown version or a hash/shape mismatch is a ValidationError.
TrainedModel load_checkpoint(const std::string& path);

} // namespace isr
