/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: benchmarks/bench_core.cpp
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
#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "isr/evaluation.hpp"
#include "isr/nn/layers.hpp"
#include "isr/nn/tensor.hpp"
#include "isr/renderer.hpp"
#include "isr/rng.hpp"
#include "isr/shape_model.hpp"

namespace {

using namespace isr;
using nn::Tensor;

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.normal(0.0, 0.1);
    return m;
}

Eigen::VectorXd random_vector(Eigen::Index size, Rng& rng)
{
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i)
        v[i] = rng.normal(0.0, 0.1);
    return v;
}

// Fixtures at the pipeline's working sizes: a 39x39 grid shape model
// (1521 vertices, 4563 coordinates) and 32x32 grayscale images.
const GroundTruthModel& ground_truth()
{
    static const GroundTruthModel gt = build_ground_truth_model(GroundTruthConfig{});
    return gt;
}

nn::DenseLayer desk_dense(int in_dim, int out_dim)
{
    Rng rng(7);
    return {random_matrix(out_dim, in_dim, rng), random_vector(out_dim, rng)};
}

nn::ConvLayer desk_conv(int in_ch, int out_ch)
{
    nn::ConvLayer layer;
    layer.in_ch = in_ch;
    layer.out_ch = out_ch;
    layer.ksize = 3;
    layer.stride = 2;
    layer.pad = 1;
    Rng rng(8);
    layer.kernels = random_matrix(out_ch, in_ch * layer.ksize * layer.ksize, rng);
    layer.bias = random_vector(out_ch, rng);
    return layer;
}

// The encoder's widest affine map: 4563 -> 512 on a 32-sample batch.
void bm_dense_forward(benchmark::State& state)
{
    const int in_dim = 3 * ground_truth().model.vertex_count();
    const nn::DenseLayer layer = desk_dense(in_dim, 512);
    Rng rng(9);
    const Eigen::MatrixXd x = random_matrix(32, in_dim, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(nn::dense_apply(layer, x));
}
BENCHMARK(bm_dense_forward)->Unit(benchmark::kMillisecond);

void bm_dense_backward(benchmark::State& state)
{
    const int in_dim = 3 * ground_truth().model.vertex_count();
    const nn::DenseLayer layer = desk_dense(in_dim, 512);
    Rng rng(10);
    const Eigen::MatrixXd x = random_matrix(32, in_dim, rng);
    const Eigen::MatrixXd dy = random_matrix(32, 512, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(nn::dense_grad(layer, x, dy));
}
BENCHMARK(bm_dense_backward)->Unit(benchmark::kMillisecond);

// First image-network stage: 1 -> 8 channels, stride 2, on a 32-image batch.
void bm_conv_forward(benchmark::State& state)
{
    const nn::ConvLayer layer = desk_conv(1, 8);
    Rng rng(11);
    Tensor x({32, 1, 32, 32}, random_vector(32 * 32 * 32, rng));
    for (auto _ : state)
        benchmark::DoNotOptimize(nn::conv2d_apply(layer, x));
}
BENCHMARK(bm_conv_forward)->Unit(benchmark::kMillisecond);

void bm_conv_backward(benchmark::State& state)
{
    const nn::ConvLayer layer = desk_conv(1, 8);
    Rng rng(12);
    Tensor x({32, 1, 32, 32}, random_vector(32 * 32 * 32, rng));
    const Tensor y = nn::conv2d_apply(layer, x);
    Tensor dy(y.shape, random_vector(y.size(), rng));
    for (auto _ : state)
        benchmark::DoNotOptimize(nn::conv2d_grad(layer, x, dy));
}
BENCHMARK(bm_conv_backward)->Unit(benchmark::kMillisecond);

void bm_synthesize_shape(benchmark::State& state)
{
    const ShapeModel& model = ground_truth().model;
    const LatentCode z = sample_coefficients(model, 1, 13).front();
    for (auto _ : state)
        benchmark::DoNotOptimize(synthesize_shape(model, z));
}
BENCHMARK(bm_synthesize_shape)->Unit(benchmark::kMicrosecond);

void bm_render_orthographic(benchmark::State& state)
{
    const TriangleMesh& mesh = ground_truth().mesh;
    RenderConfig cfg;
    cfg.resolution = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(render_orthographic(mesh, cfg));
}
BENCHMARK(bm_render_orthographic)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void bm_procrustes_align(benchmark::State& state)
{
    const ShapeModel& model = ground_truth().model;
    const PointCloud target{model.mean};
    const PointCloud source = synthesize_shape(model, sample_coefficients(model, 1, 14).front());
    for (auto _ : state)
        benchmark::DoNotOptimize(procrustes_align(source, target));
}
BENCHMARK(bm_procrustes_align)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
