/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/include/isr/evaluation_pipeline.hpp
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

#include "isr/datagen.hpp"
#include "isr/evaluation.hpp"
#include "isr/trainer.hpp"

namespace isr {

struct SampleEval {
    int id = -1;
    double mean_mse = 0.0;          // after similarity alignment, squared mm
    double baseline_mse = 0.0;      // aligned training mean shape vs truth
    double mean_angle_deg = 0.0;    // vertex-normal angles vs truth
    double p95_angle_deg = 0.0;
};

struct EvaluationReport {
    std::vector<SampleEval> samples;
    double mean_mse = 0.0;
    double baseline_mean_mse = 0.0;
    // Normal-angle statistics over all vertices of all evaluated samples.
    // The histogram has 36 equal bins over [0, 180] degrees.
    double mean_angle_deg = 0.0;
    double median_angle_deg = 0.0;
    double p95_angle_deg = 0.0;
    std::vector<int> angle_histogram;
};

/**
 * Reconstructs every sample of the chosen split from its image, aligns the
 * result onto the stored ground-truth shape with the closed-form similarity
 * fit and aggregates per-vertex squared errors and normal angles. The
 * baseline reconstructs nothing: it aligns the training mean shape onto each
 * truth the same way.
 *
 * When out_dir is non-empty it is created and receives:
 *   per_sample.csv   id,mean_mse,baseline_mse,mean_angle_deg,p95_angle_deg
 *   summary.json     the aggregate fields above plus counts
 *   images/          NNNNN_err.pgm error heatmaps (per-vertex squared error
 *                    rescaled to [0,1], splatted from the truth geometry)
 */
EvaluationReport evaluate_model(const TrainedModel& model, const Dataset& data, Split split,
                                const std::string& out_dir = "");

void write_evaluation_report(const EvaluationReport& report, const std::string& out_dir);

struct PoseSweepPoint {
    double angle_deg = 0.0;
    double mean_mse = 0.0;
};

/**
 * Error as a function of yaw: renders freshly sampled shapes at each listed
 * angle, reconstructs and reports the mean aligned per-vertex error per
 * angle. Deterministic per seed; the same shapes are reused across angles so
 * the sweep isolates the pose effect. An empty angle list yields an empty
 * curve; duplicate angles yield identical values.
 */
std::vector<PoseSweepPoint> pose_sweep(const TrainedModel& model, const GroundTruthBundle& gt,
                                       int samples_per_angle,
                                       const std::vector<double>& angles_deg,
                                       std::uint64_t seed);

/// Convenience overload sweeping [min_deg, max_deg] in steps of step_deg.
std::vector<PoseSweepPoint> pose_sweep(const TrainedModel& model, const GroundTruthBundle& gt,
                                       int samples_per_angle, double min_deg, double max_deg,
                                       double step_deg, std::uint64_t seed);

void write_pose_sweep_csv(const std::string& path, const std::vector<PoseSweepPoint>& sweep);

struct DirectRegressionReport {
    std::vector<EpochLog> history; // coefficient-space loss per epoch
    double mean_mse = 0.0;         // aligned per-vertex error on the split
    // Normal-angle statistics, same binning as EvaluationReport, so the two
    // approaches can be reported side by side.
    double mean_angle_deg = 0.0;
    std::vector<int> angle_histogram;
};

/**
 * The comparison baseline that needs ground-truth 3D at training time: the
 * same CNN architecture regresses the true generating coefficients directly
 * (no autoencoder, no learned basis) and decodes through the ground-truth
 * basis. Evaluated with the same alignment protocol as evaluate_model.
 */
DirectRegressionReport train_direct_regression(const Dataset& data, const TrainConfig& cfg,
                                               const NetworkSpec& base_spec, Split eval_split);

} // namespace isr
