/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: tests/test_cli.cpp
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
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isr/checkpoint.hpp"
#include "isr/ply_io.hpp"
#include "test_support.hpp"

using namespace isr;
using isr::test::run_command;
namespace fs = std::filesystem;

namespace {

std::string cli()
{
    return std::string(ISR_CLI_PATH);
}

// Small geometry everywhere: 10x10 grid, 16 px images.
std::string gen_args(const std::string& out, int count, double pose_fraction,
                     std::uint64_t seed)
{
    std::ostringstream ss;
    ss << " gen-data --out " << out << " --count " << count << " --pose-fraction "
       << pose_fraction << " --grid 10 --resolution 16 --d-true 4 --seed " << seed;
    return ss.str();
}

/// One dataset and one trained checkpoint shared by the read-only cases.
struct CliWorld {
    fs::path root;
    fs::path data;
    fs::path model;
};

const CliWorld& world()
{
    static const CliWorld w = [] {
        CliWorld w;
        w.root = test::scratch_dir("cli_shared");
        w.data = w.root / "data";
        w.model = w.root / "model.isrm";
        auto gen = run_command(cli() + gen_args(w.data.string(), 64, 0.25, 3), w.root);
        REQUIRE_MESSAGE(gen.exit_code == 0, gen.err);
        auto train = run_command(cli() + " train --data " + w.data.string() + " --out " +
                                     w.model.string() +
                                     " --epochs 1 --batch 32 --lr 1e-3 --latent 8"
                                     " --hidden 32 --conv-channels 4,8 --fc4 16"
                                     " --dropout 0 --seed 5",
                                 w.root);
        REQUIRE_MESSAGE(train.exit_code == 0, train.err);
        return w;
    }();
    return w;
}

nlohmann::json parse_json_file(const fs::path& path)
{
    return nlohmann::json::parse(test::read_file_bytes(path));
}

std::vector<std::vector<double>> csv_data_rows(const fs::path& path)
{
    std::ifstream in(path);
    REQUIRE_MESSAGE(static_cast<bool>(in), "cannot open " << path.string());
    std::string line;
    std::getline(in, line); // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line))
    {
        std::stringstream ss(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(ss, field, ','))
            row.push_back(std::stod(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

TEST_CASE("gen-data reports the posed sample count in the manifest")
{
    const fs::path dir = test::scratch_dir("cli_gen");
    auto r = run_command(cli() + gen_args((dir / "d").string(), 10, 0.2, 11), dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);

    const nlohmann::json manifest = parse_json_file(dir / "d" / "manifest.json");
    CHECK(manifest.at("count").get<int>() == 10);
    CHECK(manifest.at("posed").get<int>() == 2);

    int nonzero_yaws = 0;
    for (const auto& row : csv_data_rows(dir / "d" / "poses.csv"))
        if (row[1] != 0.0)
            ++nonzero_yaws;
    CHECK(nonzero_yaws == 2);

    for (int i = 0; i < 10; ++i)
    {
        char name[16];
        std::snprintf(name, sizeof(name), "%05d.pgm", i);
        CHECK(fs::exists(dir / "d" / "images" / name));
    }
}

TEST_CASE("gen-data with the same seed reproduces every file byte for byte")
{
    const fs::path dir = test::scratch_dir("cli_gen_repro");
    REQUIRE(run_command(cli() + gen_args((dir / "a").string(), 8, 0.25, 21), dir).exit_code == 0);
    REQUIRE(run_command(cli() + gen_args((dir / "b").string(), 8, 0.25, 21), dir).exit_code == 0);

    int files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a"))
    {
        if (!entry.is_regular_file())
            continue;
        ++files;
        const fs::path rel = fs::relative(entry.path(), dir / "a");
        CAPTURE(rel.string());
        CHECK(test::same_file_bytes(entry.path(), dir / "b" / rel));
    }
    CHECK(files == 5 + 8); // manifest, bundle, shapes, coeffs, poses + images
}

TEST_CASE("gen-data rejects an out-of-range pose fraction with usage guidance")
{
    const fs::path dir = test::scratch_dir("cli_gen_bad");
    auto r = run_command(cli() + gen_args((dir / "d").string(), 10, 1.5, 1), dir);
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("pose_fraction must lie in [0, 1]") != std::string::npos);
    CHECK(!fs::exists(dir / "d"));
}

TEST_CASE("gen-data refuses to overwrite unless forced")
{
    const fs::path dir = test::scratch_dir("cli_gen_exists");
    const std::string args = gen_args((dir / "d").string(), 4, 0.0, 2);
    REQUIRE(run_command(cli() + args, dir).exit_code == 0);

    auto again = run_command(cli() + args, dir);
    CHECK(again.exit_code == 2);
    CHECK(again.err.find("already exists") != std::string::npos);

    CHECK(run_command(cli() + args + " --force", dir).exit_code == 0);
}

TEST_CASE("config file values apply but explicit flags beat them")
{
    const fs::path dir = test::scratch_dir("cli_config");
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << "{\"count\": 6, \"seed\": 9, \"grid\": 10, \"resolution\": 16, "
               "\"d-true\": 4}\n";
    }
    auto r = run_command(cli() + " gen-data --config " + (dir / "cfg.json").string() +
                             " --out " + (dir / "d").string() + " --count 4",
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    const nlohmann::json manifest = parse_json_file(dir / "d" / "manifest.json");
    CHECK(manifest.at("count").get<int>() == 4);       // flag wins
    CHECK(manifest.at("seed").get<int>() == 9);        // config applies
    CHECK(manifest.at("n").get<int>() == 100);
    CHECK(manifest.at("resolution").get<int>() == 16);
}

TEST_CASE("a one-epoch training run ends with a finite loss and a checkpoint")
{
    const fs::path dir = test::scratch_dir("cli_train");
    const fs::path ckpt = dir / "m.isrm";
    auto r = run_command(cli() + " train --data " + world().data.string() + " --out " +
                             ckpt.string() +
                             " --epochs 1 --batch 32 --latent 8 --hidden 32"
                             " --conv-channels 4,8 --fc4 16 --dropout 0 --seed 2",
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(r.out.find("final losses") != std::string::npos);

    const TrainedModel model = load_checkpoint(ckpt.string());
    CHECK(std::isfinite(model.final_loss));
    CHECK(model.config.epochs == 1);

    const auto log_rows = csv_data_rows(fs::path(ckpt.string() + ".losses.csv"));
    REQUIRE(log_rows.size() == 1);
    CHECK(std::isfinite(log_rows[0][3]));
}

TEST_CASE("training with zero coupling warns that images are decoupled")
{
    const fs::path dir = test::scratch_dir("cli_train_l0");
    auto r = run_command(cli() + " train --data " + world().data.string() + " --out " +
                             (dir / "m.isrm").string() +
                             " --epochs 0 --lambda 0 --latent 8 --hidden 32"
                             " --conv-channels 4,8 --fc4 16 --dropout 0",
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(r.err.find("coupling weight is 0") != std::string::npos);
}

TEST_CASE("training on a missing dataset fails with a distinct io error")
{
    const fs::path dir = test::scratch_dir("cli_train_missing");
    auto r = run_command(cli() + " train --data " + (dir / "nope").string() + " --out " +
                             (dir / "m.isrm").string(),
                         dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("dataset directory not found") != std::string::npos);
}

TEST_CASE("reconstruct maps a single image to a single ply")
{
    const fs::path dir = test::scratch_dir("cli_recon_one");
    const fs::path img = world().data / "images" / "00003.pgm";
    auto r = run_command(cli() + " reconstruct --model " + world().model.string() +
                             " --image " + img.string() + " --out " + (dir / "r").string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    const PointCloud cloud = load_ply_cloud((dir / "r" / "00003_recon.ply").string());
    CHECK(cloud.vertex_count() == 100);
    CHECK(fs::exists(dir / "r" / "latents.csv"));
}

TEST_CASE("reconstruct writes one ply per requested dataset id")
{
    const fs::path dir = test::scratch_dir("cli_recon_ids");
    auto r = run_command(cli() + " reconstruct --model " + world().model.string() +
                             " --data " + world().data.string() + " --ids 0..4 --out " +
                             (dir / "r").string(),
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    for (int i = 0; i < 5; ++i)
    {
        char name[24];
        std::snprintf(name, sizeof(name), "recon_%05d.ply", i);
        const TriangleMesh mesh = load_ply((dir / "r" / name).string());
        CHECK(mesh.cloud.vertex_count() == 100);
        CHECK(mesh.faces.size() == 2 * 9 * 9);
    }
    CHECK(csv_data_rows(dir / "r" / "latents.csv").size() == 5);
}

TEST_CASE("an unreadable model file names the magic mismatch")
{
    const fs::path dir = test::scratch_dir("cli_recon_junk");
    {
        std::ofstream junk(dir / "junk.isrm", std::ios::binary);
        junk << "JUNKJUNKJUNKJUNKJUNKJUNK";
    }
    auto r = run_command(cli() + " reconstruct --model " + (dir / "junk.isrm").string() +
                             " --image " + (world().data / "images" / "00000.pgm").string() +
                             " --out " + (dir / "r").string(),
                         dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("expected \"ISRM\"") != std::string::npos);
    CHECK(r.err.find("found \"JUNK\"") != std::string::npos);
}

TEST_CASE("evaluate writes distinct summaries for distinct splits")
{
    const fs::path dir = test::scratch_dir("cli_eval_splits");
    auto rt = run_command(cli() + " evaluate --model " + world().model.string() +
                              " --data " + world().data.string() + " --split train --out " +
                              (dir / "train").string(),
                          dir);
    REQUIRE_MESSAGE(rt.exit_code == 0, rt.err);
    auto rv = run_command(cli() + " evaluate --model " + world().model.string() +
                              " --data " + world().data.string() + " --split test --out " +
                              (dir / "test").string(),
                          dir);
    REQUIRE_MESSAGE(rv.exit_code == 0, rv.err);

    const nlohmann::json train_summary = parse_json_file(dir / "train" / "summary.json");
    const nlohmann::json test_summary = parse_json_file(dir / "test" / "summary.json");
    CHECK(train_summary.at("count").get<int>() == 58); // 64 - round(0.1 * 64)
    CHECK(test_summary.at("count").get<int>() == 6);
    CHECK(!test::same_file_bytes(dir / "train" / "summary.json",
                                 dir / "test" / "summary.json"));

    // written aggregates equal a recomputation from the per-sample rows
    const auto rows = csv_data_rows(dir / "test" / "per_sample.csv");
    REQUIRE(rows.size() == 6);
    double mean = 0.0;
    for (const auto& row : rows)
        mean += row[1];
    mean /= static_cast<double>(rows.size());
    const double reported = test_summary.at("mean_mse").get<double>();
    CHECK(std::abs(reported - mean) <= 1e-9 * std::max(1.0, std::abs(reported)));
}

TEST_CASE("evaluate sweeps an explicit pose list into a curve csv")
{
    const fs::path dir = test::scratch_dir("cli_eval_sweep");
    auto r = run_command(cli() + " evaluate --model " + world().model.string() + " --data " +
                             world().data.string() + " --split test --out " +
                             (dir / "e").string() +
                             " --pose-sweep 0,30,60,90 --sweep-samples 2",
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    const auto rows = csv_data_rows(dir / "e" / "pose_sweep.csv");
    REQUIRE(rows.size() == 4);
    const double expect[] = {0.0, 30.0, 60.0, 90.0};
    for (int i = 0; i < 4; ++i)
    {
        CHECK(rows[static_cast<std::size_t>(i)][0] == expect[i]);
        CHECK(std::isfinite(rows[static_cast<std::size_t>(i)][1]));
    }
}

TEST_CASE("a bare pose-sweep flag walks the default angle range")
{
    const fs::path dir = test::scratch_dir("cli_eval_sweep_bare");
    auto r = run_command(cli() + " evaluate --model " + world().model.string() + " --data " +
                             world().data.string() + " --split test --out " +
                             (dir / "e").string() +
                             " --sweep-samples 1 --pose-sweep --sweep-step 45",
                         dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    const auto rows = csv_data_rows(dir / "e" / "pose_sweep.csv");
    REQUIRE(rows.size() == 5); // -90..90 stepped by 45
    CHECK(rows.front()[0] == -90.0);
    CHECK(rows.back()[0] == 90.0);
}

TEST_CASE("verify passes on a healthy build")
{
    const fs::path dir = test::scratch_dir("cli_verify");
    auto r = run_command(cli() + " verify", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("all checks passed") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("verify catches an injected backward-pass fault")
{
    const fs::path dir = test::scratch_dir("cli_verify_fault");
    auto r = run_command("ISR_VERIFY_BREAK=dense_backward " + cli() + " verify", dir);
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("FAIL dense backward") != std::string::npos);
}
