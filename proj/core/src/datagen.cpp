/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/datagen.cpp
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
#include "isr/datagen.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "isr/errors.hpp"
#include "isr/rng.hpp"

namespace fs = std::filesystem;

namespace isr {

namespace {

// Binary layouts below are little-endian; this code targets LE hosts.

void write_bytes(std::ofstream& out, const void* data, std::size_t len)
{
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

template <typename T>
void write_value(std::ofstream& out, const T& value)
{
    write_bytes(out, &value, sizeof(value));
}

void read_bytes(std::ifstream& in, void* data, std::size_t len, const std::string& what)
{
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in.gcount()) != len)
        throw IoError("truncated file while reading " + what);
}

template <typename T>
T read_value(std::ifstream& in, const std::string& what)
{
    T value{};
    read_bytes(in, &value, sizeof(value), what);
    return value;
}

std::string read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("missing file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_f32_matrix(const fs::path& path, const Eigen::MatrixXd& m)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open for writing: " + path.string());
    std::vector<float> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
    {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row[static_cast<std::size_t>(c)] = static_cast<float>(m(r, c));
        write_bytes(out, row.data(), row.size() * sizeof(float));
    }
    if (!out)
        throw IoError("failed while writing: " + path.string());
}

Eigen::MatrixXd read_f32_matrix(const fs::path& path, int rows, int cols)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("missing file: " + path.string());
    const auto expected =
        static_cast<std::uintmax_t>(rows) * static_cast<std::uintmax_t>(cols) * sizeof(float);
    const std::uintmax_t actual = fs::file_size(path);
    if (actual != expected)
        throw IoError(path.string() + ": expected " + std::to_string(expected) +
                      " bytes, found " + std::to_string(actual));
    Eigen::MatrixXd m(rows, cols);
    std::vector<float> row(static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r)
    {
        read_bytes(in, row.data(), row.size() * sizeof(float), path.string());
        for (int c = 0; c < cols; ++c)
            m(r, c) = static_cast<double>(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

Eigen::MatrixXd round_matrix_f32(Eigen::MatrixXd m)
{
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
    return m;
}

std::string image_name(int id)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d.pgm", id);
    return buf;
}

constexpr char kBundleMagic[4] = {'I', 'S', 'G', 'T'};

} // namespace

void DatasetManifest::validate() const
{
    if (version != 1)
        throw ValidationError("dataset manifest: unsupported version " +
                              std::to_string(version));
    if (count <= 0)
        throw ValidationError("dataset manifest: count must be positive, got " +
                              std::to_string(count));
    if (d_true <= 0 || n <= 0 || resolution <= 0)
        throw ValidationError("dataset manifest: dims must be positive");
    if (!(pose_fraction >= 0.0 && pose_fraction <= 1.0))
        throw ValidationError("dataset manifest: pose_fraction must lie in [0, 1]");
    if (!(split_train >= 0.0 && split_test >= 0.0 && split_train + split_test <= 1.0 + 1e-12))
        throw ValidationError("dataset manifest: split fractions must be non-negative and sum "
                              "to at most 1");
}

void GenerateConfig::validate() const
{
    if (count <= 0)
        throw ValidationError("generate config: count must be positive");
    if (!(pose_fraction >= 0.0 && pose_fraction <= 1.0))
        throw ValidationError("generate config: pose_fraction must lie in [0, 1]");
    if (!(max_yaw_deg >= 0.0 && max_yaw_deg <= 90.0))
        throw ValidationError("generate config: max_yaw_deg must lie in [0, 90]");
    if (!(split_train >= 0.0 && split_test >= 0.0 && split_train + split_test <= 1.0 + 1e-12))
        throw ValidationError("generate config: split fractions must be non-negative and sum "
                              "to at most 1");
}

void save_bundle(const std::string& path, const GroundTruthBundle& bundle)
{
    bundle.model.validate();
    bundle.mesh.validate();
    bundle.render_cfg.validate();
    if (bundle.mesh.cloud.vertex_count() != bundle.model.vertex_count())
        throw ValidationError("bundle: mesh vertex count does not match the model");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    write_bytes(out, kBundleMagic, 4);
    write_value<std::uint32_t>(out, 1); // version
    const auto n = static_cast<std::uint32_t>(bundle.model.vertex_count());
    const auto d = static_cast<std::uint32_t>(bundle.model.dim());
    write_value(out, n);
    write_value(out, d);
    write_bytes(out, bundle.model.mean.data(), sizeof(double) * bundle.model.mean.size());
    write_bytes(out, bundle.model.basis.data(), sizeof(double) * bundle.model.basis.size());
    write_bytes(out, bundle.model.coeff_sigma.data(),
                sizeof(double) * bundle.model.coeff_sigma.size());
    write_bytes(out, bundle.mesh.cloud.coords.data(),
                sizeof(double) * bundle.mesh.cloud.coords.size());
    write_value(out, static_cast<std::uint32_t>(bundle.mesh.faces.size()));
    for (const auto& f : bundle.mesh.faces)
        for (int idx : f)
            write_value(out, static_cast<std::int32_t>(idx));
    const RenderConfig& rc = bundle.render_cfg;
    write_value(out, static_cast<std::int32_t>(rc.resolution));
    write_value(out, rc.view_min_x);
    write_value(out, rc.view_max_x);
    write_value(out, rc.view_min_y);
    write_value(out, rc.view_max_y);
    for (int i = 0; i < 3; ++i)
        write_value(out, rc.light_dir[i]);
    write_value(out, rc.ambient);
    write_value(out, static_cast<std::int32_t>(rc.splat_radius));
    if (!out)
        throw IoError("failed while writing: " + path);
}

GroundTruthBundle load_bundle(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("missing file: " + path);
    char magic[4];
    read_bytes(in, magic, 4, "bundle magic");
    if (std::memcmp(magic, kBundleMagic, 4) != 0)
        throw IoError("bad magic in " + path + ": not a ground-truth bundle");
    const auto version = read_value<std::uint32_t>(in, "bundle version");
    if (version != 1)
        throw ValidationError("bundle " + path + ": unsupported version " +
                              std::to_string(version));
    const auto n = read_value<std::uint32_t>(in, "bundle vertex count");
    const auto d = read_value<std::uint32_t>(in, "bundle basis dim");
    if (n == 0 || d == 0 || n > 10'000'000 || d > 1'000'000)
        throw ValidationError("bundle " + path + ": implausible dims n=" + std::to_string(n) +
                              " d=" + std::to_string(d));

    GroundTruthBundle bundle;
    bundle.model.mean.resize(3 * static_cast<Eigen::Index>(n));
    read_bytes(in, bundle.model.mean.data(), sizeof(double) * bundle.model.mean.size(),
               "bundle mean");
    bundle.model.basis.resize(3 * static_cast<Eigen::Index>(n), d);
    read_bytes(in, bundle.model.basis.data(), sizeof(double) * bundle.model.basis.size(),
               "bundle basis");
    bundle.model.coeff_sigma.resize(d);
    read_bytes(in, bundle.model.coeff_sigma.data(),
               sizeof(double) * bundle.model.coeff_sigma.size(), "bundle sigma");
    Eigen::VectorXd coords(3 * static_cast<Eigen::Index>(n));
    read_bytes(in, coords.data(), sizeof(double) * coords.size(), "bundle mesh coords");
    bundle.mesh.cloud = PointCloud(std::move(coords));
    const auto face_count = read_value<std::uint32_t>(in, "bundle face count");
    if (face_count > 30'000'000)
        throw ValidationError("bundle " + path + ": implausible face count");
    bundle.mesh.faces.resize(face_count);
    for (auto& f : bundle.mesh.faces)
        for (int k = 0; k < 3; ++k)
            f[static_cast<std::size_t>(k)] =
                static_cast<int>(read_value<std::int32_t>(in, "bundle face"));
    RenderConfig& rc = bundle.render_cfg;
    rc.resolution = read_value<std::int32_t>(in, "bundle resolution");
    rc.view_min_x = read_value<double>(in, "bundle view");
    rc.view_max_x = read_value<double>(in, "bundle view");
    rc.view_min_y = read_value<double>(in, "bundle view");
    rc.view_max_y = read_value<double>(in, "bundle view");
    for (int i = 0; i < 3; ++i)
        rc.light_dir[i] = read_value<double>(in, "bundle light");
    rc.ambient = read_value<double>(in, "bundle ambient");
    rc.splat_radius = read_value<std::int32_t>(in, "bundle splat radius");

    bundle.model.validate();
    bundle.mesh.validate();
    rc.validate();
    if (bundle.mesh.cloud.vertex_count() != bundle.model.vertex_count())
        throw ValidationError("bundle " + path + ": mesh vertex count does not match the model");
    return bundle;
}

void generate_dataset(const GroundTruthModel& gt, const RenderConfig& render_cfg,
                      const GenerateConfig& cfg, const std::string& out_dir)
{
    cfg.validate();
    render_cfg.validate();
    gt.model.validate();
    gt.mesh.validate();
    if (gt.mesh.cloud.vertex_count() != gt.model.vertex_count())
        throw ValidationError("generate: mesh vertex count does not match the model");

    const fs::path dest(out_dir);
    if (fs::exists(dest))
        throw IoError("output directory already exists: " + out_dir);
    const fs::path tmp = dest.string() + ".tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec); // stale staging dir from an interrupted run
    fs::create_directories(tmp / "images");

    const int n = gt.model.vertex_count();
    const int d = gt.model.dim();

    // Coefficients come from the model prior; the pose subset and yaws use an
    // independent stream so changing the count of one leaves the other alone.
    std::vector<LatentCode> zs = sample_coefficients(gt.model, cfg.count, cfg.seed);
    Rng pose_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    const int posed = static_cast<int>(std::lround(cfg.pose_fraction * cfg.count));
    std::vector<int> ids(static_cast<std::size_t>(cfg.count));
    std::iota(ids.begin(), ids.end(), 0);
    pose_rng.shuffle(ids);
    std::vector<char> is_posed(static_cast<std::size_t>(cfg.count), 0);
    for (int i = 0; i < posed; ++i)
        is_posed[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = 1;

    Eigen::MatrixXd coeffs(cfg.count, d);
    for (int i = 0; i < cfg.count; ++i)
        coeffs.row(i) = zs[static_cast<std::size_t>(i)].values.transpose();
    coeffs = round_matrix_f32(std::move(coeffs));

    Eigen::MatrixXd shapes(cfg.count, 3 * n);
    Eigen::VectorXd yaws = Eigen::VectorXd::Zero(cfg.count);

    std::ofstream poses(tmp / "poses.csv", std::ios::trunc);
    if (!poses)
        throw IoError("cannot open for writing: " + (tmp / "poses.csv").string());
    poses << "id,yaw_deg\n";
    poses.precision(17);

    TriangleMesh view = gt.mesh; // coords replaced per sample
    for (int i = 0; i < cfg.count; ++i)
    {
        LatentCode z(coeffs.row(i).transpose());
        PointCloud shape = synthesize_shape(gt.model, z);
        // Round before rendering so the stored f32 row is exactly what the
        // image was made from.
        for (Eigen::Index k = 0; k < shape.coords.size(); ++k)
            shape.coords[k] = static_cast<double>(static_cast<float>(shape.coords[k]));
        shapes.row(i) = shape.coords.transpose();

        if (is_posed[static_cast<std::size_t>(i)])
            yaws[i] = pose_rng.uniform(-cfg.max_yaw_deg, cfg.max_yaw_deg);
        poses << i << ',' << yaws[i] << '\n';

        view.cloud = (yaws[i] != 0.0) ? rotate_yaw(shape, Pose{yaws[i]}) : shape;
        GrayImage img = render_orthographic(view, render_cfg);
        save_pgm(tmp / "images" / image_name(i), img);
    }
    if (!poses)
        throw IoError("failed while writing poses.csv");
    poses.close();

    write_f32_matrix(tmp / "shapes.f32", shapes);
    write_f32_matrix(tmp / "coeffs.f32", coeffs);

    GroundTruthBundle bundle{gt.model, gt.mesh, render_cfg};
    save_bundle((tmp / "gt_model.bin").string(), bundle);

    nlohmann::json j;
    j["count"] = cfg.count;
    j["d_true"] = d;
    j["n"] = n;
    j["resolution"] = render_cfg.resolution;
    j["pose_fraction"] = cfg.pose_fraction;
    j["posed"] = posed;
    j["seed"] = cfg.seed;
    j["split_train"] = cfg.split_train;
    j["split_test"] = cfg.split_test;
    j["version"] = 1;
    {
        std::ofstream mf(tmp / "manifest.json", std::ios::trunc);
        if (!mf)
            throw IoError("cannot open for writing: " + (tmp / "manifest.json").string());
        mf << j.dump(2) << '\n';
        if (!mf)
            throw IoError("failed while writing manifest.json");
    }

    fs::rename(tmp, dest);
}

Dataset load_dataset(const std::string& dir)
{
    const fs::path root(dir);
    if (!fs::is_directory(root))
        throw IoError("dataset directory not found: " + dir);

    const std::string manifest_text = read_text_file(root / "manifest.json");
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(manifest_text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ValidationError("manifest.json is not valid JSON: " + std::string(e.what()));
    }

    Dataset data;
    try
    {
        data.manifest.count = j.at("count").get<int>();
        data.manifest.d_true = j.at("d_true").get<int>();
        data.manifest.n = j.at("n").get<int>();
        data.manifest.resolution = j.at("resolution").get<int>();
        data.manifest.pose_fraction = j.at("pose_fraction").get<double>();
        data.manifest.seed = j.at("seed").get<std::uint64_t>();
        data.manifest.split_train = j.at("split_train").get<double>();
        data.manifest.split_test = j.at("split_test").get<double>();
        data.manifest.version = j.at("version").get<int>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ValidationError("manifest.json is missing or mistypes a key: " +
                              std::string(e.what()));
    }
    data.manifest.validate();
    data.manifest_hash = file_hash_hex((root / "manifest.json").string());

    data.bundle = load_bundle((root / "gt_model.bin").string());
    if (data.bundle.model.vertex_count() != data.manifest.n)
        throw ValidationError("dataset: bundle vertex count " +
                              std::to_string(data.bundle.model.vertex_count()) +
                              " does not match manifest n " + std::to_string(data.manifest.n));
    if (data.bundle.model.dim() != data.manifest.d_true)
        throw ValidationError("dataset: bundle basis dim does not match manifest d_true");
    if (data.bundle.render_cfg.resolution != data.manifest.resolution)
        throw ValidationError("dataset: bundle resolution does not match manifest");

    data.shapes = read_f32_matrix(root / "shapes.f32", data.manifest.count, 3 * data.manifest.n);
    data.coeffs = read_f32_matrix(root / "coeffs.f32", data.manifest.count, data.manifest.d_true);

    // poses.csv: strict header, one row per id in order.
    {
        std::ifstream in(root / "poses.csv");
        if (!in)
            throw IoError("missing file: " + (root / "poses.csv").string());
        std::string line;
        if (!std::getline(in, line) || line != "id,yaw_deg")
            throw ValidationError("poses.csv: expected header 'id,yaw_deg'");
        data.yaw_deg.resize(data.manifest.count);
        for (int i = 0; i < data.manifest.count; ++i)
        {
            if (!std::getline(in, line))
                throw IoError("poses.csv: expected " + std::to_string(data.manifest.count) +
                              " rows, found " + std::to_string(i));
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw ValidationError("poses.csv: malformed row " + std::to_string(i));
            int id = 0;
            double yaw = 0.0;
            try
            {
                id = std::stoi(line.substr(0, comma));
                yaw = std::stod(line.substr(comma + 1));
            }
            catch (const std::exception&)
            {
                throw ValidationError("poses.csv: malformed row " + std::to_string(i));
            }
            if (id != i)
                throw ValidationError("poses.csv: row " + std::to_string(i) + " has id " +
                                      std::to_string(id) + ", ids must be 0..count-1 in order");
            Pose{yaw}.validate();
            data.yaw_deg[i] = yaw;
        }
    }

    const int res = data.manifest.resolution;
    data.images = nn::Tensor::zeros({data.manifest.count, 1, res, res});
    for (int i = 0; i < data.manifest.count; ++i)
    {
        GrayImage img = load_pgm(root / "images" / image_name(i));
        if (img.width != res || img.height != res)
            throw ValidationError("dataset image " + image_name(i) + ": expected " +
                                  std::to_string(res) + "x" + std::to_string(res) + ", got " +
                                  std::to_string(img.width) + "x" + std::to_string(img.height));
        data.images.data.segment(static_cast<Eigen::Index>(i) * res * res, res * res) =
            img.pixels;
    }
    return data;
}

int Dataset::test_count() const
{
    return static_cast<int>(std::lround(manifest.split_test * manifest.count));
}

std::vector<int> split_ids(const Dataset& data, Split split)
{
    const int count = data.manifest.count;
    const int n_test = data.test_count();
    int lo = 0, hi = count;
    if (split == Split::train)
        hi = count - n_test;
    else if (split == Split::test)
        lo = count - n_test;
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(hi - lo));
    for (int i = lo; i < hi; ++i)
        ids.push_back(i);
    return ids;
}

TrainingSet make_training_set(const Dataset& data, Split split)
{
    const std::vector<int> ids = split_ids(data, split);
    if (ids.empty())
        throw ValidationError("dataset split is empty");
    const int res = data.manifest.resolution;
    TrainingSet set;
    set.shapes.resize(static_cast<Eigen::Index>(ids.size()), data.shapes.cols());
    set.images = nn::Tensor::zeros({static_cast<int>(ids.size()), 1, res, res});
    const Eigen::Index pix = static_cast<Eigen::Index>(res) * res;
    for (std::size_t r = 0; r < ids.size(); ++r)
    {
        set.shapes.row(static_cast<Eigen::Index>(r)) = data.shapes.row(ids[r]);
        set.images.data.segment(static_cast<Eigen::Index>(r) * pix, pix) =
            data.images.data.segment(static_cast<Eigen::Index>(ids[r]) * pix, pix);
    }
    return set;
}

std::string file_hash_hex(const std::string& path)
{
    const std::string bytes = read_text_file(path);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace isr
