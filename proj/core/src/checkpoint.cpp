/*
 * isr - joint shape-space learning for single-image 3D reconstruction.
 *
 * File: core/src/checkpoint.cpp
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
#include "isr/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "isr/errors.hpp"
#include "isr/rng.hpp"

namespace fs = std::filesystem;

namespace isr {

namespace {

constexpr char kMagic[4] = {'I', 'S', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

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
        throw IoError("truncated checkpoint while reading " + what);
}

template <typename T>
T read_value(std::ifstream& in, const std::string& what)
{
    T value{};
    read_bytes(in, &value, sizeof(value), what);
    return value;
}

nlohmann::json spec_to_json(const NetworkSpec& spec)
{
    nlohmann::json j;
    j["input_dim"] = spec.input_dim;
    j["latent_dim"] = spec.latent_dim;
    j["encoder_hidden"] = spec.encoder_hidden;
    j["linear_encoder"] = spec.linear_encoder;
    j["image_size"] = spec.image_size;
    j["conv_channels"] = spec.conv_channels;
    j["conv_kernel"] = spec.conv_kernel;
    j["conv_stride"] = spec.conv_stride;
    j["fc4_units"] = spec.fc4_units;
    j["dropout_ratio"] = spec.dropout_ratio;
    return j;
}

NetworkSpec spec_from_json(const nlohmann::json& j)
{
    NetworkSpec spec;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.latent_dim = j.at("latent_dim").get<int>();
    spec.encoder_hidden = j.at("encoder_hidden").get<std::vector<int>>();
    spec.linear_encoder = j.at("linear_encoder").get<bool>();
    spec.image_size = j.at("image_size").get<int>();
    spec.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    spec.conv_kernel = j.at("conv_kernel").get<int>();
    spec.conv_stride = j.at("conv_stride").get<int>();
    spec.fc4_units = j.at("fc4_units").get<int>();
    spec.dropout_ratio = j.at("dropout_ratio").get<double>();
    return spec;
}

nlohmann::json config_to_json(const TrainConfig& cfg)
{
    nlohmann::json j;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["lambda"] = cfg.lambda_couple;
    j["epochs"] = cfg.epochs;
    j["seed"] = cfg.seed;
    j["weight_decay"] = cfg.weight_decay;
    j["dropout"] = cfg.dropout;
    j["precision"] = cfg.precision == Precision::f32 ? "f32" : "f64";
    j["deterministic"] = cfg.deterministic;
    return j;
}

TrainConfig config_from_json(const nlohmann::json& j)
{
    TrainConfig cfg;
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.lr = j.at("lr").get<double>();
    cfg.lambda_couple = j.at("lambda").get<double>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.weight_decay = j.at("weight_decay").get<double>();
    cfg.dropout = j.at("dropout").get<double>();
    const std::string prec = j.at("precision").get<std::string>();
    if (prec == "f32")
        cfg.precision = Precision::f32;
    else if (prec == "f64")
        cfg.precision = Precision::f64;
    else
        throw ValidationError("checkpoint: unknown precision '" + prec + "'");
    cfg.deterministic = j.at("deterministic").get<bool>();
    return cfg;
}

void write_tensor(std::ofstream& out, const std::string& name, const double* data,
                  Eigen::Index size, Precision precision)
{
    write_value(out, static_cast<std::uint32_t>(name.size()));
    write_bytes(out, name.data(), name.size());
    write_value(out, static_cast<std::uint64_t>(size));
    if (precision == Precision::f32)
    {
        std::vector<float> buf(static_cast<std::size_t>(size));
        for (Eigen::Index i = 0; i < size; ++i)
            buf[static_cast<std::size_t>(i)] = static_cast<float>(data[i]);
        write_bytes(out, buf.data(), buf.size() * sizeof(float));
    }
    else
    {
        write_bytes(out, data, static_cast<std::size_t>(size) * sizeof(double));
    }
}

void read_tensor(std::ifstream& in, const std::string& expected_name, double* data,
                 Eigen::Index size, Precision precision)
{
    const auto name_len = read_value<std::uint32_t>(in, "tensor name length");
    if (name_len > 256)
        throw IoError("checkpoint: implausible tensor name length " + std::to_string(name_len));
    std::string name(name_len, '\0');
    read_bytes(in, name.data(), name_len, "tensor name");
    if (name != expected_name)
        throw ValidationError("checkpoint: expected tensor '" + expected_name + "', found '" +
                              name + "'");
    const auto count = read_value<std::uint64_t>(in, "tensor size of " + name);
    if (count != static_cast<std::uint64_t>(size))
        throw ValidationError("checkpoint: tensor '" + name + "' has " + std::to_string(count) +
                              " elements, expected " + std::to_string(size));
    if (precision == Precision::f32)
    {
        std::vector<float> buf(static_cast<std::size_t>(size));
        read_bytes(in, buf.data(), buf.size() * sizeof(float), "tensor " + name);
        for (Eigen::Index i = 0; i < size; ++i)
            data[i] = static_cast<double>(buf[static_cast<std::size_t>(i)]);
    }
    else
    {
        read_bytes(in, data, static_cast<std::size_t>(size) * sizeof(double), "tensor " + name);
    }
}

} // namespace

void save_checkpoint(const std::string& path, const TrainedModel& model)
{
    model.net.spec.validate();
    if (model.mean_shape.size() != model.net.spec.input_dim)
        throw ValidationError("checkpoint: mean shape length does not match input_dim");

    const fs::path dest(path);
    const fs::path tmp = dest.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open for writing: " + tmp.string());

        write_bytes(out, kMagic, 4);
        write_value(out, kVersion);
        const std::uint8_t prec = model.config.precision == Precision::f32 ? 0 : 1;
        write_value(out, prec);
        write_value(out, static_cast<std::uint32_t>(model.net.spec.input_dim));
        write_value(out, static_cast<std::uint32_t>(model.net.spec.latent_dim));
        write_value(out, static_cast<std::uint64_t>(model.net.spec.hash()));

        nlohmann::json meta;
        meta["spec"] = spec_to_json(model.net.spec);
        meta["config"] = config_to_json(model.config);
        meta["final_j1"] = model.final_j1;
        meta["final_j2"] = model.final_j2;
        meta["final_loss"] = model.final_loss;
        meta["manifest_hash"] = model.manifest_hash;
        const std::string meta_text = meta.dump();
        write_value(out, static_cast<std::uint32_t>(meta_text.size()));
        write_bytes(out, meta_text.data(), meta_text.size());

        JointNetwork net_copy = model.net; // param_views needs mutable access
        std::vector<nn::ParamView> views = net_copy.param_views();
        write_value(out, static_cast<std::uint64_t>(views.size() + 1));
        for (const nn::ParamView& v : views)
            write_tensor(out, v.name, v.data, v.size, model.config.precision);
        write_tensor(out, "mean_shape", model.mean_shape.data(), model.mean_shape.size(),
                     model.config.precision);
        if (!out)
            throw IoError("failed while writing checkpoint: " + tmp.string());
    }
    fs::rename(tmp, dest);
}

TrainedModel load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("missing file: " + path);

    char magic[4];
    read_bytes(in, magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
    {
        std::string found;
        for (char c : magic)
            found += (c >= 0x20 && c < 0x7f) ? c : '?';
        throw IoError("bad magic in " + path + ": expected \"ISRM\", found \"" + found +
                      "\"; not a model checkpoint");
    }
    const auto version = read_value<std::uint32_t>(in, "version");
    if (version != kVersion)
        throw ValidationError("checkpoint " + path + ": unsupported version " +
                              std::to_string(version));
    const auto prec_byte = read_value<std::uint8_t>(in, "precision");
    if (prec_byte > 1)
        throw ValidationError("checkpoint " + path + ": unknown precision byte " +
                              std::to_string(prec_byte));
    const Precision precision = prec_byte == 0 ? Precision::f32 : Precision::f64;
    const auto input_dim = read_value<std::uint32_t>(in, "input_dim");
    const auto latent_dim = read_value<std::uint32_t>(in, "latent_dim");
    const auto stored_hash = read_value<std::uint64_t>(in, "architecture hash");

    const auto meta_len = read_value<std::uint32_t>(in, "metadata length");
    if (meta_len > 1'000'000)
        throw IoError("checkpoint: implausible metadata length " + std::to_string(meta_len));
    std::string meta_text(meta_len, '\0');
    read_bytes(in, meta_text.data(), meta_len, "metadata");
    nlohmann::json meta;
    try
    {
        meta = nlohmann::json::parse(meta_text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ValidationError("checkpoint metadata is not valid JSON: " + std::string(e.what()));
    }

    TrainedModel model;
    NetworkSpec spec;
    try
    {
        spec = spec_from_json(meta.at("spec"));
        model.config = config_from_json(meta.at("config"));
        model.final_j1 = meta.at("final_j1").get<double>();
        model.final_j2 = meta.at("final_j2").get<double>();
        model.final_loss = meta.at("final_loss").get<double>();
        model.manifest_hash = meta.at("manifest_hash").get<std::string>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ValidationError("checkpoint metadata is missing or mistypes a key: " +
                              std::string(e.what()));
    }
    spec.validate();
    if (spec.input_dim != static_cast<int>(input_dim) ||
        spec.latent_dim != static_cast<int>(latent_dim))
        throw ValidationError("checkpoint: header dims do not match the stored architecture");
    if (spec.hash() != stored_hash)
        throw ValidationError("checkpoint: architecture hash mismatch");
    if (model.config.precision != precision)
        throw ValidationError("checkpoint: header precision does not match the stored config");

    // Rebuild the network skeleton, then overwrite every parameter tensor.
    Rng rng(0);
    model.net = JointNetwork::init(spec, Eigen::VectorXd::Zero(spec.input_dim), rng);
    std::vector<nn::ParamView> views = model.net.param_views();
    const auto tensor_count = read_value<std::uint64_t>(in, "tensor count");
    if (tensor_count != views.size() + 1)
        throw ValidationError("checkpoint: expected " + std::to_string(views.size() + 1) +
                              " tensors, found " + std::to_string(tensor_count));
    for (nn::ParamView& v : views)
        read_tensor(in, v.name, v.data, v.size, precision);
    model.mean_shape.resize(spec.input_dim);
    read_tensor(in, "mean_shape", model.mean_shape.data(), model.mean_shape.size(), precision);

    char extra = 0;
    if (in.read(&extra, 1); in.gcount() != 0)
        throw IoError("checkpoint " + path + ": trailing bytes after the last tensor");
    return model;
}

} // namespace isr
