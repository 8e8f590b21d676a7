// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/harness/checkpoint.hpp"

#include "samslab/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace samslab {

namespace {

using Json = nlohmann::json;

constexpr std::array<char, 8> kMagic{'S', 'A', 'M', 'S', 'C', 'K', 'P', 'T'};

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <typename T>
void put(std::ostream& out, T v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw InputError(fmt::format("{}: truncated checkpoint", path.string()));
    return to_little(v);
}

NamedTensor capture(const std::string& name, const DenseMatrix& m) {
    NamedTensor t{name, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
    t.values.assign(m.data(), m.data() + m.size());
    return t;
}

NamedTensor capture(const std::string& name, const Vector& v) {
    NamedTensor t{name, static_cast<std::size_t>(v.size()), 1, {}};
    t.values.assign(v.data(), v.data() + v.size());
    return t;
}

void restore(const Checkpoint& ckpt, const std::string& name, DenseMatrix& m) {
    const NamedTensor& t = ckpt.tensor(name);
    if (t.rows != static_cast<std::size_t>(m.rows()) || t.cols != static_cast<std::size_t>(m.cols())) {
        throw ConfigError(fmt::format("checkpoint tensor {} is {}x{}, expected {}x{}", name, t.rows, t.cols, m.rows(),
                                      m.cols()));
    }
    std::copy(t.values.begin(), t.values.end(), m.data());
}

void restore(const Checkpoint& ckpt, const std::string& name, Vector& v) {
    const NamedTensor& t = ckpt.tensor(name);
    if (t.rows != static_cast<std::size_t>(v.size()) || t.cols != 1) {
        throw ConfigError(fmt::format("checkpoint tensor {} is {}x{}, expected {}x1", name, t.rows, t.cols, v.size()));
    }
    std::copy(t.values.begin(), t.values.end(), v.data());
}

void capture_mlp(std::vector<NamedTensor>& out, const std::string& prefix, const ResidualMlpParams& p) {
    for (std::size_t k = 0; k < p.weights.size(); ++k) {
        out.push_back(capture(fmt::format("{}.weight{}", prefix, k), p.weights[k]));
        out.push_back(capture(fmt::format("{}.bias{}", prefix, k), p.biases[k]));
    }
}

void restore_mlp(const Checkpoint& ckpt, const std::string& prefix, ResidualMlpParams& p) {
    for (std::size_t k = 0; k < p.weights.size(); ++k) {
        restore(ckpt, fmt::format("{}.weight{}", prefix, k), p.weights[k]);
        restore(ckpt, fmt::format("{}.bias{}", prefix, k), p.biases[k]);
    }
}

}  // namespace

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw InputError(fmt::format("{} checkpoint has no tensor '{}'", kind, name));
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    Json table = Json::array();
    std::size_t offset = 0;
    for (const auto& t : ckpt.tensors) {
        if (t.values.size() != t.rows * t.cols) {
            throw ContractViolation(fmt::format("tensor {} holds {} values for shape {}x{}", t.name, t.values.size(),
                                                t.rows, t.cols));
        }
        table.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
        offset += t.values.size();
    }
    const Json header{{"kind", ckpt.kind},
                      {"version", kCheckpointVersion},
                      {"config_hash", fmt::format("{:016x}", ckpt.config_hash)},
                      {"dims", Json::parse(ckpt.dims_json)},
                      {"tensors", table}};
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : ckpt.tensors) {
        for (double v : t.values) put<double>(out, v);
    }
    out.flush();
    if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open checkpoint {}", path.string()));
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw InputError(fmt::format("{} is not a samslab checkpoint", path.string()));
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw InputError(fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
    }
    const auto header_len = get<std::uint64_t>(in, path);
    if (header_len > (1u << 26)) throw InputError(fmt::format("{}: implausible header length", path.string()));
    std::string text(header_len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw InputError(fmt::format("{}: truncated checkpoint header", path.string()));

    Checkpoint ckpt;
    try {
        const Json header = Json::parse(text);
        ckpt.kind = header.at("kind").get<std::string>();
        ckpt.config_hash = std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
        ckpt.dims_json = header.at("dims").dump();
        for (const auto& entry : header.at("tensors")) {
            NamedTensor t;
            t.name = entry.at("name").get<std::string>();
            t.rows = entry.at("rows").get<std::size_t>();
            t.cols = entry.at("cols").get<std::size_t>();
            ckpt.tensors.push_back(std::move(t));
        }
    } catch (const Json::exception& e) {
        throw InputError(fmt::format("{}: malformed checkpoint header: {}", path.string(), e.what()));
    }
    for (auto& t : ckpt.tensors) {
        t.values.resize(t.rows * t.cols);
        for (double& v : t.values) v = get<double>(in, path);
    }
    return ckpt;
}

Checkpoint policy_checkpoint(const PolicyParams& p, std::uint64_t config_hash) {
    Checkpoint c;
    c.kind = "policy";
    c.config_hash = config_hash;
    c.dims_json = Json{{"vocab", p.shape.vocab}, {"max_len", p.shape.max_len}, {"dim", p.shape.dim},
                       {"layers", p.shape.layers}}
                      .dump();
    c.tensors.push_back(capture("embedding", p.embedding));
    for (std::size_t l = 0; l < p.blocks.size(); ++l) {
        const auto& b = p.blocks[l];
        c.tensors.push_back(capture(fmt::format("block{}.state_weight", l), b.state_weight));
        c.tensors.push_back(capture(fmt::format("block{}.token_weight", l), b.token_weight));
        c.tensors.push_back(capture(fmt::format("block{}.hidden_bias", l), b.hidden_bias));
        c.tensors.push_back(capture(fmt::format("block{}.out_weight", l), b.out_weight));
        c.tensors.push_back(capture(fmt::format("block{}.out_bias", l), b.out_bias));
    }
    c.tensors.push_back(capture("head_weight", p.head_weight));
    c.tensors.push_back(capture("head_bias", p.head_bias));
    return c;
}

PolicyShape policy_shape_of(const Checkpoint& ckpt) {
    if (ckpt.kind != "policy") throw ConfigError(fmt::format("expected a policy checkpoint, got '{}'", ckpt.kind));
    try {
        const Json d = Json::parse(ckpt.dims_json);
        return {.vocab = d.at("vocab").get<std::size_t>(), .max_len = d.at("max_len").get<std::size_t>(),
                .dim = d.at("dim").get<std::size_t>(), .layers = d.at("layers").get<std::size_t>()};
    } catch (const Json::exception& e) {
        throw InputError(fmt::format("policy checkpoint dims: {}", e.what()));
    }
}

PolicyParams policy_from_checkpoint(const Checkpoint& ckpt) {
    PolicyParams p(policy_shape_of(ckpt));
    restore(ckpt, "embedding", p.embedding);
    for (std::size_t l = 0; l < p.blocks.size(); ++l) {
        auto& b = p.blocks[l];
        restore(ckpt, fmt::format("block{}.state_weight", l), b.state_weight);
        restore(ckpt, fmt::format("block{}.token_weight", l), b.token_weight);
        restore(ckpt, fmt::format("block{}.hidden_bias", l), b.hidden_bias);
        restore(ckpt, fmt::format("block{}.out_weight", l), b.out_weight);
        restore(ckpt, fmt::format("block{}.out_bias", l), b.out_bias);
    }
    restore(ckpt, "head_weight", p.head_weight);
    restore(ckpt, "head_bias", p.head_bias);
    return p;
}

Checkpoint scheduler_checkpoint(const SchedulerState& s, std::uint64_t config_hash) {
    const auto& cfg = s.config();
    const auto& e = s.encoder();
    Checkpoint c;
    c.kind = "scheduler";
    c.config_hash = config_hash;
    c.dims_json = Json{{"encoder_layers", cfg.encoder.layers},
                       {"encoder_state_dim", cfg.encoder.state_dim},
                       {"encoder_width", cfg.encoder.width},
                       {"context_dim", cfg.encoder.context_dim},
                       {"exploit_width", cfg.exploit_width},
                       {"exploit_depth", cfg.exploit_depth},
                       {"downsample", cfg.downsample},
                       {"lambda", cfg.exploration_weight},
                       {"encoder_frozen", s.encoder_frozen()}}
                      .dump();
    c.tensors.push_back(capture("encoder.connector1_weight", e.connector1_weight));
    c.tensors.push_back(capture("encoder.connector1_bias", e.connector1_bias));
    c.tensors.push_back(capture("encoder.connector2_weight", e.connector2_weight));
    c.tensors.push_back(capture("encoder.connector2_bias", e.connector2_bias));
    c.tensors.push_back(capture("encoder.query_weight", e.query_weight));
    c.tensors.push_back(capture("encoder.key_weight", e.key_weight));
    c.tensors.push_back(capture("encoder.value_weight", e.value_weight));
    c.tensors.push_back(capture("encoder.projection_weight", e.projection_weight));
    c.tensors.push_back(capture("encoder.projection_bias", e.projection_bias));
    capture_mlp(c.tensors, "exploit", s.exploit_net());
    capture_mlp(c.tensors, "explore", s.explore_net());
    return c;
}

void load_scheduler_checkpoint(const Checkpoint& ckpt, SchedulerState& s) {
    if (ckpt.kind != "scheduler") {
        throw ConfigError(fmt::format("expected a scheduler checkpoint, got '{}'", ckpt.kind));
    }
    auto& e = s.encoder();
    restore(ckpt, "encoder.connector1_weight", e.connector1_weight);
    restore(ckpt, "encoder.connector1_bias", e.connector1_bias);
    restore(ckpt, "encoder.connector2_weight", e.connector2_weight);
    restore(ckpt, "encoder.connector2_bias", e.connector2_bias);
    restore(ckpt, "encoder.query_weight", e.query_weight);
    restore(ckpt, "encoder.key_weight", e.key_weight);
    restore(ckpt, "encoder.value_weight", e.value_weight);
    restore(ckpt, "encoder.projection_weight", e.projection_weight);
    restore(ckpt, "encoder.projection_bias", e.projection_bias);
    restore_mlp(ckpt, "exploit", s.exploit_net());
    restore_mlp(ckpt, "explore", s.explore_net());
    try {
        s.set_encoder_frozen(Json::parse(ckpt.dims_json).at("encoder_frozen").get<bool>());
    } catch (const Json::exception& ex) {
        throw InputError(fmt::format("scheduler checkpoint dims: {}", ex.what()));
    }
}

}  // namespace samslab
