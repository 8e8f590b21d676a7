// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/harness/config.hpp"

#include "samslab/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace samslab {

namespace {

using Json = nlohmann::json;

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(fmt::format("config field '{}': {}", key, e.what()));
    }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(fmt::format("unknown {} field '{}'", where, key));
    }
}

Json generator_to_json(const GeneratorSpec& g) {
    return Json{{"feature_dim", g.feature_dim}, {"vocab", g.vocab},
                {"prompt_min", g.prompt_min},   {"prompt_max", g.prompt_max},
                {"response_min", g.response_min}, {"response_max", g.response_max},
                {"interaction", g.interaction}, {"paired_lengths", g.paired_lengths},
                {"noise_rate", g.noise_rate},
                {"train_size", g.train_size},   {"test_size", g.test_size},
                {"seed", g.seed}};
}

GeneratorSpec generator_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("'data' must be an object");
    reject_unknown(j,
                   {"feature_dim", "vocab", "prompt_min", "prompt_max", "response_min", "response_max",
                    "interaction", "paired_lengths", "noise_rate", "train_size", "test_size", "seed"},
                   "data");
    GeneratorSpec g;
    read_field(j, "feature_dim", g.feature_dim);
    read_field(j, "vocab", g.vocab);
    read_field(j, "prompt_min", g.prompt_min);
    read_field(j, "prompt_max", g.prompt_max);
    read_field(j, "response_min", g.response_min);
    read_field(j, "response_max", g.response_max);
    read_field(j, "interaction", g.interaction);
    read_field(j, "paired_lengths", g.paired_lengths);
    read_field(j, "noise_rate", g.noise_rate);
    read_field(j, "train_size", g.train_size);
    read_field(j, "test_size", g.test_size);
    read_field(j, "seed", g.seed);
    return g;
}

}  // namespace

std::string_view mode_name(TrainMode mode) {
    switch (mode) {
        case TrainMode::Full: return "dpo-full";
        case TrainMode::RandomK: return "dpo-random-k";
        case TrainMode::Sams: return "dpo-sams";
    }
    return "unknown";
}

TrainMode parse_mode(std::string_view name) {
    if (name == "dpo-full") return TrainMode::Full;
    if (name == "dpo-random-k") return TrainMode::RandomK;
    if (name == "dpo-sams") return TrainMode::Sams;
    throw ConfigError(fmt::format("unknown mode '{}' (expected dpo-full, dpo-random-k or dpo-sams)", name));
}

void validate(const RunConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(std::isfinite(c.beta) && c.beta > 0.0, fmt::format("beta must be positive, got {}", c.beta));
    require(c.gamma >= 0.0 && c.gamma <= 1.0, fmt::format("gamma must lie in [0, 1], got {}", c.gamma));
    require(std::isfinite(c.lambda) && c.lambda >= 0.0, fmt::format("lambda must be >= 0, got {}", c.lambda));
    require(c.batch_size >= 1, "batch_size must be at least 1");
    require(c.select_k >= 1 && c.select_k <= c.batch_size,
            fmt::format("select_k must satisfy 1 <= K <= batch_size ({}), got {}", c.batch_size, c.select_k));
    require(c.rounds >= 1, "rounds must be at least 1");
    for (double lr : {c.policy_lr, c.exploit_lr, c.explore_lr, c.encoder_lr, c.sft_lr}) {
        require(std::isfinite(lr) && lr >= 0.0, fmt::format("learning rates must be finite and >= 0, got {}", lr));
    }
    require(c.pool_capacity >= 1, "pool_capacity must be at least 1");
    require(c.eval_interval >= 1, "eval_interval must be at least 1");
    require(c.policy.vocab == c.data.vocab,
            fmt::format("policy vocab {} does not match data vocab {}", c.policy.vocab, c.data.vocab));
    require(c.data.prompt_max <= c.policy.max_len && c.data.response_max <= c.policy.max_len,
            fmt::format("generated sequences may exceed max_len {}", c.policy.max_len));
    require(c.policy.layers >= 2, "policy must have at least 2 layers");
    require(c.policy.dim >= 1 && c.encoder_width >= 1 && c.context_dim >= 1, "dimensions must be positive");
    require(c.exploit_depth >= 2, "exploit_depth must be at least 2");
    require(c.downsample >= 1 && ((c.exploit_depth - 1) * c.exploit_width) % c.downsample == 0,
            fmt::format("(exploit_depth - 1) * exploit_width = {} is not divisible by downsample {}",
                        (c.exploit_depth - 1) * c.exploit_width, c.downsample));
    validate(c.data);
}

SchedulerConfig scheduler_config(const RunConfig& c) {
    SchedulerConfig s;
    s.encoder = {.layers = c.policy.layers, .state_dim = c.policy.dim, .width = c.encoder_width,
                 .context_dim = c.context_dim};
    s.exploit_width = c.exploit_width;
    s.exploit_depth = c.exploit_depth;
    s.downsample = c.downsample;
    s.exploration_weight = c.lambda;
    s.exploit_lr = c.exploit_lr;
    s.explore_lr = c.explore_lr;
    s.encoder_lr = c.encoder_lr;
    s.pool_capacity = c.pool_capacity;
    s.stale_exploration_features = c.stale_exploration_features;
    s.seed = c.seed ^ 0x5ca1ab1eULL;
    return s;
}

RunConfig run_config_from_json(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"seed", "mode", "beta", "gamma", "lambda", "batch_size", "select_k", "rounds", "policy_lr",
                    "exploit_lr", "explore_lr", "encoder_lr", "pool_capacity", "offline_batches", "sft_rounds",
                    "sft_lr", "pretrain", "encoder_frozen", "stale_exploration_features", "eval_interval",
                    "record_wall_clock", "dump_schedule", "vocab", "max_len", "policy_dim", "policy_layers",
                    "encoder_width", "context_dim", "exploit_width", "exploit_depth", "downsample", "data"},
                   "config");
    RunConfig c;
    read_field(j, "seed", c.seed);
    if (j.contains("mode")) {
        std::string m;
        read_field(j, "mode", m);
        c.mode = parse_mode(m);
    }
    read_field(j, "beta", c.beta);
    read_field(j, "gamma", c.gamma);
    read_field(j, "lambda", c.lambda);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "select_k", c.select_k);
    read_field(j, "rounds", c.rounds);
    read_field(j, "policy_lr", c.policy_lr);
    read_field(j, "exploit_lr", c.exploit_lr);
    read_field(j, "explore_lr", c.explore_lr);
    read_field(j, "encoder_lr", c.encoder_lr);
    read_field(j, "pool_capacity", c.pool_capacity);
    read_field(j, "offline_batches", c.offline_batches);
    read_field(j, "sft_rounds", c.sft_rounds);
    read_field(j, "sft_lr", c.sft_lr);
    read_field(j, "pretrain", c.pretrain);
    read_field(j, "encoder_frozen", c.encoder_frozen);
    read_field(j, "stale_exploration_features", c.stale_exploration_features);
    read_field(j, "eval_interval", c.eval_interval);
    read_field(j, "record_wall_clock", c.record_wall_clock);
    read_field(j, "dump_schedule", c.dump_schedule);
    read_field(j, "vocab", c.policy.vocab);
    read_field(j, "max_len", c.policy.max_len);
    read_field(j, "policy_dim", c.policy.dim);
    read_field(j, "policy_layers", c.policy.layers);
    read_field(j, "encoder_width", c.encoder_width);
    read_field(j, "context_dim", c.context_dim);
    read_field(j, "exploit_width", c.exploit_width);
    read_field(j, "exploit_depth", c.exploit_depth);
    read_field(j, "downsample", c.downsample);
    if (j.contains("data")) c.data = generator_from_json(j.at("data"));
    // A bare vocab override applies to both sides unless the data block names its own.
    if (j.contains("vocab") && !(j.contains("data") && j.at("data").contains("vocab"))) c.data.vocab = c.policy.vocab;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

std::string run_config_to_json(const RunConfig& c, int indent) {
    Json j{{"seed", c.seed},
           {"mode", std::string(mode_name(c.mode))},
           {"beta", c.beta},
           {"gamma", c.gamma},
           {"lambda", c.lambda},
           {"batch_size", c.batch_size},
           {"select_k", c.select_k},
           {"rounds", c.rounds},
           {"policy_lr", c.policy_lr},
           {"exploit_lr", c.exploit_lr},
           {"explore_lr", c.explore_lr},
           {"encoder_lr", c.encoder_lr},
           {"pool_capacity", c.pool_capacity},
           {"offline_batches", c.offline_batches},
           {"sft_rounds", c.sft_rounds},
           {"sft_lr", c.sft_lr},
           {"pretrain", c.pretrain},
           {"encoder_frozen", c.encoder_frozen},
           {"stale_exploration_features", c.stale_exploration_features},
           {"eval_interval", c.eval_interval},
           {"record_wall_clock", c.record_wall_clock},
           {"dump_schedule", c.dump_schedule},
           {"vocab", c.policy.vocab},
           {"max_len", c.policy.max_len},
           {"policy_dim", c.policy.dim},
           {"policy_layers", c.policy.layers},
           {"encoder_width", c.encoder_width},
           {"context_dim", c.context_dim},
           {"exploit_width", c.exploit_width},
           {"exploit_depth", c.exploit_depth},
           {"downsample", c.downsample},
           {"data", generator_to_json(c.data)}};
    return j.dump(indent);
}

std::uint64_t config_hash(const RunConfig& c) {
    const std::string text = run_config_to_json(c, -1);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace samslab
