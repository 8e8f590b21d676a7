// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/harness/dataset.hpp"
#include "samslab/policy.hpp"
#include "samslab/scheduler/scheduler.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace samslab {

enum class TrainMode { Full, RandomK, Sams };

std::string_view mode_name(TrainMode mode);
TrainMode parse_mode(std::string_view name);  // ConfigError on unknown names

struct RunConfig {
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::Sams;

    double beta = 0.1;
    double gamma = 0.5;
    double lambda = 1.0;
    std::size_t batch_size = 64;
    std::size_t select_k = 32;
    std::size_t rounds = 600;

    double policy_lr = 1e-3;
    double exploit_lr = 1e-3;
    double explore_lr = 1e-3;
    double encoder_lr = 1e-3;
    std::size_t pool_capacity = 256;
    std::size_t offline_batches = 8;

    // Supervised warm-up of the policy before DPO; its result is the reference.
    std::size_t sft_rounds = 200;
    double sft_lr = 1e-3;
    // Train the scheduler during the warm-up and freeze its encoder afterwards.
    bool pretrain = true;
    // Only consulted when `pretrain` is off: keep the encoder fixed at its
    // initialization during DPO.
    bool encoder_frozen = false;
    bool stale_exploration_features = false;

    // Test accuracy is recomputed every `eval_interval` rounds and on the last
    // round; rows in between carry the latest value.
    std::size_t eval_interval = 25;
    // Wall-clock timing makes metrics files differ between runs; off by default.
    bool record_wall_clock = false;
    bool dump_schedule = false;

    PolicyShape policy{};
    std::size_t encoder_width = 32;
    std::size_t context_dim = 64;
    std::size_t exploit_width = 64;
    std::size_t exploit_depth = 4;
    std::size_t downsample = 4;

    GeneratorSpec data{};
};

// Throws ConfigError naming the first violated constraint.
void validate(const RunConfig& config);

SchedulerConfig scheduler_config(const RunConfig& config);

// Unknown keys are rejected; absent keys keep their defaults.
RunConfig run_config_from_json(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config, int indent = 2);

// FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace samslab
