// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/policy.hpp"
#include "samslab/scheduler/scheduler.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace samslab {

// Binary container: the 8-byte magic "SAMSCKPT", a little-endian u32 format
// version, a little-endian u64 header length, a JSON header with dimensions,
// config hash and tensor table, then every tensor as little-endian f64 values
// in table order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
};

struct Checkpoint {
    std::string kind;  // "policy" or "scheduler"
    std::uint64_t config_hash = 0;
    std::string dims_json = "{}";  // kind-specific dimensions
    std::vector<NamedTensor> tensors;

    const NamedTensor& tensor(const std::string& name) const;  // InputError if absent
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);  // IoError / InputError

Checkpoint policy_checkpoint(const PolicyParams& params, std::uint64_t config_hash = 0);
PolicyParams policy_from_checkpoint(const Checkpoint& ckpt);
PolicyShape policy_shape_of(const Checkpoint& ckpt);

Checkpoint scheduler_checkpoint(const SchedulerState& state, std::uint64_t config_hash = 0);
// Overwrites the networks of `state`; shapes must match (ConfigError otherwise).
void load_scheduler_checkpoint(const Checkpoint& ckpt, SchedulerState& state);

}  // namespace samslab
