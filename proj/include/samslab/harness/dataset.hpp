// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/sample.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace samslab {

// Synthetic preference data. Each token carries a hidden feature vector; a
// response's utility is a fixed linear function of its summed token features,
// optionally modulated by the prompt. The higher-utility response is `chosen`
// unless the label is flipped by noise.
struct GeneratorSpec {
    std::size_t feature_dim = 8;
    std::size_t vocab = 16;
    std::size_t prompt_min = 2;
    std::size_t prompt_max = 6;
    std::size_t response_min = 4;
    std::size_t response_max = 12;
    // Scale of the prompt-dependent utility term relative to the global one.
    double interaction = 0.0;
    // Both responses of a pair share one drawn length.
    bool paired_lengths = false;
    double noise_rate = 0.2;
    std::size_t train_size = 5000;
    std::size_t test_size = 1000;
    std::uint64_t seed = 1;

    bool operator==(const GeneratorSpec&) const = default;
};

void validate(const GeneratorSpec& spec);

struct GeneratedData {
    std::vector<PreferenceSample> train;
    std::vector<PreferenceSample> test;  // never noised
};

// Deterministic in `spec`. Train ids are 0..train_size-1, test ids follow.
GeneratedData generate_dataset(const GeneratorSpec& spec);

// One JSON object per line: id, prompt, chosen, rejected, noise_flag, difficulty.
void write_dataset(const std::filesystem::path& path, const std::vector<PreferenceSample>& samples);
std::vector<PreferenceSample> read_dataset(const std::filesystem::path& path);

std::string sample_to_json_line(const PreferenceSample& sample);
PreferenceSample sample_from_json_line(const std::string& line);

}  // namespace samslab
