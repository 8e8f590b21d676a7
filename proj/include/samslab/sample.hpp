// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace samslab {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;
using SampleId = std::int64_t;

// One preference pair. `noise_flag` and `difficulty` are generator ground truth:
// nothing on the training path reads them; only evaluation code does.
struct PreferenceSample {
    SampleId id = 0;
    TokenSequence prompt;
    TokenSequence chosen;
    TokenSequence rejected;
    bool noise_flag = false;
    double difficulty = 0.0;

    bool operator==(const PreferenceSample&) const = default;
};

}  // namespace samslab
