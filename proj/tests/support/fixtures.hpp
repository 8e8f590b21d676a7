// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/policy.hpp"
#include "samslab/sample.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace samslab::testing {

inline TokenSequence random_tokens(std::mt19937_64& rng, std::size_t vocab, std::size_t min_len, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<TokenId> tok(0, static_cast<TokenId>(vocab) - 1);
    TokenSequence out(len(rng));
    for (auto& t : out) t = tok(rng);
    return out;
}

inline PreferenceSample random_sample(std::mt19937_64& rng, const PolicyShape& shape, SampleId id,
                                      std::size_t max_len = 8) {
    PreferenceSample s;
    s.id = id;
    s.prompt = random_tokens(rng, shape.vocab, 1, max_len);
    s.chosen = random_tokens(rng, shape.vocab, 1, max_len);
    do {
        s.rejected = random_tokens(rng, shape.vocab, 1, max_len);
    } while (s.rejected == s.chosen);
    return s;
}

inline std::vector<PreferenceSample> random_batch(std::mt19937_64& rng, const PolicyShape& shape, std::size_t n,
                                                  SampleId first_id = 0, std::size_t max_len = 8) {
    std::vector<PreferenceSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_sample(rng, shape, first_id + static_cast<SampleId>(i), max_len));
    return out;
}

inline PolicyParams random_policy(const PolicyShape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return PolicyParams::initialized(shape, rng);
}

// Adds uniform noise to every parameter, with nonzero biases so no path is inert.
inline void jitter(PolicyParams& p, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto block : p.parameters()) {
        for (double& x : block) x += u(rng);
    }
}

inline PolicyShape small_policy_shape() { return {.vocab = 6, .max_len = 10, .dim = 8, .layers = 3}; }

}  // namespace samslab::testing
