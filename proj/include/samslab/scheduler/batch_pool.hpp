// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/dense.hpp"
#include "samslab/scheduler/encoder.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace samslab {

// A scheduled sample awaiting (or carrying) its observed reward.
struct TransitionRecord {
    ArmContext context;
    DenseMatrix layer_states;  // raw policy states, used when the encoder is trainable
    Vector exploit_hidden;     // downsampled exploitation-net features at scheduling time
    double reward = std::numeric_limits<double>::quiet_NaN();
    std::size_t round = 0;
};

using TransitionBatch = std::vector<TransitionRecord>;

// Bounded store of past transition batches. Inserting into a full pool replaces
// one uniformly chosen resident batch.
class BatchPool {
public:
    BatchPool(std::size_t capacity, std::uint64_t seed);

    // Returns the slot that was overwritten, if any.
    std::optional<std::size_t> insert(TransitionBatch batch);

    // Up to `count` distinct resident batches, chosen uniformly without replacement.
    std::vector<const TransitionBatch*> sample(std::size_t count);

    std::size_t size() const { return batches_.size(); }
    std::size_t capacity() const { return capacity_; }
    const std::vector<TransitionBatch>& batches() const { return batches_; }

private:
    std::size_t capacity_;
    std::mt19937_64 rng_;
    std::vector<TransitionBatch> batches_;
};

}  // namespace samslab
