// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/scheduler/batch_pool.hpp"

#include "samslab/errors.hpp"

#include <algorithm>
#include <numeric>

namespace samslab {

BatchPool::BatchPool(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw ConfigError("batch pool capacity must be at least 1");
    batches_.reserve(std::min<std::size_t>(capacity, 1024));
}

std::optional<std::size_t> BatchPool::insert(TransitionBatch batch) {
    if (batch.empty()) throw ContractViolation("cannot insert an empty batch into the pool");
    if (batches_.size() < capacity_) {
        batches_.push_back(std::move(batch));
        return std::nullopt;
    }
    std::uniform_int_distribution<std::size_t> pick(0, batches_.size() - 1);
    const std::size_t slot = pick(rng_);
    batches_[slot] = std::move(batch);
    return slot;
}

std::vector<const TransitionBatch*> BatchPool::sample(std::size_t count) {
    std::vector<const TransitionBatch*> out;
    if (batches_.empty() || count == 0) return out;
    std::vector<std::size_t> idx(batches_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(count, idx.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng_)]);
        out.push_back(&batches_[idx[i]]);
    }
    return out;
}

}  // namespace samslab
