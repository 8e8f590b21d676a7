// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/dense.hpp"

#include <cstdint>
#include <vector>

namespace samslab {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam. Moment buffers are allocated on the first step and are
// bound to the block layout seen then; later steps must present the same shapes.
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    explicit AdamOptimizer(AdamConfig config);

    void step(const ParamList& params, const ConstParamList& grads);

    std::uint64_t step_count() const { return step_; }
    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }

    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }

    // Restores moments and counter, e.g. from a checkpoint.
    void restore(std::uint64_t step, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

private:
    AdamConfig config_{};
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace samslab
