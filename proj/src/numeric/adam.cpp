// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/numeric/adam.hpp"

#include "samslab/errors.hpp"

#include <cmath>
#include <string>

namespace samslab {

AdamOptimizer::AdamOptimizer(AdamConfig config) : config_(config) {
    if (!(config_.learning_rate >= 0.0) || !(config_.epsilon > 0.0) || config_.beta1 < 0.0 || config_.beta1 >= 1.0 ||
        config_.beta2 < 0.0 || config_.beta2 >= 1.0) {
        throw ConfigError("invalid Adam configuration");
    }
}

void AdamOptimizer::step(const ParamList& params, const ConstParamList& grads) {
    if (params.size() != grads.size()) {
        throw ShapeError("Adam: " + std::to_string(params.size()) + " parameter blocks but " +
                         std::to_string(grads.size()) + " gradient blocks");
    }
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t b = 0; b < params.size(); ++b) {
            m_[b].assign(params[b].size(), 0.0);
            v_[b].assign(params[b].size(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw ShapeError("Adam: block count changed between steps");
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size()) {
            throw ShapeError("Adam: block " + std::to_string(b) + " changed size");
        }
    }

    ++step_;
    const double lr = config_.learning_rate;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m = m_[b];
        auto& v = v_[b];
        const auto& g = grads[b];
        auto& p = params[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

void AdamOptimizer::restore(std::uint64_t step, std::vector<std::vector<double>> m,
                            std::vector<std::vector<double>> v) {
    if (m.size() != v.size()) throw ShapeError("Adam: moment block counts differ");
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace samslab
