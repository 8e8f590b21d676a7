// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/adam.hpp"
#include "samslab/numeric/dense.hpp"

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace samslab {

struct MlpShape {
    std::size_t input_dim = 0;
    std::size_t width = 0;
    std::size_t depth = 2;
    std::size_t output_dim = 1;

    bool operator==(const MlpShape&) const = default;
};

// Residual feed-forward network:
//   h_1     = relu(W_0 x + b_0)
//   h_{k+1} = relu(W_k h_k + b_k) + h_k        for k = 1 .. depth-2
//   y       = W_{depth-1} h_{depth-1} + b_{depth-1}
// The residual is added after the activation.
struct ResidualMlpParams {
    MlpShape shape;
    std::vector<DenseMatrix> weights;
    std::vector<Vector> biases;

    ResidualMlpParams() = default;
    // All-zero parameters of the given shape.
    explicit ResidualMlpParams(const MlpShape& shape);

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    static ResidualMlpParams initialized(const MlpShape& shape, std::mt19937_64& rng);

    ParamList parameters();
    ConstParamList parameters() const;
    std::size_t parameter_count() const;

    // Throws ShapeError if the tensors do not match `shape`.
    void validate() const;
};

struct MlpForward {
    Vector output;
    // Post-activation (post-residual) state of every hidden layer: depth-1 entries.
    std::vector<Vector> hidden;
    // Pre-activation of every hidden layer, kept for the backward pass.
    std::vector<Vector> preactivation;
};

MlpForward mlp_forward(const ResidualMlpParams& params, std::span<const double> input);

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output) and the
// forward tape; returns d(loss)/d(input).
Vector mlp_backward(const ResidualMlpParams& params, std::span<const double> input, const MlpForward& tape,
                    std::span<const double> d_output, ResidualMlpParams& grads);

// 1/2 mean squared error of a scalar-output network over a batch.
double mlp_regression_loss(const ResidualMlpParams& params, std::span<const Vector> inputs,
                           std::span<const double> targets);

// Gradient of mlp_regression_loss. Returns the loss as well.
double mlp_regression_gradient(const ResidualMlpParams& params, std::span<const Vector> inputs,
                               std::span<const double> targets, ResidualMlpParams& grads);

// One optimizer step on the regression loss; returns the pre-step loss.
double mlp_train_step(ResidualMlpParams& params, AdamOptimizer& opt, std::span<const Vector> inputs,
                      std::span<const double> targets);

}  // namespace samslab
