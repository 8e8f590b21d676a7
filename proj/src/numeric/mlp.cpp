// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/numeric/mlp.hpp"

#include "samslab/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace samslab {

namespace {

std::size_t layer_in(const MlpShape& s, std::size_t k) { return k == 0 ? s.input_dim : s.width; }
std::size_t layer_out(const MlpShape& s, std::size_t k) { return k + 1 == s.depth ? s.output_dim : s.width; }

void check_shape(const MlpShape& s) {
    if (s.depth < 2) throw ShapeError("residual MLP needs depth >= 2, got " + std::to_string(s.depth));
    if (s.input_dim == 0 || s.width == 0 || s.output_dim == 0) throw ShapeError("residual MLP has a zero dimension");
}

}  // namespace

ResidualMlpParams::ResidualMlpParams(const MlpShape& s) : shape(s) {
    check_shape(s);
    weights.reserve(s.depth);
    biases.reserve(s.depth);
    for (std::size_t k = 0; k < s.depth; ++k) {
        weights.emplace_back(DenseMatrix::Zero(layer_out(s, k), layer_in(s, k)));
        biases.emplace_back(Vector::Zero(layer_out(s, k)));
    }
}

ResidualMlpParams ResidualMlpParams::initialized(const MlpShape& s, std::mt19937_64& rng) {
    ResidualMlpParams p(s);
    for (auto& w : p.weights) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    }
    return p;
}

ParamList ResidualMlpParams::parameters() {
    ParamList out;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out.push_back(flat(weights[k]));
        out.push_back(flat(biases[k]));
    }
    return out;
}

ConstParamList ResidualMlpParams::parameters() const {
    ConstParamList out;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out.push_back(flat(weights[k]));
        out.push_back(flat(biases[k]));
    }
    return out;
}

std::size_t ResidualMlpParams::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
    return n;
}

void ResidualMlpParams::validate() const {
    check_shape(shape);
    if (weights.size() != shape.depth || biases.size() != shape.depth) {
        throw ShapeError("residual MLP: expected " + std::to_string(shape.depth) + " layers, found " +
                         std::to_string(weights.size()));
    }
    for (std::size_t k = 0; k < shape.depth; ++k) {
        const auto rows = static_cast<Eigen::Index>(layer_out(shape, k));
        const auto cols = static_cast<Eigen::Index>(layer_in(shape, k));
        if (weights[k].rows() != rows || weights[k].cols() != cols || biases[k].size() != rows) {
            throw ShapeError("residual MLP layer " + std::to_string(k) + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", found " + std::to_string(weights[k].rows()) + "x" +
                             std::to_string(weights[k].cols()));
        }
    }
}

MlpForward mlp_forward(const ResidualMlpParams& params, std::span<const double> input) {
    const auto& s = params.shape;
    if (input.size() != s.input_dim) {
        throw ShapeError("residual MLP layer 0: input has length " + std::to_string(input.size()) + ", expected " +
                         std::to_string(s.input_dim));
    }
    if (params.weights.size() != s.depth) params.validate();

    MlpForward out;
    out.hidden.reserve(s.depth - 1);
    out.preactivation.reserve(s.depth - 1);

    Vector z = params.weights[0] * as_vector(input) + params.biases[0];
    out.hidden.push_back(z.cwiseMax(0.0));
    out.preactivation.push_back(std::move(z));
    for (std::size_t k = 1; k + 1 < s.depth; ++k) {
        const Vector& h = out.hidden.back();
        Vector zk = params.weights[k] * h + params.biases[k];
        Vector next = zk.cwiseMax(0.0) + h;
        out.preactivation.push_back(std::move(zk));
        out.hidden.push_back(std::move(next));
    }
    out.output = params.weights[s.depth - 1] * out.hidden.back() + params.biases[s.depth - 1];
    return out;
}

Vector mlp_backward(const ResidualMlpParams& params, std::span<const double> input, const MlpForward& tape,
                    std::span<const double> d_output, ResidualMlpParams& grads) {
    const auto& s = params.shape;
    if (d_output.size() != s.output_dim) throw ShapeError("residual MLP backward: output gradient length mismatch");
    if (!(grads.shape == s)) throw ShapeError("residual MLP backward: gradient buffer shape mismatch");

    const auto dy = as_vector(d_output);
    const std::size_t last = s.depth - 1;
    grads.weights[last].noalias() += dy * tape.hidden.back().transpose();
    grads.biases[last] += dy;
    Vector dh = params.weights[last].transpose() * dy;

    for (std::size_t k = last - 1; k >= 1; --k) {
        const Vector dz = dh.cwiseProduct((tape.preactivation[k].array() > 0.0).cast<double>().matrix());
        grads.weights[k].noalias() += dz * tape.hidden[k - 1].transpose();
        grads.biases[k] += dz;
        dh += params.weights[k].transpose() * dz;
    }

    const Vector dz0 = dh.cwiseProduct((tape.preactivation[0].array() > 0.0).cast<double>().matrix());
    grads.weights[0].noalias() += dz0 * as_vector(input).transpose();
    grads.biases[0] += dz0;
    return params.weights[0].transpose() * dz0;
}

namespace {

void check_batch(const ResidualMlpParams& params, std::span<const Vector> inputs, std::span<const double> targets) {
    if (inputs.empty()) throw ContractViolation("regression batch is empty");
    if (inputs.size() != targets.size()) throw ShapeError("regression batch: inputs and targets differ in length");
    if (params.shape.output_dim != 1) throw ShapeError("regression loss expects a scalar-output network");
}

}  // namespace

double mlp_regression_loss(const ResidualMlpParams& params, std::span<const Vector> inputs,
                           std::span<const double> targets) {
    check_batch(params, inputs, targets);
    double sum = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double r = mlp_forward(params, flat(inputs[i])).output[0] - targets[i];
        sum += r * r;
    }
    return 0.5 * sum / static_cast<double>(inputs.size());
}

double mlp_regression_gradient(const ResidualMlpParams& params, std::span<const Vector> inputs,
                               std::span<const double> targets, ResidualMlpParams& grads) {
    check_batch(params, inputs, targets);
    const double inv_n = 1.0 / static_cast<double>(inputs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto tape = mlp_forward(params, flat(inputs[i]));
        const double r = tape.output[0] - targets[i];
        sum += r * r;
        const double d = r * inv_n;
        mlp_backward(params, flat(inputs[i]), tape, std::span<const double>(&d, 1), grads);
    }
    return 0.5 * sum * inv_n;
}

double mlp_train_step(ResidualMlpParams& params, AdamOptimizer& opt, std::span<const Vector> inputs,
                      std::span<const double> targets) {
    ResidualMlpParams grads(params.shape);
    const double loss = mlp_regression_gradient(params, inputs, targets, grads);
    if (!std::isfinite(loss)) throw NumericalError("regression loss is not finite");
    opt.step(params.parameters(), std::as_const(grads).parameters());
    return loss;
}

}  // namespace samslab
