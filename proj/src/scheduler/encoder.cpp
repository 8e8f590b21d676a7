// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/scheduler/encoder.hpp"

#include "samslab/errors.hpp"

#include <cmath>
#include <string>

namespace samslab {

namespace {

void fill_fan_in(DenseMatrix& m, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void check_states(const EncoderShape& s, const DenseMatrix& states) {
    if (states.rows() != static_cast<Eigen::Index>(s.layers) || states.cols() != static_cast<Eigen::Index>(s.state_dim)) {
        throw ShapeError("encoder expects " + std::to_string(s.layers) + " layer states of dimension " +
                         std::to_string(s.state_dim) + ", got " + std::to_string(states.rows()) + "x" +
                         std::to_string(states.cols()));
    }
}

}  // namespace

EncoderParams::EncoderParams(const EncoderShape& s) : shape(s) {
    if (s.layers == 0 || s.state_dim == 0 || s.width == 0 || s.context_dim == 0) {
        throw ShapeError("encoder shape has a zero dimension");
    }
    const auto w = static_cast<Eigen::Index>(s.width);
    connector1_weight = DenseMatrix::Zero(w, static_cast<Eigen::Index>(s.state_dim));
    connector1_bias = Vector::Zero(w);
    connector2_weight = DenseMatrix::Zero(w, w);
    connector2_bias = Vector::Zero(w);
    query_weight = DenseMatrix::Zero(w, w);
    key_weight = DenseMatrix::Zero(w, w);
    value_weight = DenseMatrix::Zero(w, w);
    projection_weight = DenseMatrix::Zero(static_cast<Eigen::Index>(s.context_dim), w);
    projection_bias = Vector::Zero(static_cast<Eigen::Index>(s.context_dim));
}

EncoderParams EncoderParams::initialized(const EncoderShape& s, std::mt19937_64& rng) {
    EncoderParams p(s);
    fill_fan_in(p.connector1_weight, rng);
    fill_fan_in(p.connector2_weight, rng);
    fill_fan_in(p.query_weight, rng);
    fill_fan_in(p.key_weight, rng);
    fill_fan_in(p.value_weight, rng);
    fill_fan_in(p.projection_weight, rng);
    return p;
}

ParamList EncoderParams::parameters() {
    return {flat(connector1_weight), flat(connector1_bias), flat(connector2_weight), flat(connector2_bias),
            flat(query_weight),      flat(key_weight),      flat(value_weight),      flat(projection_weight),
            flat(projection_bias)};
}

ConstParamList EncoderParams::parameters() const {
    return {flat(connector1_weight), flat(connector1_bias), flat(connector2_weight), flat(connector2_bias),
            flat(query_weight),      flat(key_weight),      flat(value_weight),      flat(projection_weight),
            flat(projection_bias)};
}

std::uint64_t EncoderParams::fingerprint() const { return samslab::fingerprint(parameters()); }

Vector encode_with_tape(const EncoderParams& p, const DenseMatrix& states, EncoderTape& t) {
    check_states(p.shape, states);
    t.connector_pre = states * p.connector1_weight.transpose();
    t.connector_pre.rowwise() += p.connector1_bias.transpose();
    t.connector_act = t.connector_pre.cwiseMax(0.0);
    t.embedded = t.connector_act * p.connector2_weight.transpose();
    t.embedded.rowwise() += p.connector2_bias.transpose();

    t.query = t.embedded * p.query_weight.transpose();
    t.key = t.embedded * p.key_weight.transpose();
    t.value = t.embedded * p.value_weight.transpose();
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.shape.width));
    t.attention = (t.query * t.key.transpose()) * scale;
    for (Eigen::Index r = 0; r < t.attention.rows(); ++r) {
        const double mx = t.attention.row(r).maxCoeff();
        t.attention.row(r) = (t.attention.row(r).array() - mx).exp();
        t.attention.row(r) /= t.attention.row(r).sum();
    }
    const DenseMatrix mixed = t.embedded + t.attention * t.value;
    t.pooled = mixed.colwise().mean().transpose();
    return p.projection_weight * t.pooled + p.projection_bias;
}

ArmContext encode_context(const EncoderParams& params, const DenseMatrix& layer_states, SampleId sample_id) {
    EncoderTape tape;
    return {sample_id, encode_with_tape(params, layer_states, tape)};
}

void encoder_backward(const EncoderParams& p, const DenseMatrix& states, const EncoderTape& t, const Vector& d_context,
                      EncoderParams& g) {
    if (d_context.size() != static_cast<Eigen::Index>(p.shape.context_dim)) {
        throw ShapeError("encoder backward: context gradient has the wrong length");
    }
    if (!(g.shape == p.shape)) throw ShapeError("encoder backward: gradient buffer shape mismatch");
    const auto layers = static_cast<double>(p.shape.layers);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.shape.width));

    g.projection_weight.noalias() += d_context * t.pooled.transpose();
    g.projection_bias += d_context;
    const Eigen::RowVectorXd d_pooled = (p.projection_weight.transpose() * d_context).transpose() / layers;
    const DenseMatrix d_mixed = d_pooled.replicate(t.embedded.rows(), 1);

    DenseMatrix d_embedded = d_mixed;
    const DenseMatrix d_attention = d_mixed * t.value.transpose();
    const DenseMatrix d_value = t.attention.transpose() * d_mixed;
    // softmax backward, row by row
    DenseMatrix d_scores = t.attention.cwiseProduct(d_attention);
    const Vector row_dot = d_scores.rowwise().sum();
    d_scores -= t.attention.cwiseProduct(row_dot.replicate(1, t.attention.cols()));
    d_scores *= scale;
    const DenseMatrix d_query = d_scores * t.key;
    const DenseMatrix d_key = d_scores.transpose() * t.query;

    g.query_weight.noalias() += d_query.transpose() * t.embedded;
    g.key_weight.noalias() += d_key.transpose() * t.embedded;
    g.value_weight.noalias() += d_value.transpose() * t.embedded;
    d_embedded.noalias() += d_query * p.query_weight;
    d_embedded.noalias() += d_key * p.key_weight;
    d_embedded.noalias() += d_value * p.value_weight;

    g.connector2_weight.noalias() += d_embedded.transpose() * t.connector_act;
    g.connector2_bias += d_embedded.colwise().sum().transpose();
    DenseMatrix d_pre = d_embedded * p.connector2_weight;
    d_pre.array() *= (t.connector_pre.array() > 0.0).cast<double>();
    g.connector1_weight.noalias() += d_pre.transpose() * states;
    g.connector1_bias += d_pre.colwise().sum().transpose();
}

}  // namespace samslab
