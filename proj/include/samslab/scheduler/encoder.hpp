// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/dense.hpp"
#include "samslab/sample.hpp"

#include <cstddef>
#include <random>

namespace samslab {

struct EncoderShape {
    std::size_t layers = 4;      // policy layers = positions of the mixed sequence
    std::size_t state_dim = 32;  // policy state width
    std::size_t width = 32;
    std::size_t context_dim = 64;

    bool operator==(const EncoderShape&) const = default;
};

struct ArmContext {
    SampleId sample_id = 0;
    Vector values;
};

// Maps the per-layer pooled policy states of one sample to a fixed arm context.
//
//   feature connector   E = W2 relu(W1 s_l + b1) + b2        per layer l
//   layer mixer         M = E + softmax(Q K^T / sqrt(width)) V,  Q,K,V = E Wq, E Wk, E Wv
//   pooling/projection  c = Wp mean_l(M_l) + bp
struct EncoderParams {
    EncoderShape shape;
    DenseMatrix connector1_weight;
    Vector connector1_bias;
    DenseMatrix connector2_weight;
    Vector connector2_bias;
    DenseMatrix query_weight;
    DenseMatrix key_weight;
    DenseMatrix value_weight;
    DenseMatrix projection_weight;
    Vector projection_bias;
    // When set, the scheduler never updates these tensors.
    bool frozen = false;

    EncoderParams() = default;
    explicit EncoderParams(const EncoderShape& shape);  // zeros
    static EncoderParams initialized(const EncoderShape& shape, std::mt19937_64& rng);

    ParamList parameters();
    ConstParamList parameters() const;
    std::uint64_t fingerprint() const;
};

struct EncoderTape {
    DenseMatrix connector_pre;
    DenseMatrix connector_act;
    DenseMatrix embedded;
    DenseMatrix query;
    DenseMatrix key;
    DenseMatrix value;
    DenseMatrix attention;
    Vector pooled;
};

ArmContext encode_context(const EncoderParams& params, const DenseMatrix& layer_states, SampleId sample_id = 0);

// Forward pass that also fills `tape` for encoder_backward.
Vector encode_with_tape(const EncoderParams& params, const DenseMatrix& layer_states, EncoderTape& tape);

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(context).
void encoder_backward(const EncoderParams& params, const DenseMatrix& layer_states, const EncoderTape& tape,
                      const Vector& d_context, EncoderParams& grads);

}  // namespace samslab
