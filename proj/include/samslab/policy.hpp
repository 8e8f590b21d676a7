// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/adam.hpp"
#include "samslab/numeric/dense.hpp"
#include "samslab/sample.hpp"

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace samslab {

struct PolicyShape {
    std::size_t vocab = 16;    // data tokens; id `vocab` is the reserved delimiter
    std::size_t max_len = 24;  // per prompt / response
    std::size_t dim = 32;
    std::size_t layers = 4;

    bool operator==(const PolicyShape&) const = default;
};

// One residual block of the causal scorer:
//   a  = relu(state_weight * h + token_weight * e + hidden_bias)
//   h' = h + out_weight * a + out_bias
// where h is the running state and e the embedding of the token just read.
struct PolicyBlock {
    DenseMatrix state_weight;
    DenseMatrix token_weight;
    Vector hidden_bias;
    DenseMatrix out_weight;
    Vector out_bias;
};

// A layered causal scorer over a small vocabulary. The state entering the first
// block at position s is the mean embedding of tokens 0..s-1; next-token logits
// come from a linear head on the last block's output.
struct PolicyParams {
    PolicyShape shape;
    DenseMatrix embedding;  // (vocab + 1) x dim
    std::vector<PolicyBlock> blocks;
    DenseMatrix head_weight;  // vocab x dim
    Vector head_bias;

    PolicyParams() = default;
    explicit PolicyParams(const PolicyShape& shape);  // all zeros
    static PolicyParams initialized(const PolicyShape& shape, std::mt19937_64& rng);

    TokenId delimiter() const { return static_cast<TokenId>(shape.vocab); }

    ParamList parameters();
    ConstParamList parameters() const;
    std::size_t parameter_count() const;
    std::uint64_t fingerprint() const;
};

struct PolicyReadout {
    double logp_chosen = 0.0;
    double logp_rejected = 0.0;
    // layers x dim; row l is block l's output averaged over every position of
    // prompt <d> chosen <d> rejected.
    DenseMatrix layer_states;
};

// Throws InputError on empty sequences, over-long sequences or ids >= vocab.
void validate_sample(const PolicyShape& shape, const PreferenceSample& sample);

PolicyReadout policy_readout(const PolicyParams& params, const PreferenceSample& sample);
std::vector<PolicyReadout> policy_readouts(const PolicyParams& params, std::span<const PreferenceSample> samples);

// Readout without the layer-state pass (cheaper; used for reference models and
// evaluation).
struct ResponseLogps {
    double chosen = 0.0;
    double rejected = 0.0;
};
ResponseLogps response_logps(const PolicyParams& params, const PreferenceSample& sample);

// log pi(response | prompt) = sum over response tokens of the log-softmax
// probability given prompt <d> response[<s].
double response_logp(const PolicyParams& params, const TokenSequence& prompt, const TokenSequence& response);

// Forward tape for log pi(response | prompt), reusable for the backward pass.
class ResponsePass {
public:
    ResponsePass(const PolicyParams& params, const TokenSequence& prompt, const TokenSequence& response);
    ~ResponsePass();
    ResponsePass(ResponsePass&&) noexcept;
    ResponsePass& operator=(ResponsePass&&) noexcept;

    double logp() const { return logp_; }

    // Adds scale * d logp / d params into `grads`.
    void backward(double scale, PolicyParams& grads) const;

private:
    struct Tape;
    const PolicyParams* params_;
    std::unique_ptr<Tape> tape_;
    double logp_ = 0.0;
};

// Adds scale * d log pi(response | prompt) / d params into `grads`; returns the log-probability.
double accumulate_response_logp_gradient(const PolicyParams& params, const TokenSequence& prompt,
                                         const TokenSequence& response, double scale, PolicyParams& grads);

// Softmax over the vocabulary after reading `prefix` (which may contain the delimiter).
Vector next_token_probabilities(const PolicyParams& params, const TokenSequence& prefix);

// Negative mean token log-likelihood of the chosen response.
double sft_loss(const PolicyParams& params, const PreferenceSample& sample);

// Mean sft_loss over `batch` and its gradient accumulated into `grads`.
double sft_batch_gradient(const PolicyParams& params, std::span<const PreferenceSample> batch, PolicyParams& grads);

// One optimizer step on the mean SFT loss; returns the pre-step loss.
double sft_train_step(PolicyParams& params, AdamOptimizer& opt, std::span<const PreferenceSample> batch);

}  // namespace samslab
