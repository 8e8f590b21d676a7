// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/policy.hpp"

#include "samslab/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace samslab {

namespace {

void fill_uniform(DenseMatrix& m, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

// Rows of a pass correspond to positions first..first+rows-1; the state at
// position s has read tokens 0..s-1.
struct PassTape {
    std::size_t first = 0;
    DenseMatrix last;                // embedding of token s-1
    std::vector<DenseMatrix> state;  // state[0] = running mean, state[l] = block l output
    std::vector<DenseMatrix> pre;    // block pre-activations
    std::vector<DenseMatrix> act;    // relu(pre)
};

PassTape run_pass(const PolicyParams& p, const TokenSequence& tokens, std::size_t first, std::size_t last_pos) {
    const auto d = static_cast<Eigen::Index>(p.shape.dim);
    const auto rows = static_cast<Eigen::Index>(last_pos - first + 1);
    PassTape tape;
    tape.first = first;
    tape.state.reserve(p.blocks.size() + 1);
    tape.pre.reserve(p.blocks.size());
    tape.act.reserve(p.blocks.size());

    DenseMatrix run(rows, d);
    tape.last.resize(rows, d);
    Eigen::RowVectorXd cum = Eigen::RowVectorXd::Zero(d);
    std::size_t consumed = 0;
    for (std::size_t s = first; s <= last_pos; ++s) {
        while (consumed < s) cum += p.embedding.row(tokens[consumed++]);
        const auto r = static_cast<Eigen::Index>(s - first);
        run.row(r) = cum / static_cast<double>(s);
        tape.last.row(r) = p.embedding.row(tokens[s - 1]);
    }
    tape.state.push_back(std::move(run));

    for (const auto& b : p.blocks) {
        const DenseMatrix& h = tape.state.back();
        DenseMatrix z = h * b.state_weight.transpose();
        z.noalias() += tape.last * b.token_weight.transpose();
        z.rowwise() += b.hidden_bias.transpose();
        DenseMatrix a = z.cwiseMax(0.0);
        DenseMatrix next = h;
        next.noalias() += a * b.out_weight.transpose();
        next.rowwise() += b.out_bias.transpose();
        tape.pre.push_back(std::move(z));
        tape.act.push_back(std::move(a));
        tape.state.push_back(std::move(next));
    }
    return tape;
}

// Log-softmax of the head at rows [row_begin, row_begin + count).
DenseMatrix head_log_softmax(const PolicyParams& p, const DenseMatrix& final_state, Eigen::Index row_begin,
                             Eigen::Index count) {
    DenseMatrix logits = final_state.middleRows(row_begin, count) * p.head_weight.transpose();
    logits.rowwise() += p.head_bias.transpose();
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
        logits.row(r).array() -= lse;
    }
    return logits;
}

TokenSequence response_tokens(const PolicyParams& p, const TokenSequence& prompt, const TokenSequence& response) {
    TokenSequence seq;
    seq.reserve(prompt.size() + 1 + response.size());
    seq.insert(seq.end(), prompt.begin(), prompt.end());
    seq.push_back(p.delimiter());
    seq.insert(seq.end(), response.begin(), response.end());
    return seq;
}

void check_sequence(const PolicyShape& shape, const TokenSequence& seq, const char* what) {
    if (seq.empty()) throw InputError(std::string(what) + " is empty");
    if (seq.size() > shape.max_len) {
        throw InputError(std::string(what) + " has length " + std::to_string(seq.size()) + " > max " +
                         std::to_string(shape.max_len));
    }
    for (TokenId t : seq) {
        if (t < 0 || static_cast<std::size_t>(t) >= shape.vocab) {
            throw InputError(std::string(what) + " contains token id " + std::to_string(t) + " outside [0, " +
                             std::to_string(shape.vocab) + ")");
        }
    }
}

void check_prompt_response(const PolicyShape& shape, const TokenSequence& prompt, const TokenSequence& response) {
    check_sequence(shape, prompt, "prompt");
    check_sequence(shape, response, "response");
}

double sum_targets(const DenseMatrix& logp, const TokenSequence& seq, std::size_t first_target) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < logp.rows(); ++r) total += logp(r, seq[first_target + static_cast<std::size_t>(r)]);
    return total;
}

}  // namespace

PolicyParams::PolicyParams(const PolicyShape& s) : shape(s) {
    if (s.layers < 2) throw ShapeError("policy needs at least 2 layers, got " + std::to_string(s.layers));
    if (s.vocab < 2 || s.dim == 0 || s.max_len == 0) throw ShapeError("policy shape has a degenerate dimension");
    const auto d = static_cast<Eigen::Index>(s.dim);
    embedding = DenseMatrix::Zero(static_cast<Eigen::Index>(s.vocab) + 1, d);
    blocks.resize(s.layers);
    for (auto& b : blocks) {
        b.state_weight = DenseMatrix::Zero(d, d);
        b.token_weight = DenseMatrix::Zero(d, d);
        b.hidden_bias = Vector::Zero(d);
        b.out_weight = DenseMatrix::Zero(d, d);
        b.out_bias = Vector::Zero(d);
    }
    head_weight = DenseMatrix::Zero(static_cast<Eigen::Index>(s.vocab), d);
    head_bias = Vector::Zero(static_cast<Eigen::Index>(s.vocab));
}

PolicyParams PolicyParams::initialized(const PolicyShape& s, std::mt19937_64& rng) {
    PolicyParams p(s);
    const double fan_in = 1.0 / std::sqrt(static_cast<double>(s.dim));
    fill_uniform(p.embedding, 1.0, rng);
    for (auto& b : p.blocks) {
        // state and token weights together see 2*dim inputs
        fill_uniform(b.state_weight, fan_in / std::sqrt(2.0), rng);
        fill_uniform(b.token_weight, fan_in / std::sqrt(2.0), rng);
        fill_uniform(b.out_weight, fan_in, rng);
    }
    fill_uniform(p.head_weight, fan_in, rng);
    return p;
}

ParamList PolicyParams::parameters() {
    ParamList out{flat(embedding)};
    for (auto& b : blocks) {
        out.push_back(flat(b.state_weight));
        out.push_back(flat(b.token_weight));
        out.push_back(flat(b.hidden_bias));
        out.push_back(flat(b.out_weight));
        out.push_back(flat(b.out_bias));
    }
    out.push_back(flat(head_weight));
    out.push_back(flat(head_bias));
    return out;
}

ConstParamList PolicyParams::parameters() const {
    ConstParamList out{flat(embedding)};
    for (const auto& b : blocks) {
        out.push_back(flat(b.state_weight));
        out.push_back(flat(b.token_weight));
        out.push_back(flat(b.hidden_bias));
        out.push_back(flat(b.out_weight));
        out.push_back(flat(b.out_bias));
    }
    out.push_back(flat(head_weight));
    out.push_back(flat(head_bias));
    return out;
}

std::size_t PolicyParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& block : parameters()) n += block.size();
    return n;
}

std::uint64_t PolicyParams::fingerprint() const { return samslab::fingerprint(parameters()); }

void validate_sample(const PolicyShape& shape, const PreferenceSample& sample) {
    check_sequence(shape, sample.prompt, "prompt");
    check_sequence(shape, sample.chosen, "chosen response");
    check_sequence(shape, sample.rejected, "rejected response");
}

double response_logp(const PolicyParams& params, const TokenSequence& prompt, const TokenSequence& response) {
    check_prompt_response(params.shape, prompt, response);
    const TokenSequence seq = response_tokens(params, prompt, response);
    const std::size_t first = prompt.size() + 1;
    const PassTape tape = run_pass(params, seq, first, seq.size() - 1);
    const DenseMatrix logp = head_log_softmax(params, tape.state.back(), 0, tape.state.back().rows());
    return sum_targets(logp, seq, first);
}

ResponseLogps response_logps(const PolicyParams& params, const PreferenceSample& sample) {
    return {response_logp(params, sample.prompt, sample.chosen), response_logp(params, sample.prompt, sample.rejected)};
}

PolicyReadout policy_readout(const PolicyParams& params, const PreferenceSample& sample) {
    validate_sample(params.shape, sample);
    const TokenId delim = params.delimiter();
    TokenSequence seq;
    seq.reserve(sample.prompt.size() + sample.chosen.size() + sample.rejected.size() + 2);
    seq.insert(seq.end(), sample.prompt.begin(), sample.prompt.end());
    seq.push_back(delim);
    seq.insert(seq.end(), sample.chosen.begin(), sample.chosen.end());
    seq.push_back(delim);
    seq.insert(seq.end(), sample.rejected.begin(), sample.rejected.end());

    // Rows cover positions 1..N; the chosen response is scored from the same pass
    // because the scorer is causal.
    const PassTape tape = run_pass(params, seq, 1, seq.size());
    const std::size_t first_target = sample.prompt.size() + 1;
    const DenseMatrix logp = head_log_softmax(params, tape.state.back(), static_cast<Eigen::Index>(first_target - 1),
                                              static_cast<Eigen::Index>(sample.chosen.size()));

    PolicyReadout out;
    out.logp_chosen = sum_targets(logp, seq, first_target);
    out.logp_rejected = response_logp(params, sample.prompt, sample.rejected);
    out.layer_states.resize(static_cast<Eigen::Index>(params.shape.layers), static_cast<Eigen::Index>(params.shape.dim));
    for (std::size_t l = 0; l < params.shape.layers; ++l) {
        out.layer_states.row(static_cast<Eigen::Index>(l)) = tape.state[l + 1].colwise().mean();
    }
    return out;
}

std::vector<PolicyReadout> policy_readouts(const PolicyParams& params, std::span<const PreferenceSample> samples) {
    std::vector<PolicyReadout> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(policy_readout(params, s));
    return out;
}

struct ResponsePass::Tape {
    TokenSequence seq;
    std::size_t first = 0;
    PassTape pass;
    DenseMatrix logp;
};

ResponsePass::ResponsePass(const PolicyParams& params, const TokenSequence& prompt, const TokenSequence& response)
    : params_(&params), tape_(std::make_unique<Tape>()) {
    check_prompt_response(params.shape, prompt, response);
    tape_->seq = response_tokens(params, prompt, response);
    tape_->first = prompt.size() + 1;
    tape_->pass = run_pass(params, tape_->seq, tape_->first, tape_->seq.size() - 1);
    const DenseMatrix& final_state = tape_->pass.state.back();
    tape_->logp = head_log_softmax(params, final_state, 0, final_state.rows());
    logp_ = sum_targets(tape_->logp, tape_->seq, tape_->first);
}

ResponsePass::~ResponsePass() = default;
ResponsePass::ResponsePass(ResponsePass&&) noexcept = default;
ResponsePass& ResponsePass::operator=(ResponsePass&&) noexcept = default;

void ResponsePass::backward(double scale, PolicyParams& grads) const {
    const PolicyParams& p = *params_;
    if (!(grads.shape == p.shape)) throw ShapeError("policy gradient buffer has a different shape");
    const TokenSequence& seq = tape_->seq;
    const std::size_t first = tape_->first;
    const std::size_t last_pos = seq.size() - 1;
    const PassTape& tape = tape_->pass;
    const DenseMatrix& final_state = tape.state.back();
    const Eigen::Index rows = final_state.rows();

    // d(scale * sum_r logp[r, y_r]) / d logits = scale * (onehot - softmax)
    DenseMatrix d_logits = -scale * tape_->logp.array().exp().matrix();
    for (Eigen::Index r = 0; r < rows; ++r) d_logits(r, seq[first + static_cast<std::size_t>(r)]) += scale;

    grads.head_weight.noalias() += d_logits.transpose() * final_state;
    grads.head_bias += d_logits.colwise().sum().transpose();
    DenseMatrix d_state = d_logits * p.head_weight;
    DenseMatrix d_last = DenseMatrix::Zero(rows, static_cast<Eigen::Index>(p.shape.dim));

    for (std::size_t l = p.blocks.size(); l-- > 0;) {
        const auto& b = p.blocks[l];
        auto& g = grads.blocks[l];
        g.out_weight.noalias() += d_state.transpose() * tape.act[l];
        g.out_bias += d_state.colwise().sum().transpose();
        DenseMatrix d_pre = d_state * b.out_weight;
        d_pre.array() *= (tape.pre[l].array() > 0.0).cast<double>();
        g.state_weight.noalias() += d_pre.transpose() * tape.state[l];
        g.token_weight.noalias() += d_pre.transpose() * tape.last;
        g.hidden_bias += d_pre.colwise().sum().transpose();
        d_state.noalias() += d_pre * b.state_weight;
        d_last.noalias() += d_pre * b.token_weight;
    }

    // Row r sits at position s = first + r. Its running mean spreads d_state/s over
    // tokens 0..s-1 and its last-token input routes d_last to token s-1.
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(p.shape.dim));
    for (std::size_t j = last_pos; j-- > 0;) {
        const std::size_t s = j + 1;
        if (s >= first) {
            const auto r = static_cast<Eigen::Index>(s - first);
            acc += d_state.row(r) / static_cast<double>(s);
            grads.embedding.row(seq[j]) += d_last.row(r);
        }
        grads.embedding.row(seq[j]) += acc;
    }
}

double accumulate_response_logp_gradient(const PolicyParams& params, const TokenSequence& prompt,
                                         const TokenSequence& response, double scale, PolicyParams& grads) {
    const ResponsePass pass(params, prompt, response);
    pass.backward(scale, grads);
    return pass.logp();
}

Vector next_token_probabilities(const PolicyParams& params, const TokenSequence& prefix) {
    if (prefix.empty()) throw InputError("prefix is empty");
    for (TokenId t : prefix) {
        if (t < 0 || t > params.delimiter()) throw InputError("prefix contains token id " + std::to_string(t));
    }
    const PassTape tape = run_pass(params, prefix, prefix.size(), prefix.size());
    const DenseMatrix logp = head_log_softmax(params, tape.state.back(), 0, 1);
    return logp.row(0).array().exp().transpose();
}

double sft_loss(const PolicyParams& params, const PreferenceSample& sample) {
    return -response_logp(params, sample.prompt, sample.chosen) / static_cast<double>(sample.chosen.size());
}

double sft_batch_gradient(const PolicyParams& params, std::span<const PreferenceSample> batch, PolicyParams& grads) {
    if (batch.empty()) throw ContractViolation("SFT batch is empty");
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& s : batch) {
        const double len = static_cast<double>(s.chosen.size());
        const double logp = accumulate_response_logp_gradient(params, s.prompt, s.chosen, -inv_n / len, grads);
        total += -logp / len;
    }
    return total * inv_n;
}

double sft_train_step(PolicyParams& params, AdamOptimizer& opt, std::span<const PreferenceSample> batch) {
    PolicyParams grads(params.shape);
    const double loss = sft_batch_gradient(params, batch, grads);
    if (!std::isfinite(loss)) throw NumericalError("SFT loss is not finite");
    opt.step(params.parameters(), std::as_const(grads).parameters());
    return loss;
}

}  // namespace samslab
